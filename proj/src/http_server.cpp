// Eigen must come before httplib: <resolv.h> defines a _res macro.
#include "shadowbl/service.hpp"

#include <httplib.h>

#include <algorithm>
#include <cctype>

namespace shadowbl {

struct HttpServer::Impl {
  explicit Impl(ServiceApi& a) : api(a) {}
  ServiceApi& api;
  httplib::Server server;
};

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace

HttpServer::HttpServer(ServiceApi& api) : impl_(std::make_unique<Impl>(api)) {
  auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    HttpRequest r;
    r.method = req.method;
    r.path = req.path;
    r.body = req.body;
    for (const auto& [k, v] : req.headers) r.headers[lower(k)] = v;
    const HttpResponse out = impl_->api.handle(r);
    res.status = out.status;
    for (const auto& [k, v] : out.headers) {
      if (k != "content-type") res.set_header(k, v);
    }
    auto ct = out.headers.find("content-type");
    if (!out.body.empty()) {
      res.set_content(out.body, ct == out.headers.end() ? "text/plain" : ct->second.c_str());
    }
  };
  const char* pattern = R"(/.*)";
  impl_->server.Get(pattern, handler);
  impl_->server.Post(pattern, handler);
  impl_->server.Put(pattern, handler);
  impl_->server.Delete(pattern, handler);
}

HttpServer::~HttpServer() { stop(); }

bool HttpServer::bind(const std::string& host, int port) {
  if (port == 0) {
    port_ = impl_->server.bind_to_any_port(host);
    return port_ > 0;
  }
  port_ = port;
  return impl_->server.bind_to_port(host, port);
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace shadowbl
