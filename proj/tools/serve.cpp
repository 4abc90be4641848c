#include <CLI11.hpp>

#include <csignal>
#include <iostream>

#include "shadowbl/service.hpp"

namespace {
shadowbl::HttpServer* g_server = nullptr;
void on_signal(int) {
  if (g_server) g_server->stop();
}
}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HTTP service for scenario storage and what-if computation", "shadowbl-serve"};
  std::string store_dir = "scenarios";
  std::string host = "127.0.0.1";
  int port = 8080;
  app.add_option("--store", store_dir, "Store directory");
  app.add_option("--host", host, "Bind address");
  app.add_option("--port", port, "Port (0 picks a free one)");
  CLI11_PARSE(app, argc, argv);

  try {
    shadowbl::ScenarioStore store(store_dir);
    shadowbl::ServiceApi api(store);
    shadowbl::HttpServer server(api);
    if (!server.bind(host, port)) {
      std::cerr << "cannot bind " << host << ":" << port << '\n';
      return 4;
    }
    g_server = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::cout << "listening on http://" << host << ":" << server.port() << std::endl;
    server.listen();
  } catch (const shadowbl::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  }
  return 0;
}
