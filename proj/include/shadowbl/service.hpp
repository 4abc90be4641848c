#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>

#include "shadowbl/scenario_io.hpp"

namespace shadowbl {

struct StoredScenario {
  std::string id;
  int revision = 0;
  std::string created_at;
  std::string updated_at;
  std::shared_ptr<const ScenarioFile> scenario;
};

class RevisionConflict : public Error {
 public:
  RevisionConflict(int expected, int actual)
      : Error("revision mismatch: expected " + std::to_string(expected) + ", current " +
              std::to_string(actual)),
        actual_(actual) {}
  int actual() const noexcept { return actual_; }

 private:
  int actual_;
};

class NotFound : public Error {
 public:
  using Error::Error;
};

/// Directory of scenario files plus index.json. Every mutation writes a new
/// file <id>.r<revision>.scenario; earlier revisions are never rewritten.
/// Writers are serialized; readers get immutable snapshots.
class ScenarioStore {
 public:
  explicit ScenarioStore(std::string directory);

  StoredScenario create(ScenarioFile scenario);
  /// Latest revision; std::nullopt for unknown or deleted ids.
  std::optional<StoredScenario> get(const std::string& id) const;
  /// A specific historical revision.
  std::optional<StoredScenario> get(const std::string& id, int revision) const;
  /// Throws NotFound or RevisionConflict.
  StoredScenario update(const std::string& id, std::optional<int> expected_revision,
                        ScenarioFile scenario);
  void remove(const std::string& id, std::optional<int> expected_revision);

  const std::string& directory() const { return dir_; }

 private:
  struct Entry {
    int revision = 0;
    std::string created_at;
    std::string updated_at;
    bool deleted = false;
  };

  void load_index();
  void write_index() const;
  std::string revision_path(const std::string& id, int revision) const;
  std::string new_id() const;
  StoredScenario snapshot(const std::string& id, const Entry& e) const;

  std::string dir_;
  // Serializes writers; readers hold it only long enough to copy a snapshot.
  mutable std::mutex mutex_;
  std::map<std::string, Entry> index_;
  // (id, revision) -> parsed contents
  mutable std::map<std::pair<std::string, int>, std::shared_ptr<const ScenarioFile>> files_;
};

struct HttpRequest {
  std::string method;
  std::string path;
  /// Header names lower-case.
  std::map<std::string, std::string> headers;
  std::string body;
};

struct HttpResponse {
  int status = 200;
  std::string body;
  std::map<std::string, std::string> headers;
};

/// Header carrying the revision for optimistic concurrency.
inline constexpr const char* kRevisionHeader = "x-revision";

/// Routes requests to the store and the compute path. Independent of any
/// HTTP library so it can be exercised directly.
class ServiceApi {
 public:
  explicit ServiceApi(ScenarioStore& store) : store_(store) {}

  HttpResponse handle(const HttpRequest& request);

  std::size_t cache_size() const;

 private:
  HttpResponse create(const HttpRequest& r);
  HttpResponse read(const std::string& id);
  HttpResponse replace(const std::string& id, const HttpRequest& r);
  HttpResponse erase(const std::string& id, const HttpRequest& r);
  HttpResponse compute(const std::string& id, const HttpRequest& r);

  ScenarioStore& store_;
  mutable std::mutex cache_mutex_;
  std::unordered_map<std::string, HttpResponse> cache_;
};

/// cpp-httplib front end for ServiceApi. bind() with port 0 picks a free port.
class HttpServer {
 public:
  explicit HttpServer(ServiceApi& api);
  ~HttpServer();

  bool bind(const std::string& host, int port);
  int port() const { return port_; }
  /// Blocks until stop().
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = 0;
};

}  // namespace shadowbl
