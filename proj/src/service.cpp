#include "shadowbl/service.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "shadowbl/allocation.hpp"
#include "shadowbl/equilibrium.hpp"
#include "shadowbl/pipeline.hpp"
#include "shadowbl/reference_model.hpp"
#include "shadowbl/solver.hpp"

namespace fs = std::filesystem;

namespace shadowbl {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  const auto ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900,
                tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
  return buf;
}

void write_atomically(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << text;
    out.flush();
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("rename failed for " + path.string() + ": " + ec.message());
}

}  // namespace

ScenarioStore::ScenarioStore(std::string directory) : dir_(std::move(directory)) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw IoError("cannot create store directory " + dir_ + ": " + ec.message());
  load_index();
}

void ScenarioStore::load_index() {
  const fs::path p = fs::path(dir_) / "index.json";
  if (!fs::exists(p)) return;
  std::ifstream in(p);
  if (!in) throw IoError("cannot read " + p.string());
  json j;
  try {
    in >> j;
    for (const auto& [id, e] : j.at("scenarios").items()) {
      index_[id] = Entry{e.at("revision").get<int>(), e.at("created_at").get<std::string>(),
                         e.at("updated_at").get<std::string>(), e.at("deleted").get<bool>()};
    }
  } catch (const json::exception& e) {
    throw IoError("corrupt index " + p.string() + ": " + e.what());
  }
}

void ScenarioStore::write_index() const {
  ordered_json j;
  ordered_json entries = ordered_json::object();
  for (const auto& [id, e] : index_) {
    entries[id] = {{"revision", e.revision},
                   {"created_at", e.created_at},
                   {"updated_at", e.updated_at},
                   {"deleted", e.deleted}};
  }
  j["scenarios"] = std::move(entries);
  write_atomically(fs::path(dir_) / "index.json", j.dump(2) + "\n");
}

std::string ScenarioStore::revision_path(const std::string& id, int revision) const {
  return (fs::path(dir_) / (id + ".r" + std::to_string(revision) + ".scenario")).string();
}

std::string ScenarioStore::new_id() const {
  static thread_local std::mt19937_64 gen{std::random_device{}()};
  for (;;) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "sc_%016llx", static_cast<unsigned long long>(gen()));
    if (!index_.count(buf)) return buf;
  }
}

StoredScenario ScenarioStore::snapshot(const std::string& id, const Entry& e) const {
  StoredScenario s{id, e.revision, e.created_at, e.updated_at, nullptr};
  const auto key = std::make_pair(id, e.revision);
  auto it = files_.find(key);
  if (it == files_.end()) {
    auto file = std::make_shared<const ScenarioFile>(load_scenario_file(revision_path(id, e.revision)));
    it = files_.emplace(key, std::move(file)).first;
  }
  s.scenario = it->second;
  return s;
}

StoredScenario ScenarioStore::create(ScenarioFile scenario) {
  std::lock_guard lock(mutex_);
  const std::string id = new_id();
  const std::string now = utc_now();
  Entry e{1, now, now, false};
  save_scenario_file(scenario, revision_path(id, 1));
  index_[id] = e;
  try {
    write_index();
  } catch (...) {
    index_.erase(id);
    throw;
  }
  files_[{id, 1}] = std::make_shared<const ScenarioFile>(std::move(scenario));
  return snapshot(id, e);
}

std::optional<StoredScenario> ScenarioStore::get(const std::string& id) const {
  std::lock_guard lock(mutex_);
  auto it = index_.find(id);
  if (it == index_.end() || it->second.deleted) return std::nullopt;
  return snapshot(id, it->second);
}

std::optional<StoredScenario> ScenarioStore::get(const std::string& id, int revision) const {
  std::lock_guard lock(mutex_);
  auto it = index_.find(id);
  if (it == index_.end() || revision < 1 || revision > it->second.revision) return std::nullopt;
  Entry e = it->second;
  e.revision = revision;
  return snapshot(id, e);
}

StoredScenario ScenarioStore::update(const std::string& id, std::optional<int> expected_revision,
                                     ScenarioFile scenario) {
  std::lock_guard lock(mutex_);
  auto it = index_.find(id);
  if (it == index_.end() || it->second.deleted) throw NotFound("unknown scenario " + id);
  Entry& e = it->second;
  if (expected_revision && *expected_revision != e.revision) {
    throw RevisionConflict(*expected_revision, e.revision);
  }
  const Entry before = e;
  save_scenario_file(scenario, revision_path(id, e.revision + 1));
  e.revision += 1;
  e.updated_at = utc_now();
  try {
    write_index();
  } catch (...) {
    e = before;
    throw;
  }
  files_[{id, e.revision}] = std::make_shared<const ScenarioFile>(std::move(scenario));
  return snapshot(id, e);
}

void ScenarioStore::remove(const std::string& id, std::optional<int> expected_revision) {
  std::lock_guard lock(mutex_);
  auto it = index_.find(id);
  if (it == index_.end() || it->second.deleted) throw NotFound("unknown scenario " + id);
  Entry& e = it->second;
  if (expected_revision && *expected_revision != e.revision) {
    throw RevisionConflict(*expected_revision, e.revision);
  }
  const Entry before = e;
  e.deleted = true;
  e.updated_at = utc_now();
  try {
    write_index();
  } catch (...) {
    e = before;
    throw;
  }
}

// ---------------------------------------------------------------------------

namespace {

HttpResponse json_response(int status, const ordered_json& body) {
  HttpResponse r;
  r.status = status;
  r.body = body.dump(2) + "\n";
  r.headers["content-type"] = "application/json";
  return r;
}

HttpResponse error_response(int status, const std::string& code, const std::string& message,
                            ordered_json extra = ordered_json::object()) {
  ordered_json err;
  err["code"] = code;
  err["message"] = message;
  for (auto& [k, v] : extra.items()) err[k] = v;
  return json_response(status, ordered_json{{"error", std::move(err)}});
}

ordered_json issues_json(const ValidationReport& report) {
  ordered_json a = ordered_json::array();
  for (const auto& i : report.issues) {
    a.push_back({{"severity", i.severity == Severity::error ? "error" : "warning"},
                 {"path", i.path},
                 {"message", i.message}});
  }
  return a;
}

ordered_json vec_json(const Vector& v) {
  ordered_json a = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

ordered_json mat_json(const Matrix& m) {
  ordered_json a = ordered_json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) a.push_back(vec_json(m.row(r).transpose()));
  return a;
}

ordered_json metrics_json(const PortfolioMetrics& m) {
  return {{"expected_return", m.expected_return}, {"risk", m.risk}};
}

ordered_json meta_json(const StoredScenario& s) {
  return {{"id", s.id},
          {"revision", s.revision},
          {"created_at", s.created_at},
          {"updated_at", s.updated_at}};
}

void set_revision(HttpResponse& r, int revision) {
  r.headers[kRevisionHeader] = std::to_string(revision);
}

/// Parse result of the revision header: absent, valid, or malformed.
struct RevisionHeader {
  std::optional<int> value;
  bool malformed = false;
};

RevisionHeader revision_header(const HttpRequest& r) {
  RevisionHeader out;
  auto it = r.headers.find(kRevisionHeader);
  if (it == r.headers.end()) return out;
  try {
    std::size_t used = 0;
    out.value = std::stoi(it->second, &used);
    out.malformed = used != it->second.size();
  } catch (const std::exception&) {
    out.malformed = true;
  }
  return out;
}

std::variant<ScenarioFile, HttpResponse> parse_body(const std::string& body) {
  std::optional<ScenarioFile> file;
  try {
    file = parse_scenario(body);
  } catch (const ParseError& e) {
    return error_response(422, "parse_error", e.what(), {{"path", e.path()}});
  } catch (const DimensionError& e) {
    return error_response(422, "dimension_error", e.what());
  } catch (const Error& e) {
    return error_response(422, "invalid_scenario", e.what());
  }
  const ValidationReport report = validate(*file);
  if (!report.ok()) {
    return error_response(422, "validation_failed", "scenario failed validation",
                          {{"issues", issues_json(report)}});
  }
  return std::move(*file);
}

struct ComputeParams {
  double tau = 0.0;
  Gamma gamma = Gamma::lambda_conditioned;
  std::optional<double> c;
  std::optional<Vector> q_overrides;
  std::optional<Matrix> P_overrides;
  std::string objective = "unconstrained";
  std::optional<double> sigma_cap;
  std::optional<std::vector<std::size_t>> info_set;
  EquilibriumMode mode = EquilibriumMode::first_order;
  double delta = 0.0;

  ordered_json canonical() const {
    ordered_json j;
    j["tau"] = tau;
    j["gamma"] = to_int(gamma);
    j["c"] = c ? ordered_json(*c) : ordered_json(nullptr);
    j["q_overrides"] = q_overrides ? vec_json(*q_overrides) : ordered_json(nullptr);
    j["P_overrides"] = P_overrides ? mat_json(*P_overrides) : ordered_json(nullptr);
    j["objective"] = objective;
    j["sigma_cap"] = sigma_cap ? ordered_json(*sigma_cap) : ordered_json(nullptr);
    j["info_set"] = info_set ? ordered_json(*info_set) : ordered_json(nullptr);
    j["equilibrium"] = to_string(mode);
    j["delta"] = delta;
    return j;
  }
};

class ParamError : public Error {
 public:
  ParamError(std::string field, const std::string& message)
      : Error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

double param_number(const json& j, const char* key) {
  const json& v = j.at(key);
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const auto& s = v.get_ref<const std::string&>();
    char* end = nullptr;
    const double x = std::strtod(s.c_str(), &end);
    if (!s.empty() && end == s.c_str() + s.size()) return x;
  }
  throw ParamError(key, "expected a number");
}

ComputeParams parse_params(const std::string& body, const ScenarioFile& file) {
  json j = json::object();
  if (!body.empty()) {
    try {
      j = json::parse(body);
    } catch (const json::parse_error& e) {
      throw ParamError("$", std::string("syntax error: ") + e.what());
    }
  }
  if (!j.is_object()) throw ParamError("$", "expected an object");
  static const char* known[] = {"tau",       "gamma",     "c",        "q_overrides",
                                "P_overrides", "objective", "sigma_cap", "info_set",
                                "equilibrium", "delta"};
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || item.key() == k;
    if (!ok) throw ParamError(item.key(), "unknown parameter");
  }
  ComputeParams p;
  const auto n = file.market.n();
  p.tau = j.contains("tau") ? param_number(j, "tau") : file.shadow_costs.tau;
  if (!(p.tau > 0.0) || !std::isfinite(p.tau)) throw ParamError("tau", "must be > 0");
  if (j.contains("gamma")) {
    if (!j["gamma"].is_number_integer()) throw ParamError("gamma", "must be 0 or 1");
    const int g = j["gamma"].get<int>();
    if (g != 0 && g != 1) throw ParamError("gamma", "must be 0 or 1");
    p.gamma = gamma_from_int(g);
  }
  if (j.contains("c")) {
    p.c = param_number(j, "c");
    if (!(*p.c > 0.0 && *p.c < 1.0)) throw ParamError("c", "must lie in (0, 1)");
  }
  if (j.contains("P_overrides")) {
    const json& m = j["P_overrides"];
    if (!m.is_array()) throw ParamError("P_overrides", "expected an array of rows");
    Matrix P(static_cast<Eigen::Index>(m.size()), n);
    for (std::size_t r = 0; r < m.size(); ++r) {
      if (!m[r].is_array() || static_cast<Eigen::Index>(m[r].size()) != n) {
        throw ParamError("P_overrides", "row " + std::to_string(r) + " must have " +
                                            std::to_string(n) + " numbers");
      }
      for (std::size_t c = 0; c < m[r].size(); ++c) {
        if (!m[r][c].is_number()) throw ParamError("P_overrides", "expected numbers");
        P(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = m[r][c].get<double>();
      }
    }
    p.P_overrides = std::move(P);
  }
  if (j.contains("q_overrides")) {
    const json& a = j["q_overrides"];
    if (!a.is_array()) throw ParamError("q_overrides", "expected an array of numbers");
    Vector q(static_cast<Eigen::Index>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (!a[i].is_number()) throw ParamError("q_overrides", "expected numbers");
      q(static_cast<Eigen::Index>(i)) = a[i].get<double>();
    }
    p.q_overrides = std::move(q);
  }
  if (j.contains("objective")) {
    if (!j["objective"].is_string()) throw ParamError("objective", "expected a string");
    p.objective = j["objective"].get<std::string>();
    if (p.objective != "unconstrained" && p.objective != "risk_constrained" &&
        p.objective != "risk_budget" && p.objective != "min_variance") {
      throw ParamError("objective", "unknown objective \"" + p.objective + "\"");
    }
  }
  if (j.contains("sigma_cap")) {
    p.sigma_cap = param_number(j, "sigma_cap");
    if (!(*p.sigma_cap > 0.0)) throw ParamError("sigma_cap", "must be > 0");
  }
  if ((p.objective == "risk_constrained" || p.objective == "risk_budget") && !p.sigma_cap) {
    throw ParamError("sigma_cap", "required for objective " + p.objective);
  }
  if (j.contains("info_set")) {
    const json& a = j["info_set"];
    if (!a.is_array() || a.empty()) throw ParamError("info_set", "expected a nonempty index array");
    std::vector<std::size_t> idx;
    for (const auto& x : a) {
      if (!x.is_number_integer() || x.get<long long>() < 0 || x.get<long long>() >= n) {
        throw ParamError("info_set", "indices must be integers in [0, " + std::to_string(n) + ")");
      }
      idx.push_back(x.get<std::size_t>());
    }
    p.info_set = std::move(idx);
  }
  if (j.contains("equilibrium")) {
    if (!j["equilibrium"].is_string()) throw ParamError("equilibrium", "expected a string");
    try {
      p.mode = equilibrium_mode_from_string(j["equilibrium"].get<std::string>());
    } catch (const DomainError& e) {
      throw ParamError("equilibrium", e.what());
    }
  }
  p.delta = j.contains("delta") ? param_number(j, "delta") : file.market.delta();
  if (!(p.delta > 0.0)) throw ParamError("delta", "must be > 0");
  return p;
}

Objective objective_of(const ComputeParams& p) {
  if (p.objective == "risk_constrained") return RiskConstrained{*p.sigma_cap};
  if (p.objective == "risk_budget") return RiskBudgetConstrained{*p.sigma_cap};
  if (p.objective == "min_variance") return MinVariance{};
  return Unconstrained{};
}

ViewKind infer_kind(const Vector& row) {
  const double s = row.sum();
  if (std::abs(s) <= kViewRowSumTol) return ViewKind::relative;
  if (std::abs(s - 1.0) <= kViewRowSumTol) return ViewKind::absolute;
  throw ParamError("P_overrides", "row sums must be 0 (relative) or 1 (absolute)");
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

ordered_json allocation_json(const AllocationResult& a) {
  ordered_json j;
  j["weights"] = vec_json(a.weights);
  j["metrics"] = metrics_json(a.metrics);
  if (a.two_fund) j["two_fund"] = {{"a", a.two_fund->a}, {"b", a.two_fund->b}};
  return j;
}

ordered_json run_compute(const StoredScenario& stored, const ComputeParams& p,
                         const std::string& hash) {
  const ScenarioFile& file = *stored.scenario;
  const auto& market = file.market;
  const Vector& lambda = file.shadow_costs.lambda;

  const SolveOutcome eq = p.mode == EquilibriumMode::first_order
                              ? first_order_equilibrium(market, lambda)
                              : solve_self_consistent(market, lambda);
  const double lambda_m = eq.weights.dot(lambda);
  const Vector beta = beta_vector(market.sigma(), eq.weights, market.sigma_m());
  const Vector pi = market.pi_c() + extra_excess_returns(lambda, lambda_m, beta);

  const ReferenceModel ref = reference_model(market, file.shadow_costs, p.gamma, pi, p.tau);
  const ReferenceModel prior = view_prior(ref, p.tau);

  // Views after overrides; an empty pick matrix switches views off.
  ViewSet views;
  views.P = Matrix(0, market.n());
  views.q = Vector(0);
  if (file.views) views = file.views->resolve(pi, market.sigma());
  if (p.P_overrides) {
    views.P = *p.P_overrides;
    views.kinds.clear();
    for (Eigen::Index r = 0; r < views.P.rows(); ++r) views.kinds.push_back(infer_kind(views.P.row(r).transpose()));
    if (!p.q_overrides && views.q.size() != views.P.rows()) {
      throw ParamError("q_overrides", "required when P_overrides changes the number of views");
    }
    if (std::holds_alternative<Matrix>(views.uncertainty) && !p.c) {
      views.uncertainty = Confidence{};
    }
  }
  if (p.q_overrides) {
    if (p.q_overrides->size() != views.P.rows()) {
      throw ParamError("q_overrides", "length " + std::to_string(p.q_overrides->size()) +
                                          ", expected " + std::to_string(views.P.rows()));
    }
    views.q = *p.q_overrides;
  }
  if (p.c) views.uncertainty = Confidence{*p.c};

  ShadowCostSpec shadow = file.shadow_costs;
  shadow.tau = p.tau;
  const InformationSet info = p.info_set ? InformationSet{"investor", *p.info_set}
                                         : InformationSet::all(market.n());
  const bool has_views = views.P.rows() > 0;
  const ValidationReport report =
      validate_scenario(market, shadow, has_views ? &views : nullptr, &info);
  if (!report.ok()) {
    throw ParamError("$", "validation failed: " + report.errors().front().path + ": " +
                              report.errors().front().message);
  }

  const PosteriorDistribution post = has_views ? posterior(prior, views, market.sigma())
                                               : posterior(prior, views.P, views.q, Matrix(0, 0));
  const PosteriorDistribution base = posterior(prior, Matrix(0, market.n()), Vector(0), Matrix(0, 0));

  AllocationRequest req{post, info, objective_of(p), p.delta};
  const AllocationResult alloc = allocate(req);
  req.posterior = base;
  std::optional<AllocationResult> baseline;
  std::string baseline_error;
  try {
    baseline = allocate(req);
  } catch (const InfeasibleError& e) {
    baseline_error = e.what();
  }

  ordered_json out;
  out["id"] = stored.id;
  out["revision"] = stored.revision;
  out["params_hash"] = hash;
  out["params"] = p.canonical();
  out["assets"] = market.asset_labels();
  out["equilibrium"] = {{"mode", to_string(p.mode)},
                        {"weights", vec_json(eq.weights)},
                        {"lambda_m", lambda_m},
                        {"delta_lambda", lambda_m / market.market_variance()}};
  out["prior"] = {{"pi", vec_json(pi)}, {"sigma_gamma", mat_json(ref.covariance)}};
  ordered_json pj;
  pj["views"] = views.P.rows();
  pj["mean"] = vec_json(post.mean);
  pj["covariance_diagonal"] = vec_json(post.covariance.diagonal());
  pj["view_gap"] = has_views ? (views.P * post.mean - views.q).norm() : 0.0;
  if (has_views) pj["q"] = vec_json(views.q);
  out["posterior"] = std::move(pj);
  out["allocation"] = allocation_json(alloc);
  if (baseline) {
    out["baseline"] = allocation_json(*baseline);
    out["deltas"] = {{"mean", vec_json(post.mean - base.mean)},
                     {"weights", vec_json(alloc.weights - baseline->weights)},
                     {"expected_return",
                      alloc.metrics.expected_return - baseline->metrics.expected_return},
                     {"risk", alloc.metrics.risk - baseline->metrics.risk}};
  } else {
    out["baseline"] = {{"infeasible", baseline_error}};
  }
  out["feasible"] = true;
  return out;
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::string cur;
  for (char ch : path) {
    if (ch == '/') {
      if (!cur.empty()) parts.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (!cur.empty()) parts.push_back(cur);
  return parts;
}

}  // namespace

HttpResponse ServiceApi::handle(const HttpRequest& request) {
  try {
    std::string path = request.path;
    if (auto q = path.find('?'); q != std::string::npos) path.resize(q);
    const auto parts = split_path(path);
    const std::string& m = request.method;
    if (parts.size() == 1 && parts[0] == "healthz") {
      if (m != "GET") return error_response(405, "method_not_allowed", "use GET");
      return json_response(200, {{"status", "ok"}});
    }
    if (!parts.empty() && parts[0] == "scenarios") {
      if (parts.size() == 1) {
        if (m == "POST") return create(request);
        return error_response(405, "method_not_allowed", "use POST");
      }
      if (parts.size() == 2) {
        if (m == "GET") return read(parts[1]);
        if (m == "PUT") return replace(parts[1], request);
        if (m == "DELETE") return erase(parts[1], request);
        return error_response(405, "method_not_allowed", "use GET, PUT or DELETE");
      }
      if (parts.size() == 3 && parts[2] == "compute") {
        if (m == "POST") return compute(parts[1], request);
        return error_response(405, "method_not_allowed", "use POST");
      }
    }
    return error_response(404, "not_found", "no route for " + m + " " + path);
  } catch (const IoError& e) {
    return error_response(500, "store_error", e.what());
  } catch (const std::exception& e) {
    return error_response(500, "internal_error", e.what());
  }
}

HttpResponse ServiceApi::create(const HttpRequest& r) {
  auto parsed = parse_body(r.body);
  if (auto* err = std::get_if<HttpResponse>(&parsed)) return *err;
  const StoredScenario s = store_.create(std::get<ScenarioFile>(std::move(parsed)));
  HttpResponse resp = json_response(201, meta_json(s));
  resp.headers["location"] = "/scenarios/" + s.id;
  set_revision(resp, s.revision);
  return resp;
}

HttpResponse ServiceApi::read(const std::string& id) {
  const auto s = store_.get(id);
  if (!s) return error_response(404, "not_found", "unknown scenario " + id);
  ordered_json body = meta_json(*s);
  body["scenario"] = ordered_json::parse(serialize_scenario(*s->scenario));
  HttpResponse resp = json_response(200, body);
  set_revision(resp, s->revision);
  return resp;
}

HttpResponse ServiceApi::replace(const std::string& id, const HttpRequest& r) {
  const RevisionHeader rev = revision_header(r);
  if (rev.malformed) return error_response(400, "bad_revision", "malformed revision header");
  if (!rev.value) {
    return error_response(428, "revision_required",
                          std::string("PUT requires the ") + kRevisionHeader + " header");
  }
  if (!store_.get(id)) return error_response(404, "not_found", "unknown scenario " + id);
  auto parsed = parse_body(r.body);
  if (auto* err = std::get_if<HttpResponse>(&parsed)) return *err;
  try {
    const StoredScenario s = store_.update(id, rev.value, std::get<ScenarioFile>(std::move(parsed)));
    HttpResponse resp = json_response(200, meta_json(s));
    set_revision(resp, s.revision);
    return resp;
  } catch (const NotFound& e) {
    return error_response(404, "not_found", e.what());
  } catch (const RevisionConflict& e) {
    return error_response(409, "revision_conflict", e.what(), {{"current_revision", e.actual()}});
  }
}

HttpResponse ServiceApi::erase(const std::string& id, const HttpRequest& r) {
  const RevisionHeader rev = revision_header(r);
  if (rev.malformed) return error_response(400, "bad_revision", "malformed revision header");
  try {
    store_.remove(id, rev.value);
  } catch (const NotFound& e) {
    return error_response(404, "not_found", e.what());
  } catch (const RevisionConflict& e) {
    return error_response(409, "revision_conflict", e.what(), {{"current_revision", e.actual()}});
  }
  HttpResponse resp;
  resp.status = 204;
  return resp;
}

HttpResponse ServiceApi::compute(const std::string& id, const HttpRequest& r) {
  const RevisionHeader rev = revision_header(r);
  if (rev.malformed) return error_response(400, "bad_revision", "malformed revision header");
  const auto stored = store_.get(id);
  if (!stored) return error_response(404, "not_found", "unknown scenario " + id);
  if (rev.value && *rev.value != stored->revision) {
    return error_response(409, "revision_conflict",
                          "revision mismatch: expected " + std::to_string(*rev.value) +
                              ", current " + std::to_string(stored->revision),
                          {{"current_revision", stored->revision}});
  }
  ComputeParams params;
  try {
    params = parse_params(r.body, *stored->scenario);
  } catch (const ParamError& e) {
    return error_response(422, "invalid_params", e.what(), {{"field", e.field()}});
  }
  const std::string canonical = params.canonical().dump();
  char hash[20];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a(canonical)));
  const std::string key = stored->id + "#" + std::to_string(stored->revision) + "#" + canonical;
  {
    std::lock_guard lock(cache_mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) {
      return it->second;
    }
  }
  ordered_json body;
  try {
    body = run_compute(*stored, params, hash);
  } catch (const ParamError& e) {
    return error_response(422, "invalid_params", e.what(), {{"field", e.field()}});
  } catch (const InfeasibleError& e) {
    return error_response(422, "infeasible", e.what(), {{"min_risk", e.min_risk()}});
  } catch (const NoEquilibriumError& e) {
    return error_response(422, "no_equilibrium", e.what());
  } catch (const Error& e) {
    return error_response(422, "compute_failed", e.what());
  }
  HttpResponse resp = json_response(200, body);
  set_revision(resp, stored->revision);
  std::lock_guard lock(cache_mutex_);
  cache_.emplace(key, resp);
  return resp;
}

std::size_t ServiceApi::cache_size() const {
  std::lock_guard lock(cache_mutex_);
  return cache_.size();
}

}  // namespace shadowbl
