#include "shadowbl/scenario_io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace shadowbl {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string child(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}
std::string index(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

void reject_unknown(const json& obj, const std::string& path,
                    std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || item.key() == a;
    if (!known) throw ParseError(child(path, item.key()), "unknown key");
  }
}

const json& require_key(const json& obj, const std::string& path, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(child(path, key), "missing required key");
  return *it;
}

const json& require_object(const json& j, const std::string& path) {
  if (!j.is_object()) throw ParseError(path, "expected an object");
  return j;
}

// Numbers may be JSON numbers or decimal strings.
double read_number(const json& j, const std::string& path) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    char* end = nullptr;
    errno = 0;
    const double x = std::strtod(s.c_str(), &end);
    if (!s.empty() && end == s.c_str() + s.size() && errno == 0) return x;
    throw ParseError(path, "not a decimal number: \"" + s + "\"");
  }
  throw ParseError(path, "expected a number");
}

int read_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ParseError(path, "expected an integer");
  return j.get<int>();
}

Vector read_vector(const json& j, const std::string& path) {
  if (!j.is_array()) throw ParseError(path, "expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = read_number(j[i], index(path, i));
  return v;
}

Matrix read_matrix(const json& j, const std::string& path) {
  if (!j.is_array()) throw ParseError(path, "expected an array of rows");
  const std::size_t rows = j.size();
  std::size_t cols = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array()) throw ParseError(index(path, r), "expected an array of numbers");
    if (r == 0) cols = j[r].size();
    if (j[r].size() != cols) {
      throw DimensionError(index(path, r) + ": row has " + std::to_string(j[r].size()) +
                           " entries, expected " + std::to_string(cols));
    }
  }
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          read_number(j[r][c], index(index(path, r), c));
  return m;
}

void expect_length(const Vector& v, Eigen::Index n, const std::string& path) {
  if (v.size() != n) {
    throw DimensionError(path + ": length " + std::to_string(v.size()) + ", expected " +
                         std::to_string(n));
  }
}

void expect_shape(const Matrix& m, Eigen::Index rows, Eigen::Index cols, const std::string& path) {
  if (m.rows() != rows) {
    throw DimensionError(path + ": " + std::to_string(m.rows()) + " rows, expected " +
                         std::to_string(rows));
  }
  if (rows > 0 && m.cols() != cols) {
    throw DimensionError(path + ": " + std::to_string(m.cols()) + " columns, expected " +
                         std::to_string(cols));
  }
}

std::vector<std::string> read_strings(const json& j, const std::string& path) {
  if (!j.is_array()) throw ParseError(path, "expected an array of strings");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_string()) throw ParseError(index(path, i), "expected a string");
    out.push_back(j[i].get<std::string>());
  }
  return out;
}

MarketScenario read_market(const json& j, const std::string& path) {
  require_object(j, path);
  reject_unknown(j, path, {"assets", "covariance", "capm_excess_returns", "risk_free_rate",
                           "expected_market_return", "market_volatility"});
  auto labels = read_strings(require_key(j, path, "assets"), child(path, "assets"));
  const auto n = static_cast<Eigen::Index>(labels.size());
  if (n == 0) throw DimensionError(child(path, "assets") + ": at least one asset required");
  Matrix sigma = read_matrix(require_key(j, path, "covariance"), child(path, "covariance"));
  expect_shape(sigma, n, n, child(path, "covariance"));
  Vector pi_c = read_vector(require_key(j, path, "capm_excess_returns"),
                            child(path, "capm_excess_returns"));
  expect_length(pi_c, n, child(path, "capm_excess_returns"));
  const double r_f = read_number(require_key(j, path, "risk_free_rate"), child(path, "risk_free_rate"));
  const double erm = read_number(require_key(j, path, "expected_market_return"),
                                 child(path, "expected_market_return"));
  const double sm = read_number(require_key(j, path, "market_volatility"),
                                child(path, "market_volatility"));
  return MarketScenario(std::move(labels), std::move(sigma), std::move(pi_c), r_f, erm, sm);
}

ShadowCostSpec read_shadow(const json& j, const std::string& path, Eigen::Index n) {
  require_object(j, path);
  reject_unknown(j, path, {"mean", "covariance", "cross_covariance", "tau", "random_mean"});
  ShadowCostSpec s;
  s.lambda = read_vector(require_key(j, path, "mean"), child(path, "mean"));
  expect_length(s.lambda, n, child(path, "mean"));
  s.Lambda = read_matrix(require_key(j, path, "covariance"), child(path, "covariance"));
  expect_shape(s.Lambda, n, n, child(path, "covariance"));
  s.cross_cov = read_matrix(require_key(j, path, "cross_covariance"), child(path, "cross_covariance"));
  expect_shape(s.cross_cov, n, n, child(path, "cross_covariance"));
  s.tau = read_number(require_key(j, path, "tau"), child(path, "tau"));
  if (auto it = j.find("random_mean"); it != j.end()) {
    const std::string rp = child(path, "random_mean");
    require_object(*it, rp);
    reject_unknown(*it, rp, {"mean", "tau"});
    RandomMean rm;
    rm.lambda_1 = read_vector(require_key(*it, rp, "mean"), child(rp, "mean"));
    expect_length(rm.lambda_1, n, child(rp, "mean"));
    rm.tau_1 = read_number(require_key(*it, rp, "tau"), child(rp, "tau"));
    s.random_mean = std::move(rm);
  }
  return s;
}

ViewSpec read_views(const json& j, const std::string& path, Eigen::Index n) {
  require_object(j, path);
  reject_unknown(j, path, {"pick", "kinds", "q", "stances", "confidence", "omega"});
  ViewSpec v;
  v.P = read_matrix(require_key(j, path, "pick"), child(path, "pick"));
  const auto rows = v.P.rows();
  if (rows == 0) v.P.resize(0, n);
  expect_shape(v.P, rows, n, child(path, "pick"));
  const auto kinds = read_strings(require_key(j, path, "kinds"), child(path, "kinds"));
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    try {
      v.kinds.push_back(view_kind_from_string(kinds[i]));
    } catch (const DomainError& e) {
      throw ParseError(index(child(path, "kinds"), i), e.what());
    }
  }
  if (static_cast<Eigen::Index>(v.kinds.size()) != rows) {
    throw DimensionError(child(path, "kinds") + ": " + std::to_string(v.kinds.size()) +
                         " kinds for " + std::to_string(rows) + " view rows");
  }
  const bool has_q = j.contains("q");
  const bool has_stances = j.contains("stances");
  if (has_q == has_stances) throw ParseError(path, "exactly one of \"q\" or \"stances\" is required");
  if (has_q) {
    Vector q = read_vector(j.at("q"), child(path, "q"));
    expect_length(q, rows, child(path, "q"));
    v.targets = std::move(q);
  } else {
    const auto names = read_strings(j.at("stances"), child(path, "stances"));
    std::vector<Stance> stances;
    for (std::size_t i = 0; i < names.size(); ++i) {
      try {
        stances.push_back(stance_from_string(names[i]));
      } catch (const DomainError& e) {
        throw ParseError(index(child(path, "stances"), i), e.what());
      }
    }
    if (static_cast<Eigen::Index>(stances.size()) != rows) {
      throw DimensionError(child(path, "stances") + ": " + std::to_string(stances.size()) +
                           " stances for " + std::to_string(rows) + " view rows");
    }
    v.targets = std::move(stances);
  }
  const bool has_c = j.contains("confidence");
  const bool has_omega = j.contains("omega");
  if (has_c && has_omega) throw ParseError(path, "\"confidence\" and \"omega\" are exclusive");
  if (has_omega) {
    Matrix omega = read_matrix(j.at("omega"), child(path, "omega"));
    expect_shape(omega, rows, rows, child(path, "omega"));
    v.uncertainty = std::move(omega);
  } else if (has_c) {
    v.uncertainty = Confidence{read_number(j.at("confidence"), child(path, "confidence"))};
  }
  return v;
}

Sweeps read_sweeps(const json& j, const std::string& path) {
  require_object(j, path);
  reject_unknown(j, path, {"tau", "confidence", "gamma"});
  Sweeps s;
  auto doubles = [&](const char* key) {
    std::vector<double> out;
    if (auto it = j.find(key); it != j.end()) {
      const Vector v = read_vector(*it, child(path, key));
      out.assign(v.data(), v.data() + v.size());
    }
    return out;
  };
  s.tau = doubles("tau");
  s.confidence = doubles("confidence");
  if (auto it = j.find("gamma"); it != j.end()) {
    const std::string gp = child(path, "gamma");
    if (!it->is_array()) throw ParseError(gp, "expected an array of integers");
    for (std::size_t i = 0; i < it->size(); ++i) {
      const int g = read_int((*it)[i], index(gp, i));
      if (g != 0 && g != 1) throw ParseError(index(gp, i), "gamma must be 0 or 1");
      s.gamma.push_back(g);
    }
  }
  return s;
}

ordered_json write_vector(const Vector& v) {
  ordered_json a = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

ordered_json write_matrix(const Matrix& m) {
  ordered_json a = ordered_json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) a.push_back(write_vector(m.row(r).transpose()));
  return a;
}

bool all_scalars(const ordered_json& a) {
  for (const auto& x : a)
    if (x.is_structured()) return false;
  return true;
}

// Like dump(2), but arrays of scalars stay on one line so matrices read row by row.
void pretty(std::ostream& os, const ordered_json& j, int indent) {
  const std::string pad(static_cast<std::size_t>(indent), ' ');
  const std::string inner(static_cast<std::size_t>(indent + 2), ' ');
  if (j.is_object()) {
    if (j.empty()) {
      os << "{}";
      return;
    }
    os << "{\n";
    std::size_t i = 0;
    for (const auto& [k, v] : j.items()) {
      os << inner << ordered_json(k).dump() << ": ";
      pretty(os, v, indent + 2);
      os << (++i < j.size() ? ",\n" : "\n");
    }
    os << pad << '}';
  } else if (j.is_array() && !all_scalars(j)) {
    os << "[\n";
    for (std::size_t i = 0; i < j.size(); ++i) {
      os << inner;
      pretty(os, j[i], indent + 2);
      os << (i + 1 < j.size() ? ",\n" : "\n");
    }
    os << pad << ']';
  } else if (j.is_array()) {
    os << '[';
    for (std::size_t i = 0; i < j.size(); ++i) os << (i ? ", " : "") << j[i].dump();
    os << ']';
  } else {
    os << j.dump();
  }
}

}  // namespace

ViewSet ViewSpec::resolve(const Vector& pi, const Matrix& sigma) const {
  ViewSet out;
  out.P = P;
  out.kinds = kinds;
  out.uncertainty = uncertainty;
  if (const auto* q = std::get_if<Vector>(&targets)) {
    out.q = *q;
  } else {
    out.q = quantify_qualitative_views(P, pi, sigma, std::get<std::vector<Stance>>(targets));
  }
  return out;
}

bool ViewSpec::operator==(const ViewSpec& o) const {
  auto mat_eq = [](const Matrix& a, const Matrix& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
  };
  if (!mat_eq(P, o.P) || kinds != o.kinds || targets.index() != o.targets.index() ||
      uncertainty.index() != o.uncertainty.index()) {
    return false;
  }
  if (const auto* q = std::get_if<Vector>(&targets)) {
    const auto& oq = std::get<Vector>(o.targets);
    if (q->size() != oq.size() || *q != oq) return false;
  } else if (std::get<std::vector<Stance>>(targets) != std::get<std::vector<Stance>>(o.targets)) {
    return false;
  }
  if (const auto* c = std::get_if<Confidence>(&uncertainty)) {
    return *c == std::get<Confidence>(o.uncertainty);
  }
  return mat_eq(std::get<Matrix>(uncertainty), std::get<Matrix>(o.uncertainty));
}

bool ScenarioFile::operator==(const ScenarioFile& o) const {
  return schema_version == o.schema_version && market == o.market &&
         shadow_costs == o.shadow_costs && views == o.views && sweeps == o.sweeps;
}

ScenarioFile parse_scenario(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("$", std::string("syntax error: ") + e.what());
  }
  const std::string rp = "$";
  if (!root.is_object()) throw ParseError(rp, "expected an object");
  reject_unknown(root, "", {"schema_version", "market", "shadow_costs", "views", "sweeps"});
  const int version = read_int(require_key(root, "", "schema_version"), "schema_version");
  if (version != kSchemaVersion) {
    throw ParseError("schema_version", "unsupported version " + std::to_string(version));
  }
  MarketScenario market = read_market(require_key(root, "", "market"), "market");
  ShadowCostSpec shadow = read_shadow(require_key(root, "", "shadow_costs"), "shadow_costs", market.n());
  std::optional<ViewSpec> views;
  if (auto it = root.find("views"); it != root.end()) views = read_views(*it, "views", market.n());
  Sweeps sweeps;
  if (auto it = root.find("sweeps"); it != root.end()) sweeps = read_sweeps(*it, "sweeps");
  return ScenarioFile{version, std::move(market), std::move(shadow), std::move(views),
                      std::move(sweeps)};
}

std::string serialize_scenario(const ScenarioFile& file) {
  ordered_json root;
  root["schema_version"] = file.schema_version;
  const auto& m = file.market;
  ordered_json market;
  market["assets"] = m.asset_labels();
  market["covariance"] = write_matrix(m.sigma());
  market["capm_excess_returns"] = write_vector(m.pi_c());
  market["risk_free_rate"] = m.r_f();
  market["expected_market_return"] = m.expected_market_return();
  market["market_volatility"] = m.sigma_m();
  root["market"] = std::move(market);

  const auto& s = file.shadow_costs;
  ordered_json shadow;
  shadow["mean"] = write_vector(s.lambda);
  shadow["covariance"] = write_matrix(s.Lambda);
  shadow["cross_covariance"] = write_matrix(s.cross_cov);
  shadow["tau"] = s.tau;
  if (s.random_mean) {
    ordered_json rm;
    rm["mean"] = write_vector(s.random_mean->lambda_1);
    rm["tau"] = s.random_mean->tau_1;
    shadow["random_mean"] = std::move(rm);
  }
  root["shadow_costs"] = std::move(shadow);

  if (file.views) {
    const auto& v = *file.views;
    ordered_json views;
    views["pick"] = write_matrix(v.P);
    ordered_json kinds = ordered_json::array();
    for (ViewKind k : v.kinds) kinds.push_back(to_string(k));
    views["kinds"] = std::move(kinds);
    if (const auto* q = std::get_if<Vector>(&v.targets)) {
      views["q"] = write_vector(*q);
    } else {
      ordered_json st = ordered_json::array();
      for (Stance x : std::get<std::vector<Stance>>(v.targets)) st.push_back(to_string(x));
      views["stances"] = std::move(st);
    }
    if (const auto* c = std::get_if<Confidence>(&v.uncertainty)) {
      views["confidence"] = c->c;
    } else {
      views["omega"] = write_matrix(std::get<Matrix>(v.uncertainty));
    }
    root["views"] = std::move(views);
  }

  if (!file.sweeps.empty()) {
    ordered_json sw;
    if (!file.sweeps.tau.empty()) sw["tau"] = file.sweeps.tau;
    if (!file.sweeps.confidence.empty()) sw["confidence"] = file.sweeps.confidence;
    if (!file.sweeps.gamma.empty()) sw["gamma"] = file.sweeps.gamma;
    root["sweeps"] = std::move(sw);
  }
  std::ostringstream os;
  pretty(os, root, 0);
  os << '\n';
  return os.str();
}

ValidationReport validate(const ScenarioFile& file) {
  if (!file.views) return validate_scenario(file.market, file.shadow_costs);
  ViewSet views;
  try {
    views = file.views->resolve(file.market.pi_c(), file.market.sigma());
  } catch (const Error& e) {
    ValidationReport r;
    r.issues.push_back({Severity::error, "views", e.what()});
    return r;
  }
  return validate_scenario(file.market, file.shadow_costs, &views);
}

ScenarioFile load_scenario_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("read failed: " + path);
  return parse_scenario(buf.str());
}

void save_scenario_file(const ScenarioFile& file, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << serialize_scenario(file);
  if (!out) throw IoError("write failed: " + path);
}

ScenarioFile example_scenario() {
  Matrix sigma(5, 5);
  sigma << 0.05, 0.02, 0.04, 0.03, 0.01,
           0.02, 0.08, 0.02, 0.02, 0.03,
           0.04, 0.02, 0.09, 0.01, 0.02,
           0.03, 0.02, 0.01, 0.07, 0.01,
           0.01, 0.03, 0.02, 0.01, 0.06;
  Vector pi_c(5);
  pi_c << 0.01, 0.03, 0.015, 0.04, 0.035;
  MarketScenario market({"Asset 1", "Asset 2", "Asset 3", "Asset 4", "Asset 5"}, sigma, pi_c, 0.02, 0.04, 0.05);

  ShadowCostSpec shadow;
  shadow.lambda.resize(5);
  shadow.lambda << 0.01, 0.025, 0.02, 0.015, 0.03;
  Vector lambda_diag(5);
  lambda_diag << 0.08, 0.012, 0.02, 0.05, 0.01;
  shadow.Lambda = lambda_diag.asDiagonal();
  shadow.cross_cov.resize(5, 5);
  shadow.cross_cov << 0.01, 0.02, 0.04, 0.03, 0.05,
                      0.02, 0.02, 0.1, 0.024, 0.04,
                      0.04, 0.1, 0.05, 0.013, 0.06,
                      0.03, 0.024, 0.13, 0.06, 0.04,
                      0.05, 0.04, 0.06, 0.04, 0.09;
  shadow.tau = 0.5;

  ViewSpec views;
  views.P.resize(4, 5);
  views.P << 1, -1, 0, 0, 0,
             0, 1, 0, 0, 0,
             -0.2, 0.1, -0.8, 0, 0.9,
             0, 0, 0, 0, 1;
  views.kinds = {ViewKind::relative, ViewKind::absolute, ViewKind::relative, ViewKind::absolute};
  Vector q(4);
  q << 0.05, 0.03, 0.08, 0.1;
  views.targets = q;
  views.uncertainty = Confidence{0.5};

  Sweeps sweeps;
  sweeps.tau = {0.1, 0.5, 0.9};
  sweeps.confidence = {0.01, 0.5, 0.99};
  sweeps.gamma = {0, 1};
  return ScenarioFile{kSchemaVersion, std::move(market), std::move(shadow), std::move(views),
                      std::move(sweeps)};
}

}  // namespace shadowbl
