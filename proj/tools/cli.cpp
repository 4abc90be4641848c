#include "cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "shadowbl/kernels.hpp"
#include "shadowbl/pipeline.hpp"

namespace shadowbl::cli {

namespace {

struct Common {
  std::string file;
  std::optional<double> tau;
  std::optional<double> c;
  std::optional<int> gamma;
  std::string mode = "first_order";
  bool full_precision = false;
};

std::string num(double x, bool full) {
  char buf[64];
  std::snprintf(buf, sizeof buf, full ? "%.17g" : "%.4f", x);
  std::string s = buf;
  return s == "-0.0000" ? "0.0000" : s;
}

void print_vector(std::ostream& out, const std::string& label, const Vector& v, bool full) {
  out << label;
  for (Eigen::Index i = 0; i < v.size(); ++i) out << (i ? " " : "  ") << num(v(i), full);
  out << '\n';
}

PipelineOptions options_from(const Common& c) {
  PipelineOptions o;
  o.tau = c.tau;
  o.confidence = c.c;
  if (c.gamma) {
    if (*c.gamma != 0 && *c.gamma != 1) throw DomainError("--gamma must be 0 or 1");
    o.gammas = std::vector<Gamma>{gamma_from_int(*c.gamma)};
  }
  o.mode = equilibrium_mode_from_string(c.mode);
  o.tau_sweep = std::vector<double>{};
  o.confidence_sweep = std::vector<double>{};
  return o;
}

std::vector<std::size_t> parse_assets(const std::string& text, Eigen::Index n) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    int k = 0;
    try {
      k = std::stoi(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size() || item.empty()) throw DomainError("--assets: bad entry \"" + item + "\"");
    if (k < 1 || k > n) {
      throw DomainError("--assets: asset " + std::to_string(k) + " outside 1.." + std::to_string(n));
    }
    out.push_back(static_cast<std::size_t>(k - 1));
  }
  if (out.empty()) throw DomainError("--assets: empty list");
  return out;
}

int cmd_validate(const Common& c, std::ostream& out) {
  const ScenarioFile file = load_scenario_file(c.file);
  const ValidationReport report = validate(file);
  for (const auto& i : report.issues) {
    out << (i.severity == Severity::error ? "error   " : "warning ") << i.path << ": " << i.message
        << '\n';
  }
  out << (report.ok() ? "valid" : "invalid") << " (" << report.errors().size() << " errors, "
      << report.warnings().size() << " warnings)\n";
  return report.ok() ? kExitOk : kExitValidation;
}

int cmd_equilibrium(const Common& c, std::ostream& out) {
  const ScenarioFile file = load_scenario_file(c.file);
  const ReportBundle b = run_pipeline(file, options_from(c));
  out << render_table(b, 4, c.full_precision) << '\n'
      << render_table(b, 5, c.full_precision) << '\n'
      << render_table(b, 6, c.full_precision);
  return kExitOk;
}

int cmd_posterior(const Common& c, std::ostream& out) {
  const ScenarioFile file = load_scenario_file(c.file);
  if (!file.views) throw DomainError("scenario has no views");
  const ReportBundle b = run_pipeline(file, options_from(c));
  const auto& t = *b.table7;
  out << render_table(b, 3, c.full_precision) << '\n';
  for (const auto& r : t.rows) {
    out << r.model << '\n';
    print_vector(out, "  pi*", r.posterior.mean, c.full_precision);
    for (Eigen::Index i = 0; i < r.posterior.covariance.rows(); ++i) {
      print_vector(out, "  Sigma* row " + std::to_string(i + 1),
                   r.posterior.covariance.row(i).transpose(), c.full_precision);
    }
    out << "  ||P pi* - q|| " << num(r.view_gap, c.full_precision) << '\n';
  }
  return kExitOk;
}

int cmd_allocate(const Common& c, const std::string& objective, std::optional<double> sigma_cap,
                 const std::string& assets, std::ostream& out) {
  const ScenarioFile file = load_scenario_file(c.file);
  if (!file.views) throw DomainError("scenario has no views");
  PipelineOptions o = options_from(c);
  if (objective == "unconstrained") {
    o.objective = Unconstrained{};
  } else if (objective == "min_variance") {
    o.objective = MinVariance{};
  } else if (objective == "risk_constrained" || objective == "risk_budget") {
    if (!sigma_cap) throw DomainError("--sigma-cap is required for " + objective);
    if (objective == "risk_constrained") o.objective = RiskConstrained{*sigma_cap};
    else o.objective = RiskBudgetConstrained{*sigma_cap};
  } else {
    throw DomainError("unknown objective \"" + objective + "\"");
  }
  if (!assets.empty()) o.assets = parse_assets(assets, file.market.n());
  const ReportBundle b = run_pipeline(file, o);
  out << "objective " << objective_name(o.objective) << '\n';
  for (const auto& r : b.table7->rows) {
    out << r.model << '\n';
    print_vector(out, "  w", r.allocation.weights, c.full_precision);
    out << "  return " << num(r.allocation.metrics.expected_return, c.full_precision) << " risk "
        << num(r.allocation.metrics.risk, c.full_precision) << '\n';
    if (r.allocation.two_fund) {
      out << "  a " << num(r.allocation.two_fund->a, c.full_precision) << " b "
          << num(r.allocation.two_fund->b, c.full_precision) << '\n';
    }
  }
  return kExitOk;
}

int cmd_report(const Common& c, int table, std::ostream& out) {
  const ScenarioFile file = load_scenario_file(c.file);
  const ReportBundle b = run_pipeline(file, options_from(c));
  out << render_table(b, table, c.full_precision);
  return kExitOk;
}

int cmd_figure(const Common& c, int id, const std::string& path, std::ostream& out) {
  const ScenarioFile file = load_scenario_file(c.file);
  PipelineOptions o = options_from(c);
  o.tau_sweep.reset();
  o.confidence_sweep.reset();
  const std::string data = export_figure_data(run_pipeline(file, o), id);
  if (path.empty() || path == "-") {
    out << data;
    return kExitOk;
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + path);
  f << data;
  if (!f) throw IoError("write failed: " + path);
  return kExitOk;
}

int cmd_sample(const Common& c, long long count, std::uint64_t seed, const std::string& path,
               std::ostream& out) {
  const ScenarioFile file = load_scenario_file(c.file);
  if (!file.views) throw DomainError("scenario has no views");
  if (count < 2) throw DomainError("--count must be >= 2");
  Common cc = c;
  if (!cc.gamma) cc.gamma = 1;
  const ReportBundle b = run_pipeline(file, options_from(cc));
  const auto& post = b.table7->rows.back().posterior;
  const Matrix draws = sample_posterior(post.mean, post.covariance, count, seed);
  Vector mean;
  Matrix cov;
  kernels::sample_moments(draws, mean, cov);
  out << "gamma " << *cc.gamma << " draws " << count << " seed " << seed << '\n';
  print_vector(out, "pi*        ", post.mean, c.full_precision);
  print_vector(out, "sample mean", mean, c.full_precision);
  const Vector se = (post.covariance.diagonal() / static_cast<double>(count)).cwiseSqrt();
  print_vector(out, "std error  ", se, c.full_precision);
  const Matrix rel = ((cov - post.covariance).array() / post.covariance.array().abs()).matrix();
  out << "max relative covariance error " << num(rel.cwiseAbs().maxCoeff(), true) << '\n';
  if (!path.empty()) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write " + path);
    for (std::size_t k = 0; k < b.asset_labels.size(); ++k) f << (k ? "," : "") << b.asset_labels[k];
    f << '\n';
    char buf[32];
    for (Eigen::Index i = 0; i < draws.rows(); ++i) {
      for (Eigen::Index k = 0; k < draws.cols(); ++k) {
        std::snprintf(buf, sizeof buf, "%.10g", draws(i, k));
        f << (k ? "," : "") << buf;
      }
      f << '\n';
    }
    if (!f) throw IoError("write failed: " + path);
  }
  return kExitOk;
}

int cmd_init(const std::string& path, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << serialize_scenario(example_scenario());
  } else {
    save_scenario_file(example_scenario(), path);
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Equilibrium, posterior and allocation under incomplete information and views",
               "shadowbl"};
  app.require_subcommand(1);
  Common common;
  app.add_flag("--full-precision", common.full_precision, "Print 17 significant digits");
  app.add_option("--equilibrium", common.mode, "first_order (default) or exact")
      ->check(CLI::IsMember({"first_order", "exact"}));

  auto add_common = [&](CLI::App* sub, bool with_views) {
    sub->add_option("file", common.file, "Scenario file")->required();
    sub->add_option("--tau", common.tau, "Prior scaling tau");
    sub->add_option("--gamma", common.gamma, "Reference model (0 or 1)");
    if (with_views) sub->add_option("--c", common.c, "View confidence in (0, 1)");
  };

  auto* validate_cmd = app.add_subcommand("validate", "Check a scenario file");
  validate_cmd->add_option("file", common.file, "Scenario file")->required();
  auto* equilibrium_cmd = app.add_subcommand("equilibrium", "Tables 4-6");
  add_common(equilibrium_cmd, false);
  auto* posterior_cmd = app.add_subcommand("posterior", "Posterior moments with views");
  add_common(posterior_cmd, true);

  auto* allocate_cmd = app.add_subcommand("allocate", "Optimal allocation from the posterior");
  add_common(allocate_cmd, true);
  std::string objective;
  std::optional<double> sigma_cap;
  std::string assets;
  allocate_cmd->add_option("--objective", objective,
                           "unconstrained, risk_constrained, risk_budget or min_variance")
      ->required();
  allocate_cmd->add_option("--sigma-cap", sigma_cap, "Risk cap");
  allocate_cmd->add_option("--assets", assets, "Information set, 1-based asset numbers i,j,k");

  auto* report_cmd = app.add_subcommand("report", "Render one table");
  add_common(report_cmd, true);
  int table = 0;
  report_cmd->add_option("--table", table, "3, 4, 5, 6 or 7")->required();

  auto* figure_cmd = app.add_subcommand("figure", "Export figure data as CSV");
  add_common(figure_cmd, true);
  int figure_id = 0;
  std::string figure_out;
  figure_cmd->add_option("--id", figure_id, "Figure 1-7")->required();
  figure_cmd->add_option("--out", figure_out, "Output path (stdout when omitted)");

  auto* sample_cmd = app.add_subcommand("sample", "Draw from the posterior");
  add_common(sample_cmd, true);
  long long count = 100000;
  std::uint64_t seed = 42;
  std::string sample_out;
  sample_cmd->add_option("--count", count, "Number of draws");
  sample_cmd->add_option("--seed", seed, "RNG seed");
  sample_cmd->add_option("--out", sample_out, "Write draws as CSV");

  auto* init_cmd = app.add_subcommand("init", "Write the bundled example scenario");
  std::string init_out;
  init_cmd->add_option("--out", init_out, "Output path (stdout when omitted)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*validate_cmd) return cmd_validate(common, out);
    if (*equilibrium_cmd) return cmd_equilibrium(common, out);
    if (*posterior_cmd) return cmd_posterior(common, out);
    if (*allocate_cmd) return cmd_allocate(common, objective, sigma_cap, assets, out);
    if (*report_cmd) return cmd_report(common, table, out);
    if (*figure_cmd) return cmd_figure(common, figure_id, figure_out, out);
    if (*sample_cmd) return cmd_sample(common, count, seed, sample_out, out);
    if (*init_cmd) return cmd_init(init_out, out);
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const PipelineError& e) {
    err << "error: " << e.what() << '\n';
    switch (e.cause()) {
      case PipelineError::Cause::convergence:
        return kExitNonConvergence;
      case PipelineError::Cause::validation:
      case PipelineError::Cause::infeasible:
        return kExitValidation;
      case PipelineError::Cause::other:
        break;
    }
    return kExitValidation;
  } catch (const NoEquilibriumError& e) {
    err << "error: " << e.what() << '\n';
    return kExitNonConvergence;
  } catch (const SingularJacobianError& e) {
    err << "error: " << e.what() << '\n';
    return kExitNonConvergence;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitUsage;
}

}  // namespace shadowbl::cli
