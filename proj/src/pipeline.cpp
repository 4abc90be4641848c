#include "shadowbl/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <iomanip>
#include <limits>
#include <sstream>

#include "shadowbl/kernels.hpp"

namespace shadowbl {

namespace {

PipelineError::Cause classify(const std::exception& e) {
  using Cause = PipelineError::Cause;
  if (dynamic_cast<const NoEquilibriumError*>(&e) || dynamic_cast<const SingularJacobianError*>(&e))
    return Cause::convergence;
  if (dynamic_cast<const InfeasibleError*>(&e)) return Cause::infeasible;
  if (dynamic_cast<const DimensionError*>(&e) || dynamic_cast<const DomainError*>(&e) ||
      dynamic_cast<const FactorizationError*>(&e) || dynamic_cast<const ParseError*>(&e))
    return Cause::validation;
  return Cause::other;
}

template <class F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const PipelineError&) {
    throw;
  } catch (const std::exception& e) {
    throw PipelineError(name, classify(e), e.what());
  }
}

std::vector<Gamma> gammas_for(const ScenarioFile& file, const PipelineOptions& options) {
  if (options.gammas) return *options.gammas;
  if (!file.sweeps.gamma.empty()) {
    std::vector<Gamma> out;
    for (int g : file.sweeps.gamma) out.push_back(gamma_from_int(g));
    return out;
  }
  return {Gamma::conditional_expectation, Gamma::lambda_conditioned};
}

double tau_for(const ScenarioFile& file, const PipelineOptions& options) {
  return options.tau.value_or(file.shadow_costs.tau);
}

ViewSet views_for(const ScenarioFile& file, const Vector& pi, std::optional<double> confidence) {
  ViewSet views = file.views->resolve(pi, file.market.sigma());
  if (confidence) views.uncertainty = Confidence{*confidence};
  return views;
}

PosteriorRow make_row(std::string model, PosteriorDistribution post, const ViewSet& views,
                      const PipelineOptions& options, double delta) {
  PosteriorRow row;
  row.model = std::move(model);
  row.view_gap = (views.P * post.mean - views.q).norm();
  AllocationRequest req;
  req.posterior = post;
  req.info_set = options.assets ? InformationSet{"investor", *options.assets}
                                : InformationSet::all(post.mean.size());
  req.objective = options.objective;
  req.delta = delta;
  row.allocation = allocate(req);
  row.posterior = std::move(post);
  return row;
}

}  // namespace

const char* to_string(EquilibriumMode m) {
  return m == EquilibriumMode::first_order ? "first_order" : "exact";
}

EquilibriumMode equilibrium_mode_from_string(std::string_view s) {
  if (s == "first_order") return EquilibriumMode::first_order;
  if (s == "exact") return EquilibriumMode::exact;
  throw DomainError("unknown equilibrium mode \"" + std::string(s) + "\"");
}

Table6Block reference_block(const ScenarioFile& file, const Vector& pi, double tau,
                            const std::vector<Gamma>& gammas) {
  Table6Block block;
  block.tau = tau;
  block.pi = pi;
  for (Gamma g : gammas) {
    const ReferenceModel model = reference_model(file.market, file.shadow_costs, g, pi, tau);
    ReferenceRow row;
    row.gamma = g;
    row.sigma_gamma = model.covariance;
    row.weights = reference_model_portfolio(pi, model.covariance, file.market.delta());
    row.metrics = portfolio_metrics(row.weights, pi, model.covariance, 0.0);
    block.rows.push_back(std::move(row));
  }
  return block;
}

Table7Block posterior_block(const ScenarioFile& file, const Vector& pi, const ViewSet& views,
                            double tau, const std::vector<Gamma>& gammas,
                            const PipelineOptions& options) {
  const auto& market = file.market;
  const double delta = options.delta.value_or(market.delta());
  Table7Block block;
  block.tau = tau;
  const auto* c = std::get_if<Confidence>(&views.uncertainty);
  block.confidence = c ? c->c : std::numeric_limits<double>::quiet_NaN();
  block.omega = view_uncertainty(views, market.sigma());
  block.q = views.q;
  block.rows.push_back(make_row("bl", bl_posterior(market, tau, views), views, options, delta));
  for (Gamma g : gammas) {
    const ReferenceModel ref = reference_model(market, file.shadow_costs, g, pi, tau);
    PosteriorDistribution post = posterior(view_prior(ref, tau), views, market.sigma());
    block.rows.push_back(
        make_row("gamma" + std::to_string(to_int(g)), std::move(post), views, options, delta));
  }
  return block;
}

ReportBundle run_pipeline(const ScenarioFile& file, const PipelineOptions& options) {
  const auto& market = file.market;
  const Vector& lambda = file.shadow_costs.lambda;
  const double tau = tau_for(file, options);
  const std::vector<Gamma> gammas = stage("options", [&] { return gammas_for(file, options); });

  stage("validate", [&] {
    ShadowCostSpec shadow = file.shadow_costs;
    shadow.tau = tau;
    std::optional<ViewSet> views;
    if (file.views) views = views_for(file, market.pi_c(), options.confidence);
    std::optional<InformationSet> info;
    if (options.assets) info = InformationSet{"investor", *options.assets};
    const ValidationReport report =
        validate_scenario(market, shadow, views ? &*views : nullptr, info ? &*info : nullptr);
    if (!report.ok()) {
      const Issue first = report.errors().front();
      throw PipelineError("validate", PipelineError::Cause::validation,
                          first.path + ": " + first.message);
    }
    return 0;
  });

  ReportBundle out;
  out.asset_labels = market.asset_labels();

  const SolveOutcome eq = stage("equilibrium", [&] {
    return options.mode == EquilibriumMode::first_order ? first_order_equilibrium(market, lambda)
                                                        : solve_self_consistent(market, lambda);
  });

  auto& t4 = out.table4;
  auto& t5 = out.table5;
  stage("equilibrium", [&] {
    t5.delta = market.delta();
    t5.mode = options.mode;
    t5.iterations = eq.iterations;
    t5.residual_norm = eq.residual_norm;
    t5.lambda_m = eq.weights.dot(lambda);
    t5.delta_lambda = t5.lambda_m / market.market_variance();
    out.beta = beta_vector(market.sigma(), eq.weights, market.sigma_m());

    t4.pi_c = market.pi_c();
    t4.lambda = lambda;
    t4.extra_excess = extra_excess_returns(lambda, t5.lambda_m, out.beta);
    // pi_c-form of the implied returns, as tabulated.
    t4.pi = market.pi_c() + t4.extra_excess;
    t4.w_capm = capm_weights(market);
    t4.w_market = eq.weights;
    t4.w_investor = investor_optimal_portfolio(market, lambda, t5.delta_lambda);
    t4.capm = portfolio_metrics(t4.w_capm, t4.pi_c, market.sigma(), market.r_f());
    t4.market = portfolio_metrics(t4.w_market, t4.pi, market.sigma(), market.r_f());
    t4.investor = portfolio_metrics(t4.w_investor, t4.pi, market.sigma(), market.r_f());

    out.sensitivities = classify_sensitivity_regimes(lambda, out.beta, eq.weights,
                                                     t5.delta_lambda, market.sigma().diagonal());
    return 0;
  });

  out.table6 = stage("reference", [&] { return reference_block(file, t4.pi, tau, gammas); });

  if (file.shadow_costs.random_mean) {
    out.random_mean = stage("reference", [&] {
      Table6Block block;
      block.tau = tau;
      for (Gamma g : gammas) {
        const ReferenceModel m =
            random_mean_adjusted_model(market, file.shadow_costs, eq.weights, g, tau);
        ReferenceRow row;
        row.gamma = g;
        row.sigma_gamma = m.covariance;
        row.weights = reference_model_portfolio(m.mean, m.covariance, market.delta());
        row.metrics = portfolio_metrics(row.weights, m.mean, m.covariance, 0.0);
        block.pi = m.mean;
        block.rows.push_back(std::move(row));
      }
      return block;
    });
  }

  if (file.views) {
    out.table7 = stage("posterior", [&] {
      return posterior_block(file, t4.pi, views_for(file, t4.pi, options.confidence), tau, gammas,
                             options);
    });
  }

  const auto& taus = options.tau_sweep ? *options.tau_sweep : file.sweeps.tau;
  const auto& cs = options.confidence_sweep ? *options.confidence_sweep : file.sweeps.confidence;
  auto run = [&](std::size_t count, const std::function<void(std::size_t)>& body) {
    if (options.parallel) {
      kernels::parallel_for(count, body);
    } else {
      kernels::serial::parallel_for(count, body);
    }
  };
  stage("sweep", [&] {
    out.tau_sweep.resize(taus.size());
    run(taus.size(), [&](std::size_t i) {
      out.tau_sweep[i] = reference_block(file, t4.pi, taus[i], gammas);
    });
    if (file.views) {
      out.confidence_sweep.resize(cs.size());
      run(cs.size(), [&](std::size_t i) {
        out.confidence_sweep[i] =
            posterior_block(file, t4.pi, views_for(file, t4.pi, cs[i]), tau, gammas, options);
      });
    }
    return 0;
  });
  return out;
}

namespace {

class TableWriter {
 public:
  TableWriter(std::ostream& os, bool full) : os_(os), full_(full) {}

  void header(const std::string& label, const std::vector<std::string>& cols) {
    os_ << std::left << std::setw(kLabel) << label << std::right;
    for (const auto& c : cols) os_ << std::setw(width()) << c;
    os_ << '\n';
  }

  void row(const std::string& label, const Vector& v) {
    os_ << std::left << std::setw(kLabel) << label << std::right;
    for (Eigen::Index i = 0; i < v.size(); ++i) os_ << std::setw(width()) << num(v(i));
    os_ << '\n';
  }

  void row(const std::string& label, std::initializer_list<double> v) {
    row(label, Eigen::Map<const Vector>(v.begin(), static_cast<Eigen::Index>(v.size())));
  }

  void text(const std::string& s) { os_ << s << '\n'; }

  void sci_row(const std::string& label, double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, full_ ? "%.17g" : "%.4e", x);
    os_ << std::left << std::setw(kLabel) << label << std::right << std::setw(width()) << buf
        << '\n';
  }

  std::string num(double x) const {
    char buf[64];
    if (full_) {
      std::snprintf(buf, sizeof buf, "%.17g", x);
    } else {
      std::snprintf(buf, sizeof buf, "%.4f", x);
      if (std::string(buf) == "-0.0000") return "0.0000";
    }
    return buf;
  }

 private:
  static constexpr int kLabel = 30;
  int width() const { return full_ ? 26 : 10; }
  std::ostream& os_;
  bool full_;
};

void render_table6_block(TableWriter& w, const Table6Block& b,
                         const std::vector<std::string>& labels) {
  w.header("tau = " + w.num(b.tau), labels);
  w.row("pi", b.pi);
  for (const auto& r : b.rows) w.row("w gamma=" + std::to_string(to_int(r.gamma)), r.weights);
  for (const auto& r : b.rows) {
    w.row("return, risk gamma=" + std::to_string(to_int(r.gamma)),
          {r.metrics.expected_return, r.metrics.risk});
  }
}

void render_table7_block(TableWriter& w, const Table7Block& b,
                         const std::vector<std::string>& labels) {
  w.header("tau = " + w.num(b.tau) + ", c = " + w.num(b.confidence), labels);
  for (const auto& r : b.rows) {
    w.row(r.model + " pi*", r.posterior.mean);
    w.row(r.model + " w", r.allocation.weights);
  }
  for (const auto& r : b.rows) {
    w.row("return, risk " + r.model,
          {r.allocation.metrics.expected_return, r.allocation.metrics.risk});
  }
}

}  // namespace

std::string render_table(const ReportBundle& b, int table, bool full_precision) {
  std::ostringstream os;
  TableWriter w(os, full_precision);
  const auto& labels = b.asset_labels;
  switch (table) {
    case 3: {
      if (!b.table7) throw DomainError("table 3 requires views");
      const auto& t = *b.table7;
      std::vector<std::string> cols;
      for (Eigen::Index i = 0; i < t.omega.cols(); ++i) cols.push_back("view " + std::to_string(i + 1));
      w.text("Table 3: view uncertainty (c = " + w.num(t.confidence) + ")");
      w.header("", cols);
      w.row("q", t.q);
      for (Eigen::Index r = 0; r < t.omega.rows(); ++r) {
        w.row("omega row " + std::to_string(r + 1), Vector(t.omega.row(r).transpose()));
      }
      break;
    }
    case 4: {
      const auto& t = b.table4;
      w.text("Table 4: complete and incomplete information market, investor");
      w.header("", labels);
      w.row("CAPM pi_c", t.pi_c);
      w.row("CAPM w_M^c", t.w_capm);
      w.row("incomplete extra excess", t.extra_excess);
      w.row("incomplete pi", t.pi);
      w.row("incomplete w_M^lambda", t.w_market);
      w.row("investor w*", t.w_investor);
      w.header("", {"return", "risk"});
      w.row("CAPM", {t.capm.expected_return, t.capm.risk});
      w.row("incomplete", {t.market.expected_return, t.market.risk});
      w.row("investor", {t.investor.expected_return, t.investor.risk});
      break;
    }
    case 5: {
      const auto& t = b.table5;
      w.text(std::string("Table 5: computed parameters (") + to_string(t.mode) + ")");
      w.header("", {"value"});
      w.row("delta", {t.delta});
      w.sci_row("lambda_M", t.lambda_m);
      w.row("delta_lambda", {t.delta_lambda});
      break;
    }
    case 6: {
      w.text("Table 6: reference models");
      render_table6_block(w, b.table6, labels);
      break;
    }
    case 7: {
      if (!b.table7) throw DomainError("table 7 requires views");
      w.text("Table 7: posterior equilibrium with views");
      render_table7_block(w, *b.table7, labels);
      break;
    }
    default:
      throw DomainError("unknown table " + std::to_string(table) + " (expected 3-7)");
  }
  return os.str();
}

namespace {

std::string g10(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

void series(std::ostream& os, const std::string& name, const std::vector<std::string>& labels,
            const Vector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    os << csv_field(name) << ',' << csv_field(labels[static_cast<std::size_t>(i)]) << ','
       << g10(v(i)) << '\n';
  }
}

void matrix_rows(std::ostream& os, const std::string& prefix, const Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      os << prefix << r + 1 << ',' << c + 1 << ',' << g10(m(r, c)) << '\n';
}

}  // namespace

std::string export_figure_data(const ReportBundle& b, int figure_id) {
  std::ostringstream os;
  const auto& labels = b.asset_labels;
  const auto& t4 = b.table4;
  switch (figure_id) {
    case 1:
      os << "series,asset,value\n";
      series(os, "lambda", labels, t4.lambda);
      series(os, "pi", labels, t4.pi);
      break;
    case 2: {
      os << "model,item,value\n";
      const std::pair<const char*, std::pair<const Vector*, PortfolioMetrics>> models[] = {
          {"capm", {&t4.w_capm, t4.capm}},
          {"incomplete", {&t4.w_market, t4.market}},
          {"investor", {&t4.w_investor, t4.investor}}};
      for (const auto& [name, data] : models) {
        series(os, name, labels, *data.first);
        os << name << ",expected_return," << g10(data.second.expected_return) << '\n';
        os << name << ",risk," << g10(data.second.risk) << '\n';
      }
      break;
    }
    case 3: {
      os << "asset,lambda,d_extra_d_lambda,sign_lambda,weight,d_extra_d_weight,sign_weight,regime\n";
      const auto& s = b.sensitivities;
      auto sign = [](double x) { return x < 0.0 ? "negative" : "positive"; };
      for (Eigen::Index k = 0; k < t4.lambda.size(); ++k) {
        os << csv_field(labels[static_cast<std::size_t>(k)]) << ',' << g10(t4.lambda(k)) << ','
           << g10(s.grad_lambda(k)) << ',' << sign(s.grad_lambda(k)) << ','
           << g10(t4.w_market(k)) << ',' << g10(s.grad_weights(k)) << ','
           << sign(s.grad_weights(k)) << ',' << to_string(s.regime[static_cast<std::size_t>(k)])
           << '\n';
      }
      break;
    }
    case 4:
      os << "gamma,tau,row,col,value\n";
      for (const auto& block : b.tau_sweep)
        for (const auto& r : block.rows)
          matrix_rows(os, std::to_string(to_int(r.gamma)) + "," + g10(block.tau) + ",",
                      r.sigma_gamma);
      break;
    case 5:
      os << "gamma,tau,item,value\n";
      for (const auto& block : b.tau_sweep) {
        for (const auto& r : block.rows) {
          const std::string prefix = std::to_string(to_int(r.gamma)) + "," + g10(block.tau);
          for (Eigen::Index k = 0; k < r.weights.size(); ++k) {
            os << prefix << ',' << csv_field(labels[static_cast<std::size_t>(k)]) << ','
               << g10(r.weights(k)) << '\n';
          }
          os << prefix << ",expected_return," << g10(r.metrics.expected_return) << '\n';
          os << prefix << ",risk," << g10(r.metrics.risk) << '\n';
        }
      }
      break;
    case 6:
      os << "model,row,col,value\n";
      if (b.table7) {
        for (const auto& r : b.table7->rows) matrix_rows(os, r.model + ",", r.posterior.covariance);
      }
      break;
    case 7:
      os << "model,confidence,item,value\n";
      for (const auto& block : b.confidence_sweep) {
        for (const auto& r : block.rows) {
          const std::string prefix = r.model + "," + g10(block.confidence);
          const auto& w = r.allocation.weights;
          for (Eigen::Index k = 0; k < w.size(); ++k) {
            os << prefix << ',' << csv_field(labels[static_cast<std::size_t>(k)]) << ','
               << g10(w(k)) << '\n';
          }
          os << prefix << ",expected_return," << g10(r.allocation.metrics.expected_return) << '\n';
          os << prefix << ",risk," << g10(r.allocation.metrics.risk) << '\n';
          os << prefix << ",view_gap," << g10(r.view_gap) << '\n';
        }
      }
      break;
    default:
      throw DomainError("unknown figure " + std::to_string(figure_id) + " (expected 1-7)");
  }
  return os.str();
}

}  // namespace shadowbl
