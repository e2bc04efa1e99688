#include <chrono>
#include <cmath>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "cbm/app.hpp"
#include "cbm/deformation.hpp"
#include "cbm/hedging.hpp"
#include "cbm/measures.hpp"
#include "cbm/pricing.hpp"

namespace cbm::app {

using nlohmann::json;

namespace {

std::vector<std::vector<double>> hedge_path(const RunConfig& config) {
  if (!config.run.path.empty()) return config.run.path;
  const MarketModel& model = config.model;
  const std::vector<double> b = compute_b(model);
  std::vector<std::vector<double>> path(model.n, std::vector<double>(model.m));
  Rng rng = Rng::stream(config.run.seed, 0);
  for (auto& omega : path) {
    for (std::size_t i = 0; i < model.m; ++i) {
      if (config.run.path_kind == "all-up") {
        omega[i] = 1.0;
      } else if (config.run.path_kind == "all-down") {
        omega[i] = 0.0;
      } else if (config.run.path_kind == "all-b") {
        omega[i] = b[i];
      } else {
        omega[i] = rng.uniform();
      }
    }
  }
  return path;
}

json mc_report_json(const McReport& report) {
  return json{{"measure_kind", to_string(report.kind)},
              {"beta", report.beta},
              {"delta", report.delta},
              {"samples", report.samples},
              {"seed", report.seed},
              {"estimate", report.estimate},
              {"std_error", report.std_error},
              {"gamma_min", report.gamma_min},
              {"gamma_max", report.gamma_max},
              {"verdict", report.verdict ? "pass" : "fail"}};
}

}  // namespace

const std::vector<std::string>& known_faults() {
  static const std::vector<std::string> faults{"perturb-q0"};
  return faults;
}

int cmd_price(const RunConfig& config, std::ostream& out) {
  const OrderedModel model(config.model);
  const MarketState start = initial_state(config.model);

  const auto started = std::chrono::steady_clock::now();
  const double lower = gamma_min(model, config.option, start);
  const GammaMaxResult upper = gamma_max_detailed(model, config.option, start, config.run.threads);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  out << fmt::format("gamma_min(F,0) = {:.15g}\n", lower);
  out << fmt::format("gamma_max(F,0) = {:.15g}\n", upper.value);
  out << fmt::format("count vectors  = {} ({} with non-zero weight; naive sequences = {:.6g})\n",
                     upper.count_vectors, upper.evaluated_terms,
                     std::pow(static_cast<double>(config.model.m + 1), static_cast<double>(config.model.n)));
  out << fmt::format("wall time      = {:.6f} s\n", seconds);

  json report{{"config", config.to_json()},
              {"k", 0},
              {"gamma_min", lower},
              {"gamma_max", upper.value},
              {"count_vectors", upper.count_vectors},
              {"evaluated_terms", upper.evaluated_terms}};
  write_output(config.run, "price.json", report.dump(2) + "\n");
  if (config.run.dump_terms) {
    std::ostringstream terms;
    dump_gamma_max_terms(model, config.option, start, terms);
    write_output(config.run, "terms.csv", terms.str());
  }
  return kOk;
}

int cmd_hedge(const RunConfig& config, std::ostream& out) {
  const OrderedModel model(config.model);
  const auto path = hedge_path(config);
  const BacktestReport report = backtest_path(model, config.option, path, config.run.tol);

  out << fmt::format("maximal hedge along a {} path ({} steps)\n",
                     config.run.path.empty() ? config.run.path_kind : "configured", path.size());
  for (const BacktestStep& step : report.steps) {
    if (step.alpha.empty()) {
      out << fmt::format("k={} terminal value {:.12g} payoff {:.12g} slack {:.3e}\n", step.k, step.v_alpha,
                         step.gamma_max, step.realized_slack);
    } else {
      out << fmt::format("k={} V_alpha {:.12g} gamma_max {:.12g} slack {:.3e} alpha [{:.12g}]\n", step.k,
                         step.v_alpha, step.gamma_max, step.realized_slack, fmt::join(step.alpha, ", "));
    }
  }
  out << fmt::format("max |V_alpha - gamma_max| = {:.3e}, min slack = {:.3e}: {}\n", report.max_value_gap,
                     report.min_slack, report.passed ? "pass" : "FAIL");

  std::ostringstream csv;
  report.write_csv(csv, config.model.m);
  write_output(config.run, "hedge.csv", csv.str());
  json summary{{"config", config.to_json()},
               {"path", path},
               {"max_value_gap", report.max_value_gap},
               {"min_slack", report.min_slack},
               {"passed", report.passed}};
  write_output(config.run, "hedge.json", summary.dump(2) + "\n");
  return report.passed ? kOk : kVerificationFailure;
}

int cmd_simulate(const RunConfig& config, std::ostream& out) {
  const OrderedModel model(config.model);
  const MarketState start = initial_state(config.model);
  const double lower = gamma_min(model, config.option, start);
  const double upper = gamma_max(model, config.option, start, config.run.threads);
  const std::vector<double> b = compute_b(config.model);
  const double scale = 1.0 + upper;

  struct Family {
    OneStepMeasure step;
    double beta;
    double delta;
    std::optional<double> endpoint;
  };
  Rng construction = Rng::stream(config.run.seed, ~std::uint64_t{0});
  std::vector<Family> families;
  families.push_back({make_mixture_measure(b, 0.1, 3, construction), 0.1, 0.05, std::nullopt});
  families.push_back({make_extremal_measure(model, config.run.beta, config.run.delta), config.run.beta,
                      config.run.delta, upper});
  families.push_back({make_jensen_measure(b, config.run.delta, config.run.beta), config.run.beta, config.run.delta,
                      lower});

  McConfig mc;
  mc.samples = config.run.samples;
  mc.seed = config.run.seed;
  mc.threads = config.run.threads;

  bool all_pass = true;
  json records = json::array();
  std::string csv = "measure_kind,beta,delta,samples,seed,estimate,std_error,gamma_min,gamma_max,verdict\n";
  out << fmt::format("price interval ({:.12g}, {:.12g})\n", lower, upper);
  for (const Family& family : families) {
    const McEstimate estimate = mc_price(model, config.option, PathMeasure::homogeneous(family.step, config.model.n), mc);
    McReport report = make_mc_report(family.step.kind, family.beta, family.delta, estimate, lower, upper);
    if (family.endpoint) {
      const double allowed = std::max(kStdErrorMultiplier * estimate.std_error, 1e-2 * scale);
      report.verdict = report.verdict && std::abs(estimate.estimate - *family.endpoint) <= allowed;
    }
    all_pass = all_pass && report.verdict;
    out << fmt::format("{:<16} estimate {:.10g} +/- {:.3g} (SE){}  {}\n", to_string(report.kind), report.estimate,
                       report.std_error,
                       family.endpoint ? fmt::format("  endpoint {:.10g}", *family.endpoint) : std::string(),
                       report.verdict ? "pass" : "FAIL");
    json record = mc_report_json(report);
    records.push_back(record);
    csv += fmt::format("{},{:.17g},{:.17g},{},{},{:.17g},{:.17g},{:.17g},{:.17g},{}\n", to_string(report.kind),
                       report.beta, report.delta, report.samples, report.seed, report.estimate, report.std_error,
                       report.gamma_min, report.gamma_max, report.verdict ? "pass" : "fail");
  }
  write_output(config.run, "mc_report.json", json{{"config", config.to_json()}, {"reports", records}}.dump(2) + "\n");
  write_output(config.run, "mc_report.csv", csv);
  return all_pass ? kOk : kVerificationFailure;
}

int cmd_deform(const RunConfig& config, std::ostream& out) {
  const OrderedModel model(config.model);
  const MarketState start = initial_state(config.model);
  const double lower = gamma_min(model, config.option, start);
  const double upper = gamma_max(model, config.option, start);

  std::ostringstream sweep;
  write_deformation_sweep(config.model, config.option, config.run.sweep_points, sweep);
  write_output(config.run, "deform_sweep.csv", sweep.str());
  out << fmt::format("price interval ({:.12g}, {:.12g}); sweep of {} points written\n", lower, upper,
                     config.run.sweep_points);

  json report{{"config", config.to_json()}, {"gamma_min", lower}, {"gamma_max", upper}};
  if (config.run.target) {
    DeformationSolveOptions options;
    options.tolerance = config.run.tol;
    const DeformationSolution solution = solve_deformation(config.model, config.option, *config.run.target, options);
    const DeformedParams params = deformed_params(config.model, solution.s);
    out << fmt::format("target {:.12g}: s = {:.15g}, phi(s) = {:.15g}\n", *config.run.target, solution.s,
                       solution.phi);
    out << fmt::format("  d = [{:.12g}]\n  u = [{:.12g}]\n", fmt::join(params.d, ", "), fmt::join(params.u, ", "));
    report["solution"] = json{{"target", *config.run.target},
                              {"s", solution.s},
                              {"phi", solution.phi},
                              {"d", params.d},
                              {"u", params.u},
                              {"grid_points", solution.grid_points},
                              {"evaluations", solution.evaluations}};
  }
  write_output(config.run, "deform.json", report.dump(2) + "\n");
  return kOk;
}

}  // namespace cbm::app
