#include <algorithm>
#include <cmath>
#include <ostream>

#include <fmt/format.h>

#include "cbm/app.hpp"
#include "cbm/deformation.hpp"
#include "cbm/hedging.hpp"
#include "cbm/measures.hpp"
#include "cbm/pricing.hpp"

namespace cbm::app {

using nlohmann::json;

namespace {

struct Check {
  std::string suite;
  std::string name;
  double deviation = 0.0;
  double threshold = 0.0;
  bool passed = false;
};

class Ledger {
public:
  // Passes when deviation <= threshold.
  void bound(const std::string& suite, const std::string& name, double deviation, double threshold) {
    checks_.push_back(Check{suite, name, deviation, threshold, deviation <= threshold});
  }
  // Passes when value >= -threshold; deviation reported as the shortfall.
  void floor(const std::string& suite, const std::string& name, double value, double threshold) {
    checks_.push_back(Check{suite, name, std::max(0.0, -value), threshold, value >= -threshold});
  }
  void flag(const std::string& suite, const std::string& name, bool ok, double deviation = 0.0) {
    checks_.push_back(Check{suite, name, deviation, 0.0, ok});
  }
  const std::vector<Check>& checks() const { return checks_; }

private:
  std::vector<Check> checks_;
};

std::vector<std::vector<double>> random_path(const MarketModel& model, Rng& rng) {
  std::vector<std::vector<double>> path(model.n, std::vector<double>(model.m));
  for (auto& omega : path)
    for (double& x : omega) x = rng.uniform();
  return path;
}

void weight_suite(const OrderedModel& model, Ledger& ledger) {
  const auto& q = model.q();
  const auto& b = model.b();
  const std::size_t m = model.m();
  double total = 0.0, partial = 0.0, factor = 0.0;
  for (double x : q) total += x;
  // i = 0 uses b_0 = 1.
  for (std::size_t i = 0; i <= m; ++i) {
    double tail = 0.0;
    for (std::size_t j = i; j <= m; ++j) tail += q[j];
    partial = std::max(partial, std::abs(tail - (i == 0 ? 1.0 : b[i - 1])));
  }
  for (std::size_t i = 0; i <= m; ++i) {
    double mean = 0.0;
    for (std::size_t j = 0; j <= m; ++j) mean += q[j] * model.chi(i, j);
    factor = std::max(factor, std::abs(mean - model.R()));
  }
  double negative = 0.0;
  for (double x : q) negative = std::max(negative, -x);
  ledger.bound("weights", "sum q_j = 1", std::abs(total - 1.0), 1e-12);
  ledger.bound("weights", "sum_{j>=i} q_j = b_i, i = 0..m", partial, 1e-12);
  ledger.bound("weights", "sum_j q_j chi_i(j) = R", factor, 1e-12);
  ledger.bound("weights", "q_j >= 0", negative, 0.0);
}

void oracle_and_recursion_suites(const OrderedModel& model, const BasketOption& option,
                                 const std::vector<std::vector<std::vector<double>>>& paths, Ledger& ledger) {
  double oracle = 0.0, recursion = 0.0;
  std::size_t oracle_states = 0;
  for (const auto& path : paths) {
    MarketState state = initial_state(model.base());
    for (std::size_t k = 0; k <= model.n(); ++k) {
      const double upper = gamma_max(model, option, state);
      const double sequences = std::pow(static_cast<double>(model.m() + 1), static_cast<double>(model.n() - k));
      if (sequences <= static_cast<double>(kNaiveEnumerationCap)) {
        const double naive = gamma_max_naive(model, option, state);
        oracle = std::max(oracle, std::abs(naive - upper) / (1.0 + std::abs(naive)));
        ++oracle_states;
      }
      if (k < model.n()) {
        const auto Y = y_values(model, option, state);
        double next = 0.0;
        for (std::size_t t = 0; t <= model.m(); ++t) next += model.q()[t] * Y[t];
        recursion = std::max(recursion, std::abs(upper - next / model.R()) / (1.0 + std::abs(upper)));
        state = advance(model.base(), state, path[k]);
      }
    }
  }
  ledger.bound("oracle", fmt::format("count-vector sum = sequence sum ({} states)", oracle_states), oracle, 1e-10);
  ledger.bound("recursion", "gamma_max(k) = R^-1 sum_t q_t Y_t(k)", recursion, 1e-10);
  ledger.bound("recursion", "gamma_max(n) = payoff = gamma_min(n)",
               [&] {
                 double worst = 0.0;
                 for (const auto& path : paths) {
                   const MarketState end = state_after(model.base(), path);
                   const double pay = payoff(option, end.prices);
                   worst = std::max({worst, std::abs(gamma_max(model, option, end) - pay),
                                     std::abs(gamma_min(model, option, end) - pay)});
                 }
                 return worst;
               }(),
               1e-12);
}

void superhedge_suite(const OrderedModel& model, const BasketOption& option,
                      const std::vector<std::vector<std::vector<double>>>& paths, double tol, Rng& rng,
                      Ledger& ledger) {
  double value_gap = 0.0, min_slack = 0.0, vertex_gap = 0.0;
  for (const auto& path : paths) {
    const BacktestReport report = backtest_path(model, option, path, tol);
    value_gap = std::max(value_gap, report.max_value_gap);
    min_slack = std::min(min_slack, report.min_slack);
    MarketState state = initial_state(model.base());
    for (std::size_t k = 0; k < model.n(); ++k) {
      const HedgePortfolio portfolio = hedge_weights(model, option, state);
      // rho_t in user coordinates: sorted assets 1..t up.
      for (std::size_t t = 0; t <= model.m(); ++t) {
        std::vector<double> omega(model.m(), 0.0);
        for (std::size_t p = 0; p < t; ++p) omega[model.perm()[p] - 1] = 1.0;
        const double slack = superhedge_check(model, option, portfolio, omega);
        vertex_gap = std::max(vertex_gap, std::abs(slack));
      }
      for (int probe = 0; probe < 16; ++probe) {
        std::vector<double> omega(model.m());
        for (double& x : omega) x = rng.uniform();
        min_slack = std::min(min_slack, superhedge_check(model, option, portfolio, omega));
      }
      state = advance(model.base(), state, path[k]);
    }
  }
  ledger.bound("superhedge", "V_alpha(k) = gamma_max(F,k)", value_gap, tol);
  ledger.floor("superhedge", "slack >= 0 at realized and random jumps, terminal value >= payoff", min_slack, tol);
  ledger.bound("superhedge", "slack = 0 at chain vertices rho_t", vertex_gap, tol);
}

void measure_suites(const RunConfig& config, const OrderedModel& model, Ledger& ledger) {
  const BasketOption& option = config.option;
  const MarketState start = initial_state(config.model);
  const double lower = gamma_min(model, option, start);
  const double upper = gamma_max(model, option, start);
  const double scale = 1.0 + upper;
  const std::vector<double> b = compute_b(config.model);

  Rng construction = Rng::stream(config.run.seed, ~std::uint64_t{0});
  struct Family {
    std::string label;
    OneStepMeasure step;
    std::optional<double> endpoint;
  };
  std::vector<Family> families;
  families.push_back({"uniform-mixture", make_mixture_measure(b, 0.1, 3, construction), std::nullopt});
  families.push_back({"extremal", make_extremal_measure(model, config.run.beta, config.run.delta), upper});
  families.push_back({"jensen", make_jensen_measure(b, config.run.delta, config.run.beta), lower});

  McConfig mc;
  mc.samples = config.run.samples;
  mc.seed = config.run.seed;
  mc.threads = config.run.threads;

  // Linear claim sum_{i>=1} S_i(n) - K': every mean-b measure prices it at
  // sum_{i>=1} S_i(0) - K' R^-n.
  BasketOption linear{std::vector<double>(config.model.m + 1, 1.0), 1e-9};
  linear.c[0] = 0.0;
  double linear_value = -linear.K * std::pow(config.model.R, -static_cast<double>(config.model.n));
  for (std::size_t i = 1; i <= config.model.m; ++i) linear_value += config.model.S0[i];

  for (const Family& family : families) {
    const MeanCheck mean = check_mean_b(family.step, b);
    ledger.bound("martingale", family.label + ": analytic mean = b", mean.max_deviation, 1e-12);
    const PathMeasure path_measure = PathMeasure::homogeneous(family.step, config.model.n);
    const McEstimate linear_estimate = mc_price(model, linear, path_measure, mc);
    ledger.bound("martingale", family.label + ": MC price of linear claim", std::abs(linear_estimate.estimate - linear_value),
                 kStdErrorMultiplier * linear_estimate.std_error + 1e-12 * (1.0 + linear_value));

    const McEstimate estimate = mc_price(model, option, path_measure, mc);
    ledger.bound("containment", family.label + ": estimate in (gamma_min - 4SE, gamma_max + 4SE)",
                 std::max({0.0, lower - estimate.estimate, estimate.estimate - upper}),
                 kStdErrorMultiplier * estimate.std_error + 1e-12 * (1.0 + std::abs(upper)));
    if (family.endpoint) {
      ledger.bound("containment", family.label + ": estimate near endpoint", std::abs(estimate.estimate - *family.endpoint),
                   std::max(kStdErrorMultiplier * estimate.std_error, 1e-2 * scale));
    }
  }
}

void deformation_suite(const RunConfig& config, Ledger& ledger) {
  const MarketModel& model = config.model;
  const BasketOption& option = config.option;
  const OrderedModel ordered(model);
  const MarketState start = initial_state(model);
  const double lower = gamma_min(ordered, option, start);
  const double upper = gamma_max(ordered, option, start);

  ledger.bound("deformation", "phi(0) = gamma_max", std::abs(phi(model, option, 0.0) - upper), 0.0);
  ledger.bound("deformation", "phi(1 - 1e-6) -> gamma_min", std::abs(phi(model, option, 1.0 - 1e-6) - lower),
               1e-4 * (1.0 + upper));
  double lower_drift = 0.0, b_drift = 0.0;
  const std::vector<double> b = compute_b(model);
  for (int g = 0; g <= 10; ++g) {
    const double s = 0.099 * g;
    const MarketModel deformed = deformed_model(model, s);
    const OrderedModel deformed_ordered(deformed);
    lower_drift = std::max(lower_drift, std::abs(gamma_min(deformed_ordered, option, start) - lower));
    const std::vector<double> b_s = compute_b(deformed);
    for (std::size_t i = 0; i < b.size(); ++i) b_drift = std::max(b_drift, std::abs(b_s[i] - b[i]));
  }
  ledger.bound("deformation", "gamma_min independent of s", lower_drift, 1e-12);
  ledger.bound("deformation", "b(s) = b", b_drift, 1e-12);
  if (upper - lower > 1e-9 * (1.0 + upper)) {
    const double target = 0.5 * (lower + upper);
    DeformationSolveOptions options;
    options.tolerance = config.run.tol;
    const DeformationSolution solution = solve_deformation(model, option, target, options);
    ledger.bound("deformation", "phi(solve(c)) = c at the interval midpoint",
                 std::abs(phi(model, option, solution.s) - target), options.tolerance * (1.0 + upper));
  } else {
    ledger.flag("deformation", "interval is degenerate; round trip skipped", true);
  }
}

}  // namespace

int cmd_verify(const RunConfig& config, std::ostream& out) {
  OrderedModel model(config.model);
  if (config.run.fault_inject == "perturb-q0") {
    std::vector<double> q = model.q();
    q[0] += 1e-3;
    model.override_weights(std::move(q));
  }

  Ledger ledger;
  Rng rng = Rng::stream(config.run.seed, 1);
  std::vector<std::vector<std::vector<double>>> paths;
  for (int p = 0; p < 8; ++p) paths.push_back(random_path(config.model, rng));
  paths.push_back(std::vector<std::vector<double>>(config.model.n, std::vector<double>(config.model.m, 1.0)));
  paths.push_back(std::vector<std::vector<double>>(config.model.n, std::vector<double>(config.model.m, 0.0)));
  paths.push_back(std::vector<std::vector<double>>(config.model.n, compute_b(config.model)));

  auto guarded = [&](const std::string& suite, auto&& body) {
    try {
      body();
    } catch (const std::exception& e) {
      ledger.flag(suite, fmt::format("suite aborted: {}", e.what()), false);
    }
  };
  guarded("weights", [&] { weight_suite(model, ledger); });
  guarded("oracle", [&] { oracle_and_recursion_suites(model, config.option, paths, ledger); });
  guarded("superhedge", [&] { superhedge_suite(model, config.option, paths, config.run.tol, rng, ledger); });
  guarded("measures", [&] { measure_suites(config, model, ledger); });
  guarded("deformation", [&] { deformation_suite(config, ledger); });

  bool all_pass = true;
  json checks = json::array();
  for (const Check& check : ledger.checks()) {
    all_pass = all_pass && check.passed;
    out << fmt::format("{} [{}] {}: deviation {:.3e} (threshold {:.3e})\n", check.passed ? "PASS" : "FAIL",
                       check.suite, check.name, check.deviation, check.threshold);
    checks.push_back(json{{"suite", check.suite},
                          {"name", check.name},
                          {"deviation", check.deviation},
                          {"threshold", check.threshold},
                          {"passed", check.passed}});
  }
  out << (all_pass ? "verification passed\n" : "verification FAILED\n");
  write_output(config.run, "verify.json",
               json{{"config", config.to_json()}, {"checks", checks}, {"passed", all_pass}}.dump(2) + "\n");
  return all_pass ? kOk : kVerificationFailure;
}

}  // namespace cbm::app
