#include "cbm/hedging.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <fmt/format.h>

#include "cbm/pricing.hpp"

namespace cbm {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) total += a[i] * b[i];
  return total;
}

}  // namespace

HedgePortfolio hedge_weights(const OrderedModel& model, const BasketOption& option,
                             const MarketState& state) {
  const std::vector<double> Y = y_values(model, option, state);
  const std::vector<double> S = model.to_sorted(state.prices);
  const std::size_t m = model.m();

  std::vector<double> alpha(m + 1);
  double bond = Y[0];
  for (std::size_t i = 1; i <= m; ++i) {
    const double delta = model.U()[i - 1] - model.D()[i - 1];
    const double step = (Y[i] - Y[i - 1]) / delta;
    alpha[i] = step / S[i];
    bond -= model.D()[i - 1] * step;
  }
  alpha[0] = bond / (model.R() * S[0]);

  HedgePortfolio portfolio;
  portfolio.alpha = model.to_user(alpha);
  portfolio.k = state.k;
  portfolio.prices = state.prices;
  portfolio.value = dot(portfolio.alpha, portfolio.prices);
  return portfolio;
}

std::vector<double> hedge_weights_matrix(const OrderedModel& model, std::span<const double> sorted_prices,
                                         std::span<const double> y) {
  const std::size_t dim = model.m() + 1;
  using Matrix = std::vector<std::vector<double>>;
  Matrix W(dim, std::vector<double>(dim, 0.0));
  Matrix N(dim, std::vector<double>(dim, 0.0));
  Matrix Q(dim, std::vector<double>(dim, 0.0));

  W[0][0] = 1.0 / (model.R() * sorted_prices[0]);
  N[0][0] = 1.0;
  for (std::size_t i = 1; i < dim; ++i) {
    const double delta = model.U()[i - 1] - model.D()[i - 1];
    W[i][i] = 1.0 / sorted_prices[i];
    N[0][i] = -model.D()[i - 1] / delta;
    N[i][i] = 1.0 / delta;
  }
  for (std::size_t j = 0; j < dim; ++j) {
    Q[j][j] = 1.0;
    if (j > 0) Q[j][j - 1] = -1.0;
  }

  auto multiply = [dim](const Matrix& a, const Matrix& b) {
    Matrix out(dim, std::vector<double>(dim, 0.0));
    for (std::size_t r = 0; r < dim; ++r)
      for (std::size_t k = 0; k < dim; ++k)
        for (std::size_t c = 0; c < dim; ++c) out[r][c] += a[r][k] * b[k][c];
    return out;
  };
  const Matrix WNQ = multiply(multiply(W, N), Q);
  std::vector<double> alpha(dim, 0.0);
  for (std::size_t r = 0; r < dim; ++r) alpha[r] = dot(WNQ[r], y);
  return alpha;
}

double portfolio_value_after(const OrderedModel& model, const HedgePortfolio& portfolio,
                             std::span<const double> omega) {
  const MarketState next = advance(model.base(), MarketState{portfolio.k, portfolio.prices}, omega);
  return dot(portfolio.alpha, next.prices);
}

double superhedge_check(const OrderedModel& model, const BasketOption& option,
                        const HedgePortfolio& portfolio, std::span<const double> omega) {
  const MarketState next = advance(model.base(), MarketState{portfolio.k, portfolio.prices}, omega);
  return dot(portfolio.alpha, next.prices) - gamma_max(model, option, next);
}

BacktestReport backtest_path(const OrderedModel& model, const BasketOption& option,
                             std::span<const std::vector<double>> path, double tolerance) {
  if (path.size() != model.n()) {
    throw ModelError(fmt::format("path must have n = {} jump vectors, got {}", model.n(), path.size()));
  }
  BacktestReport report;
  report.min_slack = std::numeric_limits<double>::infinity();
  MarketState state = initial_state(model.base());
  double carried = 0.0;
  for (std::size_t k = 0; k < model.n(); ++k) {
    const HedgePortfolio portfolio = hedge_weights(model, option, state);
    const double upper = gamma_max(model, option, state);
    const MarketState next = advance(model.base(), state, path[k]);
    carried = dot(portfolio.alpha, next.prices);
    const double slack = carried - gamma_max(model, option, next);

    report.steps.push_back(BacktestStep{k, portfolio.value, upper, slack, portfolio.alpha});
    report.max_value_gap = std::max(report.max_value_gap, std::abs(portfolio.value - upper));
    report.min_slack = std::min(report.min_slack, slack);
    state = next;
  }
  const double terminal_payoff = payoff(option, state.prices);
  report.steps.push_back(BacktestStep{model.n(), carried, terminal_payoff, carried - terminal_payoff, {}});
  report.min_slack = std::min(report.min_slack, carried - terminal_payoff);
  report.passed = report.max_value_gap <= tolerance && report.min_slack >= -tolerance;
  return report;
}

void BacktestReport::write_csv(std::ostream& out, std::size_t m) const {
  out << "k,V_alpha,gamma_max,realized_slack";
  for (std::size_t i = 0; i <= m; ++i) out << ",alpha_" << i;
  out << '\n';
  for (const BacktestStep& step : steps) {
    std::string line = fmt::format("{},{:.17g},{:.17g},{:.17g}", step.k, step.v_alpha, step.gamma_max,
                                   step.realized_slack);
    for (std::size_t i = 0; i <= m; ++i) {
      line += i < step.alpha.size() ? fmt::format(",{:.17g}", step.alpha[i]) : std::string(",");
    }
    out << line << '\n';
  }
}

}  // namespace cbm
