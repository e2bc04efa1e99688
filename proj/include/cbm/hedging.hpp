#pragma once

// Minimum-cost maximal (upper) hedging strategy and its path-wise checks.

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "cbm/model.hpp"

namespace cbm {

inline constexpr double kSlackTolerance = 1e-9;

struct HedgePortfolio {
  std::vector<double> alpha;   // positions, user order, alpha[0] = bond
  std::size_t k = 0;
  std::vector<double> prices;  // S(k), user order
  double value = 0.0;          // sum_i alpha_i S_i(k)
};

/// alpha(k) = W(k) N Q Y(k) in the closed scalar form
///   alpha_i = (Y_i - Y_{i-1}) / (Delta_i S_i(k))                 i >= 1
///   alpha_0 = (Y_0 - sum_i D_i (Y_i - Y_{i-1}) / Delta_i) / (R S_0(k))
/// with Delta_i = U_i - D_i, evaluated in sorted order and returned in user
/// order.
HedgePortfolio hedge_weights(const OrderedModel& model, const BasketOption& option,
                             const MarketState& state);

/// Same positions (sorted order) from the explicit product of the three
/// (m+1)x(m+1) matrices. Cross-check for hedge_weights.
std::vector<double> hedge_weights_matrix(const OrderedModel& model, std::span<const double> sorted_prices,
                                         std::span<const double> y);

/// sum_i alpha_i S_i(k+1) - gamma_max(F, k+1) at the successor reached by
/// `omega` (user order, in [0,1]^m).
double superhedge_check(const OrderedModel& model, const BasketOption& option,
                        const HedgePortfolio& portfolio, std::span<const double> omega);

/// Portfolio value after the jump, without the gamma_max comparison.
double portfolio_value_after(const OrderedModel& model, const HedgePortfolio& portfolio,
                             std::span<const double> omega);

struct BacktestStep {
  std::size_t k = 0;
  double v_alpha = 0.0;        // sum alpha_i(k) S_i(k); at k = n, the value carried from n-1
  double gamma_max = 0.0;      // gamma_max(F, k); at k = n, the payoff
  double realized_slack = 0.0; // slack at the realized jump k -> k+1; at k = n, v_alpha - payoff
  std::vector<double> alpha;   // empty at k = n
};

struct BacktestReport {
  std::vector<BacktestStep> steps;
  double max_value_gap = 0.0;  // max_k |V_alpha(k) - gamma_max(F,k)|, k < n
  double min_slack = 0.0;      // min realized slack, including the terminal row
  bool passed = false;

  void write_csv(std::ostream& out, std::size_t m) const;
};

/// Runs the maximal hedge along `path` (n jump vectors, user order).
BacktestReport backtest_path(const OrderedModel& model, const BasketOption& option,
                             std::span<const std::vector<double>> path,
                             double tolerance = kSlackTolerance);

}  // namespace cbm
