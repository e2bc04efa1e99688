#include "cbm/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

namespace cbm {

namespace {

void require(bool ok, const std::string& what, std::string field = {}) {
  if (!ok) throw ModelError(what, std::move(field));
}

}  // namespace

const MarketModel& validate_model(const MarketModel& model) {
  require(model.m >= 1, "m >= 1 violated", "m");
  require(model.n >= 1, "n >= 1 violated", "n");
  require(std::isfinite(model.R) && model.R > 0.0, "R > 0 violated", "R");
  require(model.S0.size() == model.m + 1,
          fmt::format("S0 must have m+1 = {} entries, got {}", model.m + 1, model.S0.size()), "S0");
  require(model.D.size() == model.m,
          fmt::format("D must have m = {} entries, got {}", model.m, model.D.size()), "D");
  require(model.U.size() == model.m,
          fmt::format("U must have m = {} entries, got {}", model.m, model.U.size()), "U");
  for (std::size_t i = 0; i <= model.m; ++i) {
    require(std::isfinite(model.S0[i]) && model.S0[i] > 0.0, fmt::format("S0_{} > 0 violated", i), fmt::format("S0[{}]", i));
  }
  for (std::size_t i = 0; i < model.m; ++i) {
    const std::size_t idx = i + 1;
    require(std::isfinite(model.D[i]) && model.D[i] > 0.0, fmt::format("0 < D_{} violated", idx), fmt::format("D[{}]", i));
    require(model.D[i] < model.R, fmt::format("D_{} < R violated", idx), fmt::format("D[{}]", i));
    require(std::isfinite(model.U[i]) && model.R < model.U[i], fmt::format("R < U_{} violated", idx), fmt::format("U[{}]", i));
  }
  return model;
}

void validate_option(const BasketOption& option, std::size_t m) {
  require(option.c.size() == m + 1,
          fmt::format("c must have m+1 = {} entries, got {}", m + 1, option.c.size()), "c");
  require(std::isfinite(option.c[0]), "c_0 must be finite", "c[0]");
  for (std::size_t i = 1; i <= m; ++i) {
    require(std::isfinite(option.c[i]) && option.c[i] >= 0.0, fmt::format("c_{} >= 0 violated", i), fmt::format("c[{}]", i));
  }
  require(std::isfinite(option.K) && option.K > 0.0, "K > 0 violated", "K");
}

std::vector<double> compute_b(const MarketModel& model) {
  std::vector<double> b(model.m);
  for (std::size_t i = 0; i < model.m; ++i) {
    b[i] = (model.R - model.D[i]) / (model.U[i] - model.D[i]);
  }
  return b;
}

std::vector<double> vertex_weights(std::span<const double> b) {
  const std::size_t m = b.size();
  for (std::size_t i = 0; i < m; ++i) {
    require(b[i] >= 0.0 && b[i] <= 1.0, fmt::format("b_{} outside [0,1]", i + 1));
    if (i > 0) require(b[i - 1] >= b[i], fmt::format("b must be non-increasing (b_{} < b_{})", i, i + 1));
  }
  std::vector<double> q(m + 1);
  for (std::size_t j = 0; j <= m; ++j) {
    const double hi = j == 0 ? 1.0 : b[j - 1];
    const double lo = j == m ? 0.0 : b[j];
    q[j] = hi - lo;
  }
  return q;
}

OrderedModel::OrderedModel(MarketModel model) : base_(std::move(model)) {
  validate_model(base_);
  const std::size_t m = base_.m;
  const std::vector<double> b_user = compute_b(base_);

  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t c) { return b_user[a] > b_user[c]; });

  perm_.resize(m);
  b_.resize(m);
  D_.resize(m);
  U_.resize(m);
  S0_.resize(m + 1);
  S0_[0] = base_.S0[0];
  for (std::size_t p = 0; p < m; ++p) {
    const std::size_t src = order[p];
    perm_[p] = src + 1;
    b_[p] = b_user[src];
    D_[p] = base_.D[src];
    U_[p] = base_.U[src];
    S0_[p + 1] = base_.S0[src + 1];
  }
  q_ = vertex_weights(b_);
}

double OrderedModel::chi(std::size_t i, std::size_t j) const {
  if (i == 0) return base_.R;
  return i <= j ? U_[i - 1] : D_[i - 1];
}

std::vector<double> OrderedModel::to_sorted(std::span<const double> user) const {
  std::vector<double> out(user.size());
  out[0] = user[0];
  for (std::size_t p = 0; p < perm_.size(); ++p) out[p + 1] = user[perm_[p]];
  return out;
}

std::vector<double> OrderedModel::to_user(std::span<const double> sorted) const {
  std::vector<double> out(sorted.size());
  out[0] = sorted[0];
  for (std::size_t p = 0; p < perm_.size(); ++p) out[perm_[p]] = sorted[p + 1];
  return out;
}

MarketState initial_state(const MarketModel& model) { return MarketState{0, model.S0}; }

MarketState advance(const MarketModel& model, const MarketState& state,
                    std::span<const double> omega) {
  require(omega.size() == model.m, fmt::format("jump vector must have m = {} entries", model.m));
  require(state.k < model.n, "cannot advance past the horizon");
  MarketState next{state.k + 1, state.prices};
  next.prices[0] *= model.R;
  for (std::size_t i = 0; i < model.m; ++i) {
    require(omega[i] >= 0.0 && omega[i] <= 1.0, fmt::format("omega_{} outside [0,1]", i + 1));
    next.prices[i + 1] *= model.D[i] + (model.U[i] - model.D[i]) * omega[i];
  }
  return next;
}

MarketState state_after(const MarketModel& model, std::span<const std::vector<double>> path) {
  MarketState state = initial_state(model);
  for (const auto& omega : path) state = advance(model, state, omega);
  return state;
}

double basket_level(const BasketOption& option, std::span<const double> prices) {
  double total = 0.0;
  for (std::size_t i = 0; i < prices.size(); ++i) total += option.c[i] * prices[i];
  return total;
}

double payoff(const BasketOption& option, std::span<const double> terminal_prices) {
  return std::max(basket_level(option, terminal_prices) - option.K, 0.0);
}

}  // namespace cbm
