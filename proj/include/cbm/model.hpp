#pragma once

// Market model of the continuous-binomial multi-asset market: a bond plus m
// risky assets whose one-step price jumps range over [D_i, U_i].

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cbm {

/// Raised when model or option parameters violate their invariants. `field`
/// names the offending parameter ("D[0]", "K", ...) when there is one.
class ModelError : public std::invalid_argument {
public:
  explicit ModelError(const std::string& what, std::string field = {})
      : std::invalid_argument(what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

private:
  std::string field_;
};

/// Model parameters in user asset order. Index 0 of `S0` is the bond;
/// `D` and `U` hold the jump bounds of assets 1..m at positions 0..m-1.
struct MarketModel {
  std::size_t m = 0;
  std::size_t n = 0;
  double R = 1.0;
  std::vector<double> S0;
  std::vector<double> D;
  std::vector<double> U;
};

/// European basket call (sum_i c_i S_i(n) - K)^+. c has m+1 entries, c[0]
/// multiplies the bond and may be negative.
struct BasketOption {
  std::vector<double> c;
  double K = 1.0;
};

/// Throws ModelError naming the first violated constraint, with 1-based
/// asset index (e.g. "D_1 < R violated").
const MarketModel& validate_model(const MarketModel& model);
void validate_option(const BasketOption& option, std::size_t m);

/// b_i = (R - D_i)/(U_i - D_i), user order.
std::vector<double> compute_b(const MarketModel& model);

/// q_j = b_j - b_{j+1} for j = 0..m with b_0 = 1 and b_{m+1} = 0.
/// Rejects b that is not non-increasing or leaves [0,1].
std::vector<double> vertex_weights(std::span<const double> b);

/// The model re-indexed so that b is non-increasing. All pricing and hedging
/// kernels work in this sorted order; `perm` translates back.
class OrderedModel {
public:
  explicit OrderedModel(MarketModel model);

  const MarketModel& base() const { return base_; }
  std::size_t m() const { return base_.m; }
  std::size_t n() const { return base_.n; }
  double R() const { return base_.R; }

  /// perm()[p] is the 1-based user index of the asset at sorted position
  /// p+1.
  const std::vector<std::size_t>& perm() const { return perm_; }

  /// Sorted-order quantities. b, D, U have m entries (sorted assets 1..m at
  /// 0..m-1); S0 has m+1 entries with the bond first; q has m+1 entries.
  const std::vector<double>& b() const { return b_; }
  const std::vector<double>& q() const { return q_; }
  const std::vector<double>& D() const { return D_; }
  const std::vector<double>& U() const { return U_; }
  const std::vector<double>& S0() const { return S0_; }

  /// chi_i(j): R for i = 0, U_i if 1 <= i <= j, D_i otherwise. Sorted order.
  double chi(std::size_t i, std::size_t j) const;

  /// Permute a length m+1 vector (index 0 fixed) between user and sorted
  /// order.
  std::vector<double> to_sorted(std::span<const double> user) const;
  std::vector<double> to_user(std::span<const double> sorted) const;

  /// Replaces q. Only used by fault injection in the verification driver.
  void override_weights(std::vector<double> q) { q_ = std::move(q); }

private:
  MarketModel base_;
  std::vector<std::size_t> perm_;
  std::vector<double> b_, q_, D_, U_, S0_;
};

inline OrderedModel order_assets(const MarketModel& model) { return OrderedModel(model); }

/// State of the world at time k: current prices in user order, bond first.
struct MarketState {
  std::size_t k = 0;
  std::vector<double> prices;
};

MarketState initial_state(const MarketModel& model);

/// Applies one step with jump coordinates omega in [0,1]^m (user order):
/// S_i <- S_i * (D_i + (U_i - D_i) omega_i), bond grows by R.
MarketState advance(const MarketModel& model, const MarketState& state,
                    std::span<const double> omega);

/// State after applying every jump vector of `path` to the initial prices.
MarketState state_after(const MarketModel& model,
                        std::span<const std::vector<double>> path);

/// sum_i c_i S_i, unclipped and without the strike.
double basket_level(const BasketOption& option, std::span<const double> prices);

/// (sum_i c_i S_i - K)^+.
double payoff(const BasketOption& option, std::span<const double> terminal_prices);

}  // namespace cbm
