#pragma once

// Endpoints of the no-arbitrage price interval of a basket call.
//
// The upper endpoint is a sum over jump sequences J in {0..m}^(n-k). The
// factor chi_i(J) only depends on how many entries of J are >= i, so the sum
// is evaluated over count vectors (n_0..n_m) with multinomial multiplicity,
// which reduces (m+1)^(n-k) terms to C(n-k+m, m).

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <vector>

#include "cbm/model.hpp"

namespace cbm {

struct CountVector {
  std::vector<std::size_t> counts;  // n_0..n_m
  std::size_t total = 0;
  double weight = 1.0;              // (total)! / prod n_j!
  std::vector<std::size_t> tail;    // tail[i-1] = sum_{j>=i} n_j, i = 1..m
};

/// Calls visit(cv) for every count vector with sum `steps` over m+1 symbols,
/// in reverse-lexicographic order of (n_0, ..., n_m).
void for_each_count_vector(std::size_t steps, std::size_t m,
                           const std::function<void(const CountVector&)>& visit);
std::vector<CountVector> enumerate_count_vectors(std::size_t steps, std::size_t m);

/// C(steps + m, m), as a double.
double count_vector_total(std::size_t steps, std::size_t m);

struct PriceInterval {
  double gamma_min = 0.0;
  double gamma_max = 0.0;
  std::size_t k = 0;
};

struct GammaMaxResult {
  double value = 0.0;
  std::size_t count_vectors = 0;   // enumerated
  std::size_t evaluated_terms = 0; // with non-zero q weight
};

class EnumerationCapExceeded : public std::length_error {
public:
  using std::length_error::length_error;
};

/// R^(k-n) (R^(n-k) sum_i c_i S_i(k) - K)^+.
double gamma_min(const OrderedModel& model, const BasketOption& option, const MarketState& state);

/// Count-vector evaluation. The sum is split into fixed chunks reduced in a
/// fixed order, so the value is bit-identical for any `threads`.
GammaMaxResult gamma_max_detailed(const OrderedModel& model, const BasketOption& option,
                                  const MarketState& state, std::size_t threads = 1);
double gamma_max(const OrderedModel& model, const BasketOption& option,
                 const MarketState& state, std::size_t threads = 1);

inline constexpr std::uint64_t kNaiveEnumerationCap = 10'000'000;

/// Literal sum over all sequences in {0..m}^(n-k). Test oracle only.
double gamma_max_naive(const OrderedModel& model, const BasketOption& option,
                       const MarketState& state, std::uint64_t cap = kNaiveEnumerationCap);

PriceInterval price_interval(const OrderedModel& model, const BasketOption& option,
                             const MarketState& state, std::size_t threads = 1);

/// Y_t(k), t = 0..m: gamma_max at time k+1 after assets 1..t (sorted order)
/// jump up and the rest jump down. Requires k <= n-1.
std::vector<double> y_values(const OrderedModel& model, const BasketOption& option,
                             const MarketState& state);

/// Prices in user order after vertex jump rho_t from `state`.
MarketState vertex_successor(const OrderedModel& model, const MarketState& state, std::size_t t);

/// Writes the gamma_max terms as CSV:
/// n_0..n_m,multinomial_weight,q_weight,basket_value,clipped_term
/// where basket_value = sum_i c_i chi_i(J) S_i(k) - K. Zero-weight terms are
/// omitted.
void dump_gamma_max_terms(const OrderedModel& model, const BasketOption& option,
                          const MarketState& state, std::ostream& out);

}  // namespace cbm
