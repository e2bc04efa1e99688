#include "cbm/pricing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <fmt/format.h>

#include "cbm/numeric.hpp"

namespace cbm {

namespace {

// Above this many remaining steps the coefficient weight * prod q_j^n_j is
// formed in log space.
constexpr std::size_t kLogSpaceSteps = 40;

// Multinomials are only tracked exactly while Pascal's triangle fits in a
// double.
constexpr std::size_t kPascalRows = 1029;

class Binomials {
public:
  explicit Binomials(std::size_t n) : n_(n), log_fact_(n + 1) {
    for (std::size_t i = 0; i <= n; ++i) log_fact_[i] = std::lgamma(static_cast<double>(i) + 1.0);
    if (n <= kPascalRows) {
      rows_.resize(n + 1);
      for (std::size_t r = 0; r <= n; ++r) {
        rows_[r].assign(r + 1, 1.0);
        for (std::size_t k = 1; k < r; ++k) rows_[r][k] = rows_[r - 1][k - 1] + rows_[r - 1][k];
      }
    }
  }

  double value(std::size_t n, std::size_t k) const {
    if (rows_.empty()) return std::exp(log_value(n, k));
    return rows_[n][k];
  }
  double log_value(std::size_t n, std::size_t k) const {
    return log_fact_[n] - log_fact_[k] - log_fact_[n - k];
  }

private:
  std::size_t n_;
  std::vector<double> log_fact_;
  std::vector<std::vector<double>> rows_;
};

struct Prefix {
  std::vector<std::size_t> counts;
  std::size_t remaining = 0;
  double weight = 1.0;
  double log_weight = 0.0;
};

// Enumerates counts[pos..m] summing to `remaining` in reverse-lexicographic
// order and calls leaf(counts, weight, log_weight) at each complete vector.
template <typename Leaf>
void enumerate_from(std::vector<std::size_t>& counts, std::size_t pos, std::size_t remaining,
                    double weight, double log_weight, const Binomials& binom, Leaf& leaf) {
  const std::size_t m = counts.size() - 1;
  if (pos == m) {
    counts[m] = remaining;
    leaf(counts, weight, log_weight);
    return;
  }
  for (std::size_t v = remaining + 1; v-- > 0;) {
    counts[pos] = v;
    enumerate_from(counts, pos + 1, remaining - v, weight * binom.value(remaining, v),
                   log_weight + binom.log_value(remaining, v), binom, leaf);
  }
  counts[pos] = 0;
}

// Fixed partition of the count-vector space: the first min(m, 2) counts are
// pinned per chunk. Concatenating chunks in order reproduces the global
// reverse-lexicographic order.
std::vector<Prefix> make_chunks(std::size_t steps, std::size_t m, const Binomials& binom) {
  const std::size_t depth = std::min<std::size_t>(m, 2);
  std::vector<Prefix> chunks;
  std::vector<std::size_t> counts(m + 1, 0);
  auto recurse = [&](auto& self, std::size_t pos, std::size_t remaining, double w, double lw) -> void {
    if (pos == depth) {
      chunks.push_back(Prefix{counts, remaining, w, lw});
      return;
    }
    for (std::size_t v = remaining + 1; v-- > 0;) {
      counts[pos] = v;
      self(self, pos + 1, remaining - v, w * binom.value(remaining, v), lw + binom.log_value(remaining, v));
    }
    counts[pos] = 0;
  };
  recurse(recurse, 0, steps, 1.0, 0.0);
  return chunks;
}

struct Term {
  const std::vector<std::size_t>& counts;
  double multinomial;
  double q_weight;   // prod q_j^n_j
  double basket;     // sum_i c_i chi_i(J) S_i - K
  double clipped;    // coefficient * max(basket, 0)
};

// Undiscounted sum_J q_J (sum_i c_i chi_i(J) S_i - K)^+ over J of length
// `steps`, all inputs in sorted order.
class GammaMaxKernel {
public:
  GammaMaxKernel(const OrderedModel& model, std::span<const double> c, double K,
                 std::span<const double> S, std::size_t steps)
      : m_(model.m()), steps_(steps), K_(K), binom_(steps) {
    const auto& q = model.q();
    log_q_.resize(m_ + 1);
    q_pow_.assign(m_ + 1, std::vector<double>(steps + 1, 1.0));
    for (std::size_t j = 0; j <= m_; ++j) {
      log_q_[j] = q[j] > 0.0 ? std::log(q[j]) : -std::numeric_limits<double>::infinity();
      for (std::size_t e = 1; e <= steps; ++e) q_pow_[j][e] = q_pow_[j][e - 1] * q[j];
    }
    zero_q_.resize(m_ + 1);
    for (std::size_t j = 0; j <= m_; ++j) zero_q_[j] = !(q[j] > 0.0);

    bond_term_ = c[0] * std::pow(model.R(), static_cast<double>(steps)) * S[0];
    // asset_term_[i-1][t] = c_i S_i U_i^t D_i^(steps-t)
    asset_term_.assign(m_, std::vector<double>(steps + 1, 0.0));
    for (std::size_t i = 1; i <= m_; ++i) {
      const double u = model.U()[i - 1];
      const double d = model.D()[i - 1];
      std::vector<double> u_pow(steps + 1, 1.0), d_pow(steps + 1, 1.0);
      for (std::size_t e = 1; e <= steps; ++e) {
        u_pow[e] = u_pow[e - 1] * u;
        d_pow[e] = d_pow[e - 1] * d;
      }
      for (std::size_t t = 0; t <= steps; ++t) {
        asset_term_[i - 1][t] = c[i] * S[i] * u_pow[t] * d_pow[steps - t];
      }
    }
    chunks_ = make_chunks(steps, m_, binom_);
  }

  std::size_t chunk_count() const { return chunks_.size(); }

  // Visits the non-zero-weight terms of chunk `index`; returns the number of
  // count vectors enumerated.
  template <typename Visit>
  std::size_t visit_chunk(std::size_t index, Visit&& visit) const {
    const Prefix& prefix = chunks_[index];
    std::vector<std::size_t> counts = prefix.counts;
    std::size_t enumerated = 0;
    auto leaf = [&](const std::vector<std::size_t>& cv, double weight, double log_weight) {
      ++enumerated;
      for (std::size_t j = 0; j <= m_; ++j) {
        if (cv[j] > 0 && zero_q_[j]) return;
      }
      double q_weight = 1.0;
      double coefficient;
      if (steps_ > kLogSpaceSteps) {
        double log_q_weight = 0.0;
        for (std::size_t j = 0; j <= m_; ++j) {
          if (cv[j] > 0) log_q_weight += static_cast<double>(cv[j]) * log_q_[j];
        }
        q_weight = std::exp(log_q_weight);
        coefficient = std::exp(log_weight + log_q_weight);
      } else {
        for (std::size_t j = 0; j <= m_; ++j) q_weight *= q_pow_[j][cv[j]];
        coefficient = weight * q_weight;
      }
      double basket = bond_term_;
      std::size_t tail = 0;
      // t_i = sum_{j>=i} n_j, accumulated from the top symbol down.
      for (std::size_t i = m_; i >= 1; --i) {
        tail += cv[i];
        basket += asset_term_[i - 1][tail];
      }
      basket -= K_;
      visit(Term{cv, steps_ > kLogSpaceSteps ? std::exp(log_weight) : weight, q_weight, basket,
                 basket > 0.0 ? coefficient * basket : 0.0});
    };
    enumerate_from(counts, std::min<std::size_t>(m_, 2), prefix.remaining, prefix.weight,
                   prefix.log_weight, binom_, leaf);
    return enumerated;
  }

  GammaMaxResult sum(std::size_t threads) const {
    std::vector<double> partial(chunks_.size(), 0.0);
    std::vector<std::size_t> enumerated(chunks_.size(), 0), evaluated(chunks_.size(), 0);
    parallel_for(chunks_.size(), threads, [&](std::size_t index) {
      CompensatedSum acc;
      std::size_t used = 0;
      enumerated[index] = visit_chunk(index, [&](const Term& term) {
        acc.add(term.clipped);
        ++used;
      });
      evaluated[index] = used;
      partial[index] = acc.value();
    });
    GammaMaxResult result;
    CompensatedSum total;
    for (std::size_t i = 0; i < chunks_.size(); ++i) {
      total.add(partial[i]);
      result.count_vectors += enumerated[i];
      result.evaluated_terms += evaluated[i];
    }
    result.value = total.value();
    return result;
  }

private:
  std::size_t m_;
  std::size_t steps_;
  double K_;
  Binomials binom_;
  std::vector<double> log_q_;
  std::vector<std::vector<double>> q_pow_;
  std::vector<bool> zero_q_;
  double bond_term_ = 0.0;
  std::vector<std::vector<double>> asset_term_;
  std::vector<Prefix> chunks_;
};

void check_state(const OrderedModel& model, const MarketState& state) {
  if (state.k > model.n()) throw ModelError(fmt::format("state time k = {} exceeds n = {}", state.k, model.n()));
  if (state.prices.size() != model.m() + 1) {
    throw ModelError(fmt::format("state must carry m+1 = {} prices", model.m() + 1));
  }
}

double discount(const OrderedModel& model, std::size_t steps) {
  return std::pow(model.R(), -static_cast<double>(steps));
}

}  // namespace

void for_each_count_vector(std::size_t steps, std::size_t m,
                           const std::function<void(const CountVector&)>& visit) {
  const Binomials binom(steps);
  std::vector<std::size_t> counts(m + 1, 0);
  CountVector cv;
  cv.total = steps;
  cv.tail.resize(m);
  auto leaf = [&](const std::vector<std::size_t>& c, double weight, double log_weight) {
    cv.counts = c;
    cv.weight = steps <= kPascalRows ? weight : std::exp(log_weight);
    std::size_t tail = 0;
    for (std::size_t i = m; i >= 1; --i) {
      tail += c[i];
      cv.tail[i - 1] = tail;
    }
    visit(cv);
  };
  enumerate_from(counts, 0, steps, 1.0, 0.0, binom, leaf);
}

std::vector<CountVector> enumerate_count_vectors(std::size_t steps, std::size_t m) {
  std::vector<CountVector> out;
  for_each_count_vector(steps, m, [&](const CountVector& cv) { out.push_back(cv); });
  return out;
}

double count_vector_total(std::size_t steps, std::size_t m) {
  double total = 1.0;
  for (std::size_t i = 1; i <= m; ++i) {
    total = total * static_cast<double>(steps + i) / static_cast<double>(i);
  }
  return std::round(total);
}

double gamma_min(const OrderedModel& model, const BasketOption& option, const MarketState& state) {
  check_state(model, state);
  const std::size_t steps = model.n() - state.k;
  const double growth = std::pow(model.R(), static_cast<double>(steps));
  return discount(model, steps) * std::max(growth * basket_level(option, state.prices) - option.K, 0.0);
}

namespace {

GammaMaxResult gamma_max_sorted(const OrderedModel& model, std::span<const double> c_sorted, double K,
                                std::span<const double> S_sorted, std::size_t steps,
                                std::size_t threads) {
  GammaMaxKernel kernel(model, c_sorted, K, S_sorted, steps);
  GammaMaxResult result = kernel.sum(threads);
  result.value *= discount(model, steps);
  return result;
}

}  // namespace

GammaMaxResult gamma_max_detailed(const OrderedModel& model, const BasketOption& option,
                                  const MarketState& state, std::size_t threads) {
  check_state(model, state);
  const auto c = model.to_sorted(option.c);
  const auto S = model.to_sorted(state.prices);
  return gamma_max_sorted(model, c, option.K, S, model.n() - state.k, threads);
}

double gamma_max(const OrderedModel& model, const BasketOption& option, const MarketState& state,
                 std::size_t threads) {
  return gamma_max_detailed(model, option, state, threads).value;
}

double gamma_max_naive(const OrderedModel& model, const BasketOption& option, const MarketState& state,
                       std::uint64_t cap) {
  check_state(model, state);
  const std::size_t m = model.m();
  const std::size_t steps = model.n() - state.k;
  double sequences = std::pow(static_cast<double>(m + 1), static_cast<double>(steps));
  if (sequences > static_cast<double>(cap)) {
    throw EnumerationCapExceeded(
        fmt::format("naive enumeration needs {} sequences, cap is {}", sequences, cap));
  }
  const auto c = model.to_sorted(option.c);
  const auto S = model.to_sorted(state.prices);
  const auto& q = model.q();

  std::vector<std::size_t> J(steps, 0);
  CompensatedSum total;
  while (true) {
    double q_J = 1.0;
    for (std::size_t j : J) q_J *= q[j];
    double basket = 0.0;
    for (std::size_t i = 0; i <= m; ++i) {
      double chi_J = 1.0;
      for (std::size_t j : J) chi_J *= model.chi(i, j);
      basket += c[i] * chi_J * S[i];
    }
    total.add(q_J * std::max(basket - option.K, 0.0));

    std::size_t pos = 0;
    while (pos < steps && J[pos] == m) J[pos++] = 0;
    if (pos == steps) break;
    ++J[pos];
  }
  return discount(model, steps) * total.value();
}

PriceInterval price_interval(const OrderedModel& model, const BasketOption& option,
                             const MarketState& state, std::size_t threads) {
  return PriceInterval{gamma_min(model, option, state), gamma_max(model, option, state, threads), state.k};
}

MarketState vertex_successor(const OrderedModel& model, const MarketState& state, std::size_t t) {
  check_state(model, state);
  if (state.k >= model.n()) throw ModelError("no successor at the horizon");
  if (t > model.m()) throw ModelError(fmt::format("vertex index {} exceeds m = {}", t, model.m()));
  auto S = model.to_sorted(state.prices);
  for (std::size_t i = 0; i <= model.m(); ++i) S[i] *= model.chi(i, t);
  return MarketState{state.k + 1, model.to_user(S)};
}

std::vector<double> y_values(const OrderedModel& model, const BasketOption& option,
                             const MarketState& state) {
  check_state(model, state);
  if (state.k >= model.n()) throw ModelError("y_values requires k <= n-1");
  const std::size_t m = model.m();
  const auto c = model.to_sorted(option.c);
  const auto S = model.to_sorted(state.prices);
  const std::size_t steps = model.n() - state.k - 1;
  std::vector<double> Y(m + 1);
  std::vector<double> next(m + 1);
  for (std::size_t t = 0; t <= m; ++t) {
    for (std::size_t i = 0; i <= m; ++i) next[i] = S[i] * model.chi(i, t);
    Y[t] = gamma_max_sorted(model, c, option.K, next, steps, 1).value;
  }
  return Y;
}

void dump_gamma_max_terms(const OrderedModel& model, const BasketOption& option,
                          const MarketState& state, std::ostream& out) {
  check_state(model, state);
  const std::size_t m = model.m();
  const auto c = model.to_sorted(option.c);
  const auto S = model.to_sorted(state.prices);
  GammaMaxKernel kernel(model, c, option.K, S, model.n() - state.k);
  for (std::size_t j = 0; j <= m; ++j) out << "n_" << j << ',';
  out << "multinomial_weight,q_weight,basket_value,clipped_term\n";
  for (std::size_t index = 0; index < kernel.chunk_count(); ++index) {
    kernel.visit_chunk(index, [&](const Term& term) {
      std::string line;
      for (std::size_t n_j : term.counts) line += fmt::format("{},", n_j);
      line += fmt::format("{:.17g},{:.17g},{:.17g},{:.17g}\n", term.multinomial, term.q_weight,
                          term.basket, term.clipped);
      out << line;
    });
  }
}

}  // namespace cbm
