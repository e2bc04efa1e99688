#include "cbm/pricing.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "test_support.hpp"

namespace cbm {
namespace {

using testing::one_asset_call;
using testing::one_asset_model;
using testing::two_asset_call;
using testing::two_asset_model;

TEST(CountVectors, EmptyProduct) {
  const auto all = enumerate_count_vectors(0, 3);
  ASSERT_EQ(all.size(), 1u);
  EXPECT_EQ(all[0].counts, (std::vector<std::size_t>{0, 0, 0, 0}));
  EXPECT_DOUBLE_EQ(all[0].weight, 1.0);
}

TEST(CountVectors, BinomialCase) {
  const auto all = enumerate_count_vectors(2, 1);
  ASSERT_EQ(all.size(), 3u);
  EXPECT_EQ(all[0].counts, (std::vector<std::size_t>{2, 0}));
  EXPECT_EQ(all[1].counts, (std::vector<std::size_t>{1, 1}));
  EXPECT_EQ(all[2].counts, (std::vector<std::size_t>{0, 2}));
  EXPECT_DOUBLE_EQ(all[0].weight, 1.0);
  EXPECT_DOUBLE_EQ(all[1].weight, 2.0);
  EXPECT_DOUBLE_EQ(all[2].weight, 1.0);
  EXPECT_EQ(all[1].tail, (std::vector<std::size_t>{1}));
}

// Multinomial theorem: weights over all count vectors sum to (m+1)^steps, and
// each weight equals the number of sequences with that count vector.
TEST(CountVectors, WeightsCountSequences) {
  for (std::size_t m = 1; m <= 3; ++m) {
    for (std::size_t steps = 0; steps <= 5; ++steps) {
      std::map<std::vector<std::size_t>, double> brute;
      std::vector<std::size_t> J(steps, 0);
      while (true) {
        std::vector<std::size_t> counts(m + 1, 0);
        for (std::size_t j : J) ++counts[j];
        brute[counts] += 1.0;
        std::size_t pos = 0;
        while (pos < steps && J[pos] == m) J[pos++] = 0;
        if (pos == steps) break;
        ++J[pos];
      }
      const auto all = enumerate_count_vectors(steps, m);
      EXPECT_EQ(all.size(), brute.size());
      EXPECT_DOUBLE_EQ(static_cast<double>(all.size()), count_vector_total(steps, m));
      double total = 0.0;
      std::set<std::vector<std::size_t>> seen;
      for (const auto& cv : all) {
        EXPECT_TRUE(seen.insert(cv.counts).second);
        EXPECT_DOUBLE_EQ(cv.weight, brute.at(cv.counts));
        total += cv.weight;
      }
      EXPECT_DOUBLE_EQ(total, std::pow(static_cast<double>(m + 1), static_cast<double>(steps)));
    }
  }
  const auto three = enumerate_count_vectors(3, 2);
  EXPECT_EQ(three.size(), 10u);
}

TEST(CountVectors, ReverseLexicographicOrder) {
  const auto all = enumerate_count_vectors(4, 3);
  for (std::size_t i = 1; i < all.size(); ++i) EXPECT_GT(all[i - 1].counts, all[i].counts);
}

TEST(GammaMin, RunningExample) {
  const OrderedModel model(one_asset_model());
  EXPECT_DOUBLE_EQ(gamma_min(model, one_asset_call(), initial_state(model.base())), 0.0);
}

TEST(GammaMin, SmallStrikeIsLinear) {
  const OrderedModel model(two_asset_model(3));
  const BasketOption option{{0.5, 1.0, 2.0}, 1e-14};
  EXPECT_NEAR(gamma_min(model, option, initial_state(model.base())), 3.5, 1e-12);
}

TEST(GammaMax, OneAssetOneStep) {
  const OrderedModel model(one_asset_model());
  EXPECT_NEAR(gamma_max(model, one_asset_call(), initial_state(model.base())), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(gamma_max_naive(model, one_asset_call(), initial_state(model.base())), 1.0 / 3.0, 1e-15);
}

TEST(GammaMax, TwoAssetOneStep) {
  const OrderedModel model(two_asset_model());
  EXPECT_NEAR(gamma_max(model, two_asset_call(), initial_state(model.base())), 0.4, 1e-15);
}

// User asset order must not matter.
TEST(GammaMax, InvariantUnderAssetRelabelling) {
  MarketModel swapped{2, 1, 1.0, {1.0, 1.0, 1.0}, {0.5, 0.8}, {2.0, 1.2}};
  const OrderedModel model(swapped);
  EXPECT_NEAR(gamma_max(model, two_asset_call(), initial_state(swapped)), 0.4, 1e-15);
}

TEST(GammaMax, SmallStrikeClosesInterval) {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 20; ++trial) {
    auto inst = testing::random_instance(gen, 1 + trial % 3, 1 + trial % 5);
    inst.option.c[0] = std::abs(inst.option.c[0]);
    inst.option.K = 1e-13;
    const OrderedModel model(inst.model);
    const auto start = initial_state(inst.model);
    double linear = 0.0;
    for (std::size_t i = 0; i <= inst.model.m; ++i) linear += inst.option.c[i] * inst.model.S0[i];
    EXPECT_NEAR(gamma_max(model, inst.option, start), linear, 1e-11 * (1.0 + linear));
    EXPECT_NEAR(gamma_min(model, inst.option, start), linear, 1e-11 * (1.0 + linear));
  }
}

TEST(GammaMax, TerminalConditionIsPayoff) {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 30; ++trial) {
    const auto inst = testing::random_instance(gen, 1 + trial % 4, 3);
    const OrderedModel model(inst.model);
    const auto end = state_after(inst.model, testing::random_path(gen, inst.model.m, 3));
    const double pay = payoff(inst.option, end.prices);
    EXPECT_DOUBLE_EQ(gamma_max(model, inst.option, end), pay);
    EXPECT_DOUBLE_EQ(gamma_min(model, inst.option, end), pay);
    EXPECT_DOUBLE_EQ(gamma_max_naive(model, inst.option, end), pay);
  }
}

TEST(GammaMax, MatchesNaiveOracle) {
  std::mt19937_64 gen(17);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t m = 1 + trial % 3;
    const std::size_t n = 1 + trial % 6;
    const auto inst = testing::random_instance(gen, m, n);
    const OrderedModel model(inst.model);
    const auto path = testing::random_path(gen, m, n);
    MarketState state = initial_state(inst.model);
    for (std::size_t k = 0; k <= n; ++k) {
      const double fast = gamma_max(model, inst.option, state);
      const double naive = gamma_max_naive(model, inst.option, state);
      EXPECT_NEAR(fast, naive, 1e-10 * (1.0 + std::abs(naive))) << "trial " << trial << " k " << k;
      if (k < n) state = advance(inst.model, state, path[k]);
    }
  }
}

TEST(GammaMax, IntervalIsOrdered) {
  std::mt19937_64 gen(19);
  for (int trial = 0; trial < 100; ++trial) {
    const auto inst = testing::random_instance(gen, 1 + trial % 4, 1 + trial % 5);
    const OrderedModel model(inst.model);
    const auto interval = price_interval(model, inst.option, initial_state(inst.model));
    EXPECT_LE(interval.gamma_min, interval.gamma_max + 1e-12);
  }
  // One clipped and one active vertex term make the inequality strict.
  const OrderedModel model(one_asset_model());
  const auto interval = price_interval(model, one_asset_call(), initial_state(model.base()));
  EXPECT_LT(interval.gamma_min + 0.3, interval.gamma_max);
}

TEST(GammaMin, JensenContinuation) {
  std::mt19937_64 gen(23);
  for (int trial = 0; trial < 30; ++trial) {
    const auto inst = testing::random_instance(gen, 1 + trial % 3, 4);
    const OrderedModel model(inst.model);
    auto path = testing::random_path(gen, inst.model.m, 4);
    const auto state = state_after(inst.model, std::span(path).first(2));
    // Continue with omega = b for the remaining steps: every asset grows by R.
    const auto b = compute_b(inst.model);
    path[2] = b;
    path[3] = b;
    const auto end = state_after(inst.model, path);
    const double expected = std::pow(inst.model.R, -2.0) * payoff(inst.option, end.prices);
    EXPECT_NEAR(gamma_min(model, inst.option, state), expected, 1e-12 * (1.0 + expected));
  }
}

TEST(YValues, RunningExample) {
  const OrderedModel model(one_asset_model());
  const auto Y = y_values(model, one_asset_call(), initial_state(model.base()));
  ASSERT_EQ(Y.size(), 2u);
  EXPECT_DOUBLE_EQ(Y[0], 0.0);
  EXPECT_DOUBLE_EQ(Y[1], 1.0);
}

TEST(YValues, MatchSuccessorGammaMaxAndRecursion) {
  std::mt19937_64 gen(29);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t m = 1 + trial % 4;
    const auto inst = testing::random_instance(gen, m, 4);
    const OrderedModel model(inst.model);
    const auto path = testing::random_path(gen, m, 4);
    MarketState state = initial_state(inst.model);
    for (std::size_t k = 0; k < 4; ++k) {
      const auto Y = y_values(model, inst.option, state);
      double weighted = 0.0;
      for (std::size_t t = 0; t <= m; ++t) {
        EXPECT_DOUBLE_EQ(Y[t], gamma_max(model, inst.option, vertex_successor(model, state, t)));
        weighted += model.q()[t] * Y[t];
      }
      const double upper = gamma_max(model, inst.option, state);
      EXPECT_NEAR(weighted / model.R(), upper, 1e-10 * (1.0 + upper));
      state = advance(inst.model, state, path[k]);
    }
  }
}

TEST(YValues, RequiresTimeBeforeHorizon) {
  const OrderedModel model(one_asset_model());
  const MarketState end{1, {1.0, 2.0}};
  EXPECT_THROW(y_values(model, one_asset_call(), end), ModelError);
}

TEST(GammaMaxNaive, CapIsEnforced) {
  const OrderedModel model(two_asset_model(12));
  EXPECT_THROW(gamma_max_naive(model, two_asset_call(), initial_state(model.base()), 1000), EnumerationCapExceeded);
}

TEST(GammaMax, ZeroWeightVerticesAreSkipped) {
  // Tied b gives q_1 = 0.
  const MarketModel tied{2, 5, 1.0, {1.0, 1.0, 1.0}, {0.6, 0.2}, {1.6, 2.2}};
  const OrderedModel model(tied);
  ASSERT_EQ(model.q()[1], 0.0);
  const BasketOption option{{0.0, 1.0, 1.0}, 2.0};
  const auto result = gamma_max_detailed(model, option, initial_state(tied));
  EXPECT_EQ(result.count_vectors, 21u);
  EXPECT_EQ(result.evaluated_terms, 6u);
  EXPECT_NEAR(result.value, gamma_max_naive(model, option, initial_state(tied)), 1e-12);
}

TEST(GammaMax, BitStableAcrossThreadCounts) {
  std::mt19937_64 gen(31);
  const auto inst = testing::random_instance(gen, 4, 18);
  const OrderedModel model(inst.model);
  const auto start = initial_state(inst.model);
  const double serial = gamma_max(model, inst.option, start, 1);
  for (std::size_t threads : {2u, 3u, 8u}) EXPECT_EQ(gamma_max(model, inst.option, start, threads), serial);
}

// Beyond 40 remaining steps the coefficients come from log space; the value
// must stay continuous with the direct route (compare n = 40 vs 41 via the
// recursion identity, which mixes both routes).
TEST(GammaMax, LogSpaceRouteAgreesWithRecursion) {
  std::mt19937_64 gen(37);
  const auto inst = testing::random_instance(gen, 2, 42);
  const OrderedModel model(inst.model);
  MarketState state = initial_state(inst.model);
  state = advance(inst.model, state, std::vector<double>{0.3, 0.7});  // 41 steps left
  const auto Y = y_values(model, inst.option, state);                  // 40 steps left
  double weighted = 0.0;
  for (std::size_t t = 0; t <= 2; ++t) weighted += model.q()[t] * Y[t];
  const double upper = gamma_max(model, inst.option, state);
  EXPECT_NEAR(weighted / model.R(), upper, 1e-10 * (1.0 + upper));
}

TEST(DumpTerms, CsvMatchesSum) {
  const OrderedModel model(two_asset_model(2));
  std::ostringstream out;
  dump_gamma_max_terms(model, two_asset_call(), initial_state(model.base()), out);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "n_0,n_1,n_2,multinomial_weight,q_weight,basket_value,clipped_term");
  double total = 0.0;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    total += std::stod(line.substr(line.rfind(',') + 1));
  }
  EXPECT_EQ(rows, 6u);
  EXPECT_NEAR(total, gamma_max(model, two_asset_call(), initial_state(model.base())), 1e-15);
}

}  // namespace
}  // namespace cbm
