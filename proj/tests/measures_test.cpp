#include "cbm/measures.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cbm/pricing.hpp"
#include "test_support.hpp"

namespace cbm {
namespace {

using testing::one_asset_call;
using testing::one_asset_model;
using testing::two_asset_call;
using testing::two_asset_model;

bool inside_cube(const OneStepMeasure& measure) {
  for (const BoxAtom& atom : measure.atoms) {
    for (double x : atom.center) {
      if (!(x - atom.radius > 0.0 && x + atom.radius < 1.0)) return false;
    }
  }
  return true;
}

TEST(Rng, StreamsAreDeterministicAndDistinct) {
  Rng a = Rng::stream(7, 3);
  Rng b = Rng::stream(7, 3);
  Rng c = Rng::stream(7, 4);
  for (int i = 0; i < 10; ++i) {
    const double x = a.uniform();
    EXPECT_EQ(x, b.uniform());
    EXPECT_NE(x, c.uniform());
    EXPECT_GE(x, 0.0);
    EXPECT_LT(x, 1.0);
  }
}

TEST(ProductMeasure, UniformNeedsHalf) {
  const std::vector<double> half{0.5, 0.5};
  const auto uniform = make_product_measure(half, 1.0, {}, 0.1);
  EXPECT_TRUE(uniform.atoms.empty());
  EXPECT_TRUE(check_mean_b(uniform, half).passed);
  const std::vector<double> other{0.4, 0.5};
  EXPECT_THROW(make_product_measure(other, 1.0, {}, 0.1), MeasureInfeasible);
}

TEST(ProductMeasure, RejectsSmallWeights) {
  const std::vector<double> b{0.5};
  const std::vector<WeightedPoint> atoms{{{0.2}, 0.5}, {{0.8}, 0.5}};
  EXPECT_NO_THROW(make_product_measure(b, 0.1, atoms, 0.05));
  const std::vector<WeightedPoint> light{{{0.5}, 0.1}, {{0.5}, 0.9}};
  EXPECT_THROW(make_product_measure(b, 0.3, light, 0.05), MeasureInfeasible);
  const std::vector<WeightedPoint> unnormalised{{{0.2}, 0.5}, {{0.8}, 0.4}};
  EXPECT_THROW(make_product_measure(b, 0.1, unnormalised, 0.05), MeasureInfeasible);
}

TEST(ExtremalMeasure, MeanIsBAndBoxesInside) {
  std::mt19937_64 gen(59);
  int built = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const auto inst = testing::random_instance(gen, 1 + trial % 3, 2);
    const OrderedModel model(inst.model);
    const double q_min = *std::min_element(model.q().begin(), model.q().end());
    if (q_min <= 1e-3) continue;
    const auto measure = make_extremal_measure(model, 1e-3, 1e-3);
    ++built;
    EXPECT_EQ(measure.kind, MeasureKind::VertexBoxes);
    EXPECT_TRUE(check_mean_b(measure, compute_b(inst.model)).passed);
    EXPECT_TRUE(inside_cube(measure));
    for (const BoxAtom& atom : measure.atoms) EXPECT_LT(atom.radius, 1e-3 / 3.0);
  }
  EXPECT_GT(built, 30);
}

TEST(ExtremalMeasure, BetaAboveSmallestWeightIsInfeasible) {
  const OrderedModel model(two_asset_model());
  EXPECT_THROW(make_extremal_measure(model, 0.2, 1e-3), MeasureInfeasible);
}

TEST(JensenMeasure, MeanAndRadius) {
  const std::vector<double> b{0.5, 1.0 / 3.0};
  const auto measure = make_jensen_measure(b, 1e-3);
  EXPECT_EQ(measure.kind, MeasureKind::CenterBox);
  ASSERT_EQ(measure.atoms.size(), 1u);
  EXPECT_DOUBLE_EQ(measure.atoms[0].radius, 1e-3);
  EXPECT_TRUE(check_mean_b(measure, b).passed);
  const std::vector<double> edge{0.0005};
  EXPECT_THROW(make_jensen_measure(edge, 1e-3), MeasureInfeasible);
}

TEST(MixtureMeasure, MeanIsB) {
  Rng rng(61);
  const std::vector<double> b{0.3, 0.6, 0.45};
  for (int trial = 0; trial < 20; ++trial) {
    const auto measure = make_mixture_measure(b, 0.1, 4, rng);
    EXPECT_TRUE(check_mean_b(measure, b).passed);
    EXPECT_TRUE(inside_cube(measure));
  }
}

TEST(Sampling, EmpiricalMeanNearB) {
  const std::vector<double> b{0.5, 1.0 / 3.0};
  Rng construction(67);
  const auto measure = make_mixture_measure(b, 0.2, 3, construction);
  Rng rng(71);
  std::vector<double> sum(2, 0.0);
  const int draws = 200000;
  for (int i = 0; i < draws; ++i) {
    const auto x = sample_step(measure, rng);
    for (std::size_t j = 0; j < 2; ++j) {
      EXPECT_GE(x[j], 0.0);
      EXPECT_LE(x[j], 1.0);
      sum[j] += x[j];
    }
  }
  for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(sum[j] / draws, b[j], 5e-3);
}

TEST(McPrice, ReproducibleAcrossThreads) {
  const OrderedModel model(two_asset_model(3));
  Rng construction(73);
  const auto step = make_mixture_measure(compute_b(model.base()), 0.1, 3, construction);
  McConfig config;
  config.samples = 20000;
  config.seed = 99;
  const auto serial = mc_price(model, two_asset_call(), PathMeasure::homogeneous(step, 3), config);
  config.threads = 4;
  const auto parallel = mc_price(model, two_asset_call(), PathMeasure::homogeneous(step, 3), config);
  EXPECT_EQ(serial.estimate, parallel.estimate);
  EXPECT_EQ(serial.std_error, parallel.std_error);
  EXPECT_EQ(serial.samples, 20000u);
}

TEST(McPrice, RunningExampleEndpoints) {
  const OrderedModel model(one_asset_model());
  const std::vector<double> b{1.0 / 3.0};
  McConfig config;
  config.samples = 100000;
  config.seed = 5;
  const auto upper = mc_price(model, one_asset_call(), PathMeasure::homogeneous(make_extremal_measure(model, 1e-3, 1e-3), 1), config);
  EXPECT_NEAR(upper.estimate, 1.0 / 3.0, std::max(4.0 * upper.std_error, 1e-2));
  const auto lower = mc_price(model, one_asset_call(), PathMeasure::homogeneous(make_jensen_measure(b, 1e-3), 1), config);
  EXPECT_NEAR(lower.estimate, 0.0, std::max(4.0 * lower.std_error, 1e-2));
  const auto report = make_mc_report(MeasureKind::VertexBoxes, 1e-3, 1e-3, upper, 0.0, 1.0 / 3.0);
  EXPECT_TRUE(report.verdict);
}

TEST(McPrice, DimensionMismatchIsRejected) {
  const OrderedModel model(two_asset_model());
  const std::vector<double> b{1.0 / 3.0};
  McConfig config;
  EXPECT_THROW(mc_price(model, two_asset_call(), PathMeasure::homogeneous(make_jensen_measure(b, 1e-3), 1), config),
               ModelError);
}

TEST(McReport, VerdictBand) {
  McEstimate estimate{0.5, 0.01, 1000, 1};
  EXPECT_TRUE(make_mc_report(MeasureKind::UniformMixture, 0.1, 0.1, estimate, 0.52, 0.6).verdict);
  EXPECT_FALSE(make_mc_report(MeasureKind::UniformMixture, 0.1, 0.1, estimate, 0.55, 0.6).verdict);
  EXPECT_EQ(to_string(MeasureKind::CenterBox), "center-box");
}

}  // namespace
}  // namespace cbm
