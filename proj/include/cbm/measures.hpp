#pragma once

// Sampleable risk-neutral path measures and Monte-Carlo price checks.
//
// Every one-step measure is a mixture of a uniform background on [0,1]^m
// (weight beta) and uniform boxes strictly inside the cube. Means are known in
// closed form, the density is bounded and positive everywhere, and the mean is
// set to b exactly by solving for the centre of one box. A product of such
// steps has conditional mean b at every step, which makes every discounted
// asset price a martingale.

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cbm/model.hpp"

namespace cbm {

class MeasureInfeasible : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

enum class MeasureKind { UniformMixture, VertexBoxes, CenterBox };

std::string to_string(MeasureKind kind);

struct BoxAtom {
  std::vector<double> center;
  double radius = 0.0;
  double weight = 0.0;
};

struct OneStepMeasure {
  MeasureKind kind = MeasureKind::UniformMixture;
  std::size_t dim = 0;
  double beta = 1.0;  // uniform background weight
  std::vector<BoxAtom> atoms;

  std::vector<double> analytic_mean() const;
};

struct PathMeasure {
  std::vector<OneStepMeasure> steps;

  static PathMeasure homogeneous(const OneStepMeasure& step, std::size_t n) {
    return PathMeasure{std::vector<OneStepMeasure>(n, step)};
  }
};

/// Counter-indexed substreams: stream(seed, i) is a fixed function of
/// (seed, i), so batches can be drawn in any order or on any thread.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  static Rng stream(std::uint64_t seed, std::uint64_t index);

  /// Uniform on [0,1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

private:
  std::mt19937_64 engine_;
};

struct WeightedPoint {
  std::vector<double> point;
  double weight = 0.0;  // the q_i of the finite measure being smoothed
};

inline constexpr double kDefaultBeta = 1e-3;

/// beta * uniform + sum_i (q_i - beta/k) * box(centre_i, r). The first atom's
/// centre is solved from the mean equation
///   beta/2 + sum_i (q_i - beta/k) centre_i = b,
/// which is the first-atom shift of the smoothing construction when
/// sum_i q_i point_i = b. r = min(r_max, half the smallest distance from any
/// centre to the cube boundary). beta = 1 with no atoms gives the uniform
/// measure (requires b = 1/2).
OneStepMeasure make_product_measure(std::span<const double> b, double beta,
                                    std::span<const WeightedPoint> atoms, double r_max);

/// Smoothed upper supermodular vertex: boxes near interior copies of the chain
/// vertices rho_0..rho_m (sorted order, mapped back to user coordinates) with
/// weights q_j - beta/k', plus beta * uniform. Vertices with q_j = 0 are
/// dropped. Box radius < delta/3.
OneStepMeasure make_extremal_measure(const OrderedModel& model, double beta, double delta);

/// Single box of radius delta around (b - beta/2)/(1 - beta) plus
/// beta * uniform. Approximates the point mass at b.
OneStepMeasure make_jensen_measure(std::span<const double> b, double delta, double beta = kDefaultBeta);

/// Random interior atoms pulled towards b so that their weighted mean is b,
/// then smoothed as in make_product_measure. Used as a generic (neither
/// extremal nor Jensen) member of the measure family.
OneStepMeasure make_mixture_measure(std::span<const double> b, double beta, std::size_t atom_count, Rng& rng,
                                    double r_max = 0.05);

/// One draw per step: choose the component by weight, then a uniform point in
/// it.
std::vector<double> sample_step(const OneStepMeasure& measure, Rng& rng);
std::vector<std::vector<double>> sample_path(const PathMeasure& measure, Rng& rng);

struct McEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
};

struct McConfig {
  std::size_t samples = 100'000;
  std::uint64_t seed = 0;
  std::size_t batch_size = 4096;
  std::size_t threads = 1;
};

/// R^(-n) times the sample mean of the payoff over paths drawn from `measure`.
/// Identical for a given (seed, samples, batch_size) whatever the thread
/// count.
McEstimate mc_price(const OrderedModel& model, const BasketOption& option, const PathMeasure& measure,
                    const McConfig& config);

struct MeanCheck {
  bool passed = false;
  std::vector<double> mean;
  double max_deviation = 0.0;
};

MeanCheck check_mean_b(const OneStepMeasure& measure, std::span<const double> b, double tolerance = 1e-12);

inline constexpr double kStdErrorMultiplier = 4.0;

struct McReport {
  MeasureKind kind = MeasureKind::UniformMixture;
  double beta = 0.0;
  double delta = 0.0;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  double estimate = 0.0;
  double std_error = 0.0;
  double gamma_min = 0.0;
  double gamma_max = 0.0;
  bool verdict = false;  // estimate in (gamma_min - 4 SE, gamma_max + 4 SE)
};

McReport make_mc_report(MeasureKind kind, double beta, double delta, const McEstimate& estimate,
                        double gamma_min, double gamma_max);

}  // namespace cbm
