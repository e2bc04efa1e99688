#include "cbm/measures.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "cbm/numeric.hpp"

namespace cbm {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double boundary_margin(std::span<const double> point) {
  double margin = std::numeric_limits<double>::infinity();
  for (double x : point) margin = std::min({margin, x, 1.0 - x});
  return margin;
}

}  // namespace

std::string to_string(MeasureKind kind) {
  switch (kind) {
    case MeasureKind::UniformMixture: return "uniform-mixture";
    case MeasureKind::VertexBoxes: return "vertex-boxes";
    case MeasureKind::CenterBox: return "center-box";
  }
  return "unknown";
}

Rng Rng::stream(std::uint64_t seed, std::uint64_t index) {
  return Rng(splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL)));
}

std::vector<double> OneStepMeasure::analytic_mean() const {
  std::vector<double> mean(dim, 0.5 * beta);
  for (const BoxAtom& atom : atoms) {
    for (std::size_t j = 0; j < dim; ++j) mean[j] += atom.weight * atom.center[j];
  }
  return mean;
}

OneStepMeasure make_product_measure(std::span<const double> b, double beta,
                                    std::span<const WeightedPoint> atoms, double r_max) {
  const std::size_t dim = b.size();
  if (!(beta > 0.0 && beta <= 1.0)) throw MeasureInfeasible(fmt::format("beta = {} outside (0,1]", beta));
  for (std::size_t j = 0; j < dim; ++j) {
    if (!(b[j] > 0.0 && b[j] < 1.0)) throw MeasureInfeasible(fmt::format("b_{} outside (0,1)", j + 1));
  }
  OneStepMeasure measure;
  measure.dim = dim;
  measure.beta = beta;
  if (atoms.empty()) {
    if (beta != 1.0) throw MeasureInfeasible("a measure without atoms needs beta = 1");
    for (double x : b) {
      if (std::abs(x - 0.5) > 1e-12) throw MeasureInfeasible("the uniform measure has mean 1/2, not b");
    }
    return measure;
  }
  if (beta >= 1.0) throw MeasureInfeasible("beta must be < 1 when atoms are present");
  if (!(r_max > 0.0)) throw MeasureInfeasible("box radius cap must be positive");

  const double k = static_cast<double>(atoms.size());
  CompensatedSum total;
  for (const WeightedPoint& atom : atoms) {
    if (atom.point.size() != dim) throw MeasureInfeasible("atom dimension does not match b");
    if (!(atom.weight - beta / k > 0.0)) {
      throw MeasureInfeasible(fmt::format("atom weight {} does not exceed beta/k = {}", atom.weight, beta / k));
    }
    total.add(atom.weight);
  }
  if (std::abs(total.value() - 1.0) > 1e-12) {
    throw MeasureInfeasible(fmt::format("atom weights sum to {}, expected 1", total.value()));
  }

  measure.atoms.resize(atoms.size());
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    measure.atoms[i].center = atoms[i].point;
    measure.atoms[i].weight = atoms[i].weight - beta / k;
  }
  // Solve the mean equation for the first centre.
  BoxAtom& first = measure.atoms.front();
  for (std::size_t j = 0; j < dim; ++j) {
    double rest = b[j] - 0.5 * beta;
    for (std::size_t i = 1; i < measure.atoms.size(); ++i) {
      rest -= measure.atoms[i].weight * measure.atoms[i].center[j];
    }
    first.center[j] = rest / first.weight;
  }

  double margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < measure.atoms.size(); ++i) {
    const double atom_margin = boundary_margin(measure.atoms[i].center);
    if (!(atom_margin > 0.0)) {
      throw MeasureInfeasible(fmt::format("centre of atom {} leaves (0,1)^m; reduce beta or move the atoms", i));
    }
    margin = std::min(margin, atom_margin);
  }
  const double radius = std::min(r_max, 0.5 * margin);
  for (BoxAtom& atom : measure.atoms) atom.radius = radius;
  return measure;
}

OneStepMeasure make_extremal_measure(const OrderedModel& model, double beta, double delta) {
  const std::size_t m = model.m();
  if (!(delta > 0.0 && delta < 1.0)) throw MeasureInfeasible("delta must lie in (0,1)");
  const auto& q = model.q();
  const auto& b_sorted = model.b();
  const std::vector<double> b_user = compute_b(model.base());

  std::vector<std::size_t> retained;
  for (std::size_t j = 0; j <= m; ++j) {
    if (q[j] > 0.0) retained.push_back(j);
  }
  double q_min = 1.0;
  for (std::size_t j : retained) q_min = std::min(q_min, q[j]);
  if (!(beta > 0.0) || beta >= q_min) {
    throw MeasureInfeasible(fmt::format("beta = {} must lie in (0, min q_j = {})", beta, q_min));
  }
  // The heaviest vertex absorbs the mean correction.
  std::stable_sort(retained.begin(), retained.end(), [&](std::size_t a, std::size_t c) { return q[a] > q[c]; });

  double b_margin = boundary_margin(b_sorted);
  const double r_max = std::nextafter(delta / 3.0, 0.0);
  // Pull each vertex towards b by lambda; the weighted mean of the pulled
  // points stays b. Enlarge lambda until the solved centre keeps a margin.
  for (double lambda = 0.25 * delta; lambda <= 0.5; lambda *= 2.0) {
    std::vector<WeightedPoint> atoms;
    for (std::size_t j : retained) {
      std::vector<double> point(m);
      for (std::size_t p = 0; p < m; ++p) {
        const double vertex = p < j ? 1.0 : 0.0;
        point[model.perm()[p] - 1] = vertex + lambda * (b_sorted[p] - vertex);
      }
      atoms.push_back(WeightedPoint{std::move(point), q[j]});
    }
    try {
      OneStepMeasure measure = make_product_measure(b_user, beta, atoms, r_max);
      if (measure.atoms.front().radius >= 0.25 * std::min(r_max, 0.5 * lambda * b_margin)) {
        measure.kind = MeasureKind::VertexBoxes;
        return measure;
      }
    } catch (const MeasureInfeasible&) {
    }
  }
  throw MeasureInfeasible(fmt::format("no interior vertex perturbation supports beta = {}", beta));
}

OneStepMeasure make_jensen_measure(std::span<const double> b, double delta, double beta) {
  if (!(delta > 0.0)) throw MeasureInfeasible("delta must be positive");
  const std::vector<WeightedPoint> atoms{WeightedPoint{std::vector<double>(b.begin(), b.end()), 1.0}};
  OneStepMeasure measure = make_product_measure(b, beta, atoms, delta);
  if (boundary_margin(measure.atoms.front().center) <= delta) {
    throw MeasureInfeasible(fmt::format("b is within delta = {} of the cube boundary", delta));
  }
  measure.atoms.front().radius = delta;
  measure.kind = MeasureKind::CenterBox;
  return measure;
}

OneStepMeasure make_mixture_measure(std::span<const double> b, double beta, std::size_t atom_count, Rng& rng,
                                    double r_max) {
  const std::size_t dim = b.size();
  if (atom_count == 0) throw MeasureInfeasible("a mixture needs at least one atom");
  std::vector<WeightedPoint> atoms(atom_count);
  double weight_total = 0.0;
  for (WeightedPoint& atom : atoms) {
    atom.point.resize(dim);
    for (double& x : atom.point) x = rng.uniform();
    atom.weight = 0.5 + rng.uniform();
    weight_total += atom.weight;
  }
  for (WeightedPoint& atom : atoms) atom.weight /= weight_total;
  if (!(beta > 0.0 && beta < 1.0)) throw MeasureInfeasible(fmt::format("beta = {} outside (0,1)", beta));
  const double k = static_cast<double>(atom_count);

  // The boxes, weighted by (q_i - beta/k)/(1 - beta), must average to
  // (b - beta/2)/(1 - beta) for the mixture with the background to have mean b.
  std::vector<double> target(dim);
  for (std::size_t j = 0; j < dim; ++j) target[j] = (b[j] - 0.5 * beta) / (1.0 - beta);
  const double margin = 0.25 * boundary_margin(target);
  if (!(margin > 0.0)) throw MeasureInfeasible("b is too close to the boundary for this beta");

  std::vector<double> mean(dim, 0.0);
  for (const WeightedPoint& atom : atoms) {
    if (!(atom.weight > beta / k)) throw MeasureInfeasible("beta too large for the drawn atom weights");
    for (std::size_t j = 0; j < dim; ++j) mean[j] += (atom.weight - beta / k) / (1.0 - beta) * atom.point[j];
  }
  // Contract the spread around the target until every point keeps the margin.
  double scale = 1.0;
  for (const WeightedPoint& atom : atoms) {
    for (std::size_t j = 0; j < dim; ++j) {
      const double offset = atom.point[j] - mean[j];
      if (offset > 0.0) scale = std::min(scale, (1.0 - margin - target[j]) / offset);
      if (offset < 0.0) scale = std::min(scale, (margin - target[j]) / offset);
    }
  }
  for (WeightedPoint& atom : atoms) {
    for (std::size_t j = 0; j < dim; ++j) atom.point[j] = target[j] + scale * (atom.point[j] - mean[j]);
  }
  OneStepMeasure measure = make_product_measure(b, beta, atoms, r_max);
  measure.kind = MeasureKind::UniformMixture;
  return measure;
}

std::vector<double> sample_step(const OneStepMeasure& measure, Rng& rng) {
  std::vector<double> point(measure.dim);
  const double pick = rng.uniform();
  double cumulative = measure.beta;
  const BoxAtom* chosen = nullptr;
  if (pick >= cumulative) {
    for (const BoxAtom& atom : measure.atoms) {
      cumulative += atom.weight;
      chosen = &atom;
      if (pick < cumulative) break;
    }
  }
  for (std::size_t j = 0; j < measure.dim; ++j) {
    const double u = rng.uniform();
    point[j] = chosen ? chosen->center[j] + chosen->radius * (2.0 * u - 1.0) : u;
  }
  return point;
}

std::vector<std::vector<double>> sample_path(const PathMeasure& measure, Rng& rng) {
  std::vector<std::vector<double>> path;
  path.reserve(measure.steps.size());
  for (const OneStepMeasure& step : measure.steps) path.push_back(sample_step(step, rng));
  return path;
}

McEstimate mc_price(const OrderedModel& model, const BasketOption& option, const PathMeasure& measure,
                    const McConfig& config) {
  const MarketModel& base = model.base();
  if (measure.steps.size() != base.n) {
    throw ModelError(fmt::format("path measure has {} steps, model has n = {}", measure.steps.size(), base.n));
  }
  if (config.samples < 2) throw ModelError("mc_price needs at least 2 samples");
  if (config.batch_size == 0) throw ModelError("batch size must be positive");
  for (const OneStepMeasure& step : measure.steps) {
    if (step.dim != base.m) throw ModelError("measure dimension does not match m");
  }

  const std::size_t batches = (config.samples + config.batch_size - 1) / config.batch_size;
  std::vector<double> sums(batches), squares(batches);
  parallel_for(batches, config.threads, [&](std::size_t batch) {
    Rng rng = Rng::stream(config.seed, batch);
    const std::size_t begin = batch * config.batch_size;
    const std::size_t end = std::min(config.samples, begin + config.batch_size);
    CompensatedSum sum, square;
    std::vector<double> prices(base.m + 1);
    for (std::size_t s = begin; s < end; ++s) {
      std::copy(base.S0.begin(), base.S0.end(), prices.begin());
      for (const OneStepMeasure& step : measure.steps) {
        const std::vector<double> omega = sample_step(step, rng);
        prices[0] *= base.R;
        for (std::size_t i = 0; i < base.m; ++i) prices[i + 1] *= base.D[i] + (base.U[i] - base.D[i]) * omega[i];
      }
      const double value = payoff(option, prices);
      sum.add(value);
      square.add(value * value);
    }
    sums[batch] = sum.value();
    squares[batch] = square.value();
  });

  CompensatedSum sum, square;
  for (std::size_t i = 0; i < batches; ++i) {
    sum.add(sums[i]);
    square.add(squares[i]);
  }
  const double count = static_cast<double>(config.samples);
  const double mean = sum.value() / count;
  const double variance = std::max(0.0, (square.value() - count * mean * mean) / (count - 1.0));
  const double disc = std::pow(base.R, -static_cast<double>(base.n));
  return McEstimate{disc * mean, disc * std::sqrt(variance / count), config.samples, config.seed};
}

MeanCheck check_mean_b(const OneStepMeasure& measure, std::span<const double> b, double tolerance) {
  MeanCheck check;
  check.mean = measure.analytic_mean();
  if (check.mean.size() != b.size()) return check;
  for (std::size_t j = 0; j < b.size(); ++j) {
    check.max_deviation = std::max(check.max_deviation, std::abs(check.mean[j] - b[j]));
  }
  double weights = measure.beta;
  for (const BoxAtom& atom : measure.atoms) weights += atom.weight;
  check.passed = check.max_deviation <= tolerance && std::abs(weights - 1.0) <= tolerance;
  return check;
}

McReport make_mc_report(MeasureKind kind, double beta, double delta, const McEstimate& estimate,
                        double gamma_min, double gamma_max) {
  // Floor for degenerate claims whose sampled payoff has zero variance.
  const double band = kStdErrorMultiplier * estimate.std_error + 1e-12 * (1.0 + std::abs(gamma_max));
  return McReport{kind,
                  beta,
                  delta,
                  estimate.samples,
                  estimate.seed,
                  estimate.estimate,
                  estimate.std_error,
                  gamma_min,
                  gamma_max,
                  estimate.estimate > gamma_min - band && estimate.estimate < gamma_max + band};
}

}  // namespace cbm
