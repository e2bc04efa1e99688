#include "cbm/deformation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <fmt/format.h>

#include "cbm/pricing.hpp"

namespace cbm {

DeformedParams deformed_params(const MarketModel& model, double s) {
  validate_model(model);
  if (!(s >= 0.0 && s < 1.0)) throw ModelError(fmt::format("deformation parameter s = {} outside [0,1)", s));
  s = std::min(s, kMaxDeformation);
  const std::vector<double> b = compute_b(model);
  DeformedParams params{s, std::vector<double>(model.m), std::vector<double>(model.m)};
  for (std::size_t i = 0; i < model.m; ++i) {
    if (s == 0.0) {
      params.d[i] = model.D[i];
      params.u[i] = model.U[i];
      continue;
    }
    params.d[i] = model.D[i] + (model.R - model.D[i]) * s;
    params.u[i] = (model.R - (1.0 - b[i]) * params.d[i]) / b[i];
    // b is preserved up to the rounding of R - d(s), which grows as s -> 1.
    const double gap = model.R - params.d[i];
    const double b_s = gap / (params.u[i] - params.d[i]);
    const double allowed = 1e-12 + 8.0 * std::numeric_limits<double>::epsilon() * model.U[i] / gap;
    if (!(std::abs(b_s - b[i]) <= allowed)) {
      throw std::logic_error(fmt::format("deformation changed b_{}: {} vs {}", i + 1, b_s, b[i]));
    }
  }
  return params;
}

MarketModel deformed_model(const MarketModel& model, double s) {
  const DeformedParams params = deformed_params(model, s);
  MarketModel out = model;
  out.D = params.d;
  out.U = params.u;
  return out;
}

double phi(const MarketModel& model, const BasketOption& option, double s) {
  const MarketModel deformed = deformed_model(model, s);
  const OrderedModel ordered(deformed);
  return gamma_max(ordered, option, initial_state(deformed));
}

DeformationSolution solve_deformation(const MarketModel& model, const BasketOption& option, double target,
                                      const DeformationSolveOptions& options) {
  const OrderedModel base(model);
  const MarketState start = initial_state(model);
  const double lower = gamma_min(base, option, start);
  const double upper = gamma_max(base, option, start);
  if (!(target > lower && target < upper)) {
    throw DeformationError(
        fmt::format("target not interior: {} is not in the open interval ({}, {})", target, lower, upper));
  }
  const double tolerance = options.tolerance * (1.0 + upper);

  DeformationSolution solution;
  auto f = [&](double s) {
    ++solution.evaluations;
    return phi(model, option, s) - target;
  };

  for (std::size_t points = std::max<std::size_t>(options.grid_points, 2); points <= options.max_grid_points;
       points *= 2) {
    double s_prev = 0.0;
    double f_prev = upper - target;
    for (std::size_t g = 1; g < points; ++g) {
      const double s = kMaxDeformation * static_cast<double>(g) / static_cast<double>(points - 1);
      const double f_s = f(s);
      if (std::abs(f_s) <= tolerance) {
        return DeformationSolution{s, f_s + target, points, solution.evaluations};
      }
      if ((f_prev > 0.0) != (f_s > 0.0)) {
        double lo = s_prev, hi = s, f_lo = f_prev;
        double mid = 0.5 * (lo + hi), f_mid = f(mid);
        while (std::abs(f_mid) > tolerance) {
          if (!(hi - lo > 4.0 * std::numeric_limits<double>::epsilon())) {
            throw DeformationError(
                fmt::format("bisection stalled at s = {} with |phi - target| = {}", mid, std::abs(f_mid)));
          }
          if ((f_lo > 0.0) == (f_mid > 0.0)) {
            lo = mid;
            f_lo = f_mid;
          } else {
            hi = mid;
          }
          mid = 0.5 * (lo + hi);
          f_mid = f(mid);
        }
        return DeformationSolution{mid, f_mid + target, points, solution.evaluations};
      }
      s_prev = s;
      f_prev = f_s;
    }
  }
  throw DeformationError(fmt::format("no bracket for target {} with up to {} grid points", target,
                                     options.max_grid_points));
}

void write_deformation_sweep(const MarketModel& model, const BasketOption& option, std::size_t points,
                             std::ostream& out) {
  points = std::max<std::size_t>(points, 2);
  out << 's';
  for (std::size_t i = 1; i <= model.m; ++i) out << ",d_" << i;
  for (std::size_t i = 1; i <= model.m; ++i) out << ",u_" << i;
  out << ",phi\n";
  for (std::size_t g = 0; g < points; ++g) {
    const double s = kMaxDeformation * static_cast<double>(g) / static_cast<double>(points - 1);
    const DeformedParams params = deformed_params(model, s);
    std::string line = fmt::format("{:.17g}", params.s);
    for (double d : params.d) line += fmt::format(",{:.17g}", d);
    for (double u : params.u) line += fmt::format(",{:.17g}", u);
    line += fmt::format(",{:.17g}\n", phi(model, option, s));
    out << line;
  }
}

}  // namespace cbm
