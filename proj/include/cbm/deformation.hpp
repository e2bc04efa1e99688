#pragma once

// Linear shrinking of the jump bounds towards R at fixed b, and the root
// finder that moves the upper price endpoint onto a target value.

#include <cstddef>
#include <iosfwd>
#include <stdexcept>
#include <vector>

#include "cbm/model.hpp"

namespace cbm {

/// Largest s used in place of the open end s -> 1, where d = u = R.
inline constexpr double kMaxDeformation = 1.0 - 1e-9;

struct DeformedParams {
  double s = 0.0;
  std::vector<double> d;  // user order
  std::vector<double> u;
};

/// d_i(s) = D_i + (R - D_i) s, u_i(s) = (R - (1 - b_i) d_i(s)) / b_i.
/// Requires 0 <= s < 1; s above kMaxDeformation is clamped.
DeformedParams deformed_params(const MarketModel& model, double s);

/// The base model with D, U replaced by d(s), u(s).
MarketModel deformed_model(const MarketModel& model, double s);

/// gamma_max(F, 0) of the deformed model.
double phi(const MarketModel& model, const BasketOption& option, double s);

class DeformationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct DeformationSolveOptions {
  std::size_t grid_points = 64;
  std::size_t max_grid_points = 4096;
  double tolerance = 1e-9;  // relative to 1 + gamma_max(F, 0)
};

struct DeformationSolution {
  double s = 0.0;
  double phi = 0.0;
  std::size_t grid_points = 0;  // grid size at which the bracket was found
  std::size_t evaluations = 0;
};

/// Smallest-s root of phi(s) = target. Scans a uniform grid on
/// [0, kMaxDeformation] for the first sign change, doubling the grid up to
/// max_grid_points, then bisects. Throws DeformationError when the target is
/// not strictly inside (gamma_min, gamma_max) or no bracket is found.
DeformationSolution solve_deformation(const MarketModel& model, const BasketOption& option, double target,
                                      const DeformationSolveOptions& options = {});

/// CSV rows s,d_1..d_m,u_1..u_m,phi for `points` evenly spaced s in
/// [0, kMaxDeformation].
void write_deformation_sweep(const MarketModel& model, const BasketOption& option, std::size_t points,
                             std::ostream& out);

}  // namespace cbm
