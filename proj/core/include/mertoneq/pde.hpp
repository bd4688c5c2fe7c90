#pragma once

#include <cstddef>
#include <optional>

#include "mertoneq/discount.hpp"
#include "mertoneq/grid.hpp"
#include "mertoneq/market.hpp"
#include "mertoneq/theta_surface.hpp"
#include "mertoneq/utility.hpp"

namespace mertoneq {

struct SpatialDomain {
  double x_min;
  double x_max;
};

enum class BoundaryMode {
  automatic,    // separable closed form when the utility has one, otherwise extrapolation
  closed_form,
  extrapolate,  // theta_zz = 0 at both ends
};

struct PdeSettings {
  SpatialDomain domain{0.05, 20.0};
  std::size_t space_steps = 400;
  std::optional<SpatialCoordinate> coordinate;  // default: ln x for power/log, x for exponential
  BoundaryMode boundary = BoundaryMode::automatic;
  double time_weight = 0.5;  // 0.5 Crank-Nicolson, 1 backward Euler
  int max_newton = 50;
  double newton_tol = 1e-10;
  double diffusion_warning = 5.0;
};

// [0.05 x0, 20 x0] for power/log, x0 -/+ 5/gamma for exponential.
SpatialDomain default_domain(const Utility& u, double x0);

// Backward solve of
//   theta_t + (r0 x - I(lambda(T-t) theta)) theta_x - R theta
//     + R theta^2 theta_xx / (2 theta_x^2) + r0 theta = 0,   theta(T, x) = h_x(x),
// with R = r^T Sigma r.
ThetaSurface solve_theta(const MarketModel& m, const DiscountFunction& d, const Utility& u,
                         const TimeGrid& grid, const PdeSettings& settings);

}  // namespace mertoneq
