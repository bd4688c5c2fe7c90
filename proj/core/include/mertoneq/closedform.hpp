#pragma once

#include "mertoneq/curve.hpp"
#include "mertoneq/discount.hpp"
#include "mertoneq/grid.hpp"
#include "mertoneq/market.hpp"

namespace mertoneq {

// All curves are node values on the solve grid, interpolated linearly.
// ode_residual is the sup-norm residual of the defining ODE on the grid
// (fourth-order finite-difference time derivative).

struct PowerCoefficients {
  TimeGrid grid;
  double a;
  double gamma;
  Curve K;
  Curve Q;
  Curve y;
  Curve Pi;
  double ode_residual;
};

struct LogCoefficients {
  TimeGrid grid;
  double a;
  Curve varphi;
  double ode_residual;
};

struct ExpCoefficients {
  TimeGrid grid;
  double a;
  double gamma;
  Curve phi;
  Curve psi;
  double ode_residual;
};

PowerCoefficients solve_power(const MarketModel& m, const DiscountFunction& d, double a,
                              double gamma, const TimeGrid& grid);
LogCoefficients solve_log(const MarketModel& m, const DiscountFunction& d, double a,
                          const TimeGrid& grid);
ExpCoefficients solve_exponential(const MarketModel& m, const DiscountFunction& d, double a,
                                  double gamma, const TimeGrid& grid);

}  // namespace mertoneq
