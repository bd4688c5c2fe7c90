#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "mertoneq/curve.hpp"
#include "mertoneq/discount.hpp"
#include "mertoneq/grid.hpp"
#include "mertoneq/market.hpp"
#include "mertoneq/policy.hpp"
#include "mertoneq/utility.hpp"

namespace mertoneq {

enum class Family {
  classical_merton_log,
  classical_merton_power,
  classical_merton_exp,
  karp_openloop_log,
  karp_openloop_power,
  karp_openloop_exp,
  solano_feedback_log,
  solano_feedback_power,
};

std::string_view family_name(Family f) noexcept;
Utility::Kind family_utility(Family f) noexcept;

// Benchmark strategy tabulated on a grid:
//   c = c0(t) + c1(t) x,   u_I = Sigma(t) r(t) (v0(t) + v1(t) x).
// Sigma r is recomputed at each query from a Cholesky factor of sigma sigma^T.
class ComparisonPolicy final : public Policy {
 public:
  ComparisonPolicy(Family family, const MarketModel& m, Curve c0, Curve c1, Curve v0, Curve v1,
                   std::vector<std::string> notes);

  std::size_t dimension() const override { return market_.dimension(); }
  double consumption(double t, double x) const override;
  void investment_into(double t, double x, std::span<double> out) const override;
  std::optional<AffineControls> affine_form(double t) const override;
  std::string describe() const override;

  Family family() const noexcept { return family_; }
  const std::vector<std::string>& notes() const noexcept { return notes_; }
  Eigen::VectorXd direction(double t) const;
  const Curve& consumption_intercept() const noexcept { return c0_; }
  const Curve& consumption_slope() const noexcept { return c1_; }

 private:
  Family family_;
  MarketModel market_;
  Curve c0_;
  Curve c1_;
  Curve v0_;
  Curve v1_;
  std::vector<std::string> notes_;
};

// Classical Merton strategies under lambda(tau) = exp(-delta0 tau), coded directly from the
// exponential-discount formulas.
ComparisonPolicy classical_merton(const MarketModel& m, const Utility& u, double delta0, const TimeGrid& grid);

// Open-loop equilibrium under lambda(tau) = exp(-int_0^tau delta).
ComparisonPolicy karp_openloop(const MarketModel& m, const Utility& u, const Curve& delta, const TimeGrid& grid);

// Feedback (sophisticated) log strategy under the same discount.
ComparisonPolicy solano_feedback_log(const MarketModel& m, double a, const Curve& delta, const TimeGrid& grid);

struct FixedPointSettings {
  double damping = 0.5;
  double tolerance = 1e-8;
  std::size_t max_iterations = 200;
};

struct FeedbackPowerSolution {
  ComparisonPolicy policy;
  Curve alpha;
  // Sup-norm change of alpha per iteration.
  std::vector<double> history;
};

// Feedback power strategy c = alpha^{1/(gamma-1)} x where alpha solves the backward
// integro-differential equation with alpha(T) = a, found by damped fixed-point iteration
// over backward RK4 sweeps. Throws ConvergenceError with the history when it does not settle.
FeedbackPowerSolution solano_feedback_power(const MarketModel& m, double a, double gamma, const Curve& delta,
                                            const TimeGrid& grid, const FixedPointSettings& settings = {});

// Consumption-to-wealth ratio of the naive log agent who starts at t0, on the grid nodes over [t0, T]:
//   [a + int_s^T exp{lambda(r - s) + log(lambda(r - t0) / lambda(s - t0))} dr]^{-1}
struct NaiveConsumption {
  double t0;
  Curve fraction;
  std::vector<std::string> notes;
};
NaiveConsumption naive_log_consumption(const DiscountFunction& d, double a, double t0, std::size_t steps);
double naive_log_fraction(const DiscountFunction& d, double a, double t0, double s);

struct GapRow {
  double t;
  Family a;
  Family b;
  double consumption_gap;
  double investment_gap;
};

// |c_a - c_b| and max |u_a - u_b| at wealth x on every grid node.
std::vector<GapRow> policy_gaps(const ComparisonPolicy& a, const ComparisonPolicy& b, const TimeGrid& grid,
                                double x);

}  // namespace mertoneq
