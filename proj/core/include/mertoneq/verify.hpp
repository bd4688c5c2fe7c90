#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mertoneq/discount.hpp"
#include "mertoneq/market.hpp"
#include "mertoneq/policy.hpp"
#include "mertoneq/simulate.hpp"
#include "mertoneq/utility.hpp"

namespace mertoneq {

enum class AdjointMethod { nested_mc, theta };

// First-order adjoint on the diagonal, p(t;t) and q(t;t).
struct AdjointEstimate {
  double t;
  double x;
  double p;
  double p_stderr;
  std::optional<Eigen::VectorXd> q;
  AdjointMethod method;
  std::size_t paths = 0;
  std::size_t flagged = 0;
  bool conclusive = true;
};

// p(t;t) = E^t[lambda(T-t) h_x(X(T)) exp(int_t^T r0)] from settings.paths sub-simulated
// paths on a grid of `steps` steps over [t, T]. At t = T the value is exact.
// With extrapolate, each path contributes 2 p(steps) - p(steps/2) where both runs share
// the same Brownian path; this cancels the O(dt) bias of the Euler scheme.
AdjointEstimate estimate_p_diagonal(const Policy& policy, const MarketModel& m, const DiscountFunction& d,
                                    const Utility& u, double t, double x, std::size_t steps,
                                    const SimulationSettings& settings, double flagged_limit = 0.01,
                                    bool extrapolate = false);

// p = lambda(T-t) theta(t,x) and q = lambda(T-t) theta_x sigma^T u_I, for policies that expose theta.
AdjointEstimate theta_adjoint(const Policy& policy, const MarketModel& m, const DiscountFunction& d,
                              double t, double x);

struct ResidualPair {
  double consumption;
  // Unavailable when theta_x is unknown.
  std::optional<double> investment;
};

// R_c = |phi_c(c) - p| and R_I = |p r + sigma q| with q = lambda(T-t) theta_x sigma^T u_I.
ResidualPair residual_conditions(const Policy& policy, const AdjointEstimate& adjoint,
                                 std::optional<double> theta_x, const MarketModel& m,
                                 const Utility& u, const DiscountFunction& d);

// Spike direction (v_c, v_I).
struct Direction {
  double consumption = 0.0;
  Eigen::VectorXd investment;
};

// The 2(d+1) signed unit vectors scaled by bound.
std::vector<Direction> unit_directions(std::size_t d, double bound);

struct SpikePoint {
  double epsilon;
  double delta;
  double std_error;
};

struct SpikeResult {
  double t;
  double x;
  std::size_t direction;
  std::vector<SpikePoint> points;
  // Least-squares intercept of delta against epsilon and its standard error.
  double limit;
  double limit_stderr;
  std::size_t paths;
  std::size_t flagged;
};

// Weights w with intercept = sum w_i delta_i for a straight-line fit through (eps_i, delta_i).
std::vector<double> richardson_weights(std::span<const double> epsilons);

// Delta(eps) = [J(u^eps) - J(u)] / eps, where u^eps adds v to the realised controls on
// [t, t+eps). Perturbed paths reuse the base path's increments, so the difference is
// driven only by the perturbation. Every epsilon must be a node of the `steps`-step grid on [t, T].
std::vector<SpikeResult> spike_test(const Policy& policy, const MarketModel& m, const DiscountFunction& d,
                                    const Utility& u, double t, double x,
                                    std::span<const Direction> directions,
                                    std::span<const double> epsilons, std::size_t steps,
                                    const SimulationSettings& settings);

struct SecondOrderAdjoint {
  double t;
  double s;
  double x;
  double P;
  double P_stderr;
  Eigen::MatrixXd A;
  // Diffusion part of the second-order adjoint; it is not estimated.
  std::optional<Eigen::VectorXd> Q;
  std::size_t paths = 0;
  std::size_t flagged = 0;
};

// P(s;t) = E^s[lambda(T-t) h_xx(X(T)) exp(2 int_s^T r0)] and
// A(s;t) = diag(lambda(s-t) phi_cc(c), sigma sigma^T P).
SecondOrderAdjoint second_order_form(const MarketModel& m, const DiscountFunction& d, const Utility& u,
                                     const Policy& policy, double t, double s, double x,
                                     std::size_t steps, const SimulationSettings& settings);

struct VerificationSettings {
  // Empty means {0, T/4, T/2, 3T/4, T - dt}; each must be a node of the base grid.
  std::vector<double> checkpoints;
  std::vector<double> epsilon_fractions{0.1, 0.05, 0.025};
  std::size_t steps = 200;
  std::size_t n_outer = 1000;
  std::size_t n_inner = 1000;
  bool extrapolate_nested = true;
  std::size_t spike_paths = 100000;
  std::size_t spike_steps = 200;
  double direction_bound = 0.1;
  double x0 = 1.0;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  double flagged_limit = 0.01;
  double residual_floor = 1e-6;
  double sigmas = 3.0;
};

struct ResidualRow {
  double t;
  double x;
  AdjointMethod method;
  double consumption;
  std::optional<double> investment;
  double stderr_c;
  std::optional<double> stderr_i;
  bool ok;
};

// Nested-MC p(t;t) against lambda(T-t) theta(t,x) over the same outer states.
struct ThetaAgreement {
  double t;
  double nested;
  double nested_stderr;
  double theta;
  double theta_stderr;
  double difference;
  double difference_stderr;
  bool agree;
};

enum class Verdict { pass, fail, inconclusive };

struct EquilibriumReport {
  std::vector<double> checkpoints;
  std::vector<double> states;
  std::vector<ResidualRow> residuals;
  std::vector<ThetaAgreement> agreement;
  std::vector<SpikeResult> spikes;
  std::vector<SecondOrderAdjoint> second_order;
  std::size_t outer_flagged = 0;
  std::size_t inner_flagged = 0;
  std::size_t inner_paths = 0;
  Verdict verdict = Verdict::inconclusive;
  std::vector<std::string> notes;
};

std::vector<double> default_checkpoints(double horizon, std::size_t steps);

// Outer paths from (0, x0) supply the checkpoint states; the median outer state is the
// representative state for the theta residuals, the spike test and the second-order form.
EquilibriumReport run_verification(const Policy& policy, const MarketModel& m, const DiscountFunction& d,
                                   const Utility& u, const VerificationSettings& settings);

std::string_view verdict_name(Verdict v) noexcept;
std::string_view method_name(AdjointMethod m) noexcept;

}  // namespace mertoneq
