#include <cmath>
#include <memory>
#include <vector>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "mertoneq/closedform.hpp"
#include "mertoneq/equilibrium.hpp"
#include "mertoneq/errors.hpp"
#include "mertoneq/verify.hpp"

using namespace mertoneq;

namespace {

const auto kMarket = fixtures::one_asset();
const auto kHyperbolic = DiscountFunction::hyperbolic(1.0, 1.0, 1.0);
const TimeGrid kGrid(1.0, 200);

std::shared_ptr<EquilibriumPolicy> power_policy() {
  return std::make_shared<EquilibriumPolicy>(
      policy_power(solve_power(kMarket, kHyperbolic, 1.0, 0.5, kGrid), kMarket, kHyperbolic));
}
std::shared_ptr<EquilibriumPolicy> log_policy() {
  return std::make_shared<EquilibriumPolicy>(
      policy_log(solve_log(kMarket, kHyperbolic, 1.0, kGrid), kMarket, kHyperbolic));
}
std::shared_ptr<EquilibriumPolicy> exp_policy() {
  return std::make_shared<EquilibriumPolicy>(
      policy_exponential(solve_exponential(kMarket, kHyperbolic, 1.0, 2.0, kGrid), kMarket, kHyperbolic));
}

SimulationSettings sims(std::size_t paths, std::uint32_t stream = 0) {
  SimulationSettings s;
  s.paths = paths;
  s.seed = 21;
  s.stream = stream;
  return s;
}

VerificationSettings small() {
  VerificationSettings v;
  v.steps = 40;
  v.n_outer = 40;
  v.n_inner = 400;
  v.spike_paths = 20000;
  v.spike_steps = 40;
  v.seed = 4;
  return v;
}

}  // namespace

TEST(Adjoint, TerminalValueIsExact) {
  const auto p = power_policy();
  const auto u = Utility::power(1.0, 0.5);
  const auto a = estimate_p_diagonal(*p, kMarket, kHyperbolic, u, 1.0, 1.7, 10, sims(5));
  EXPECT_EQ(a.p, u.h_x(1.7));
  EXPECT_EQ(a.p_stderr, 0.0);
}

TEST(Adjoint, LogMatchesVarphiOracle) {
  const auto coeffs = solve_log(kMarket, kHyperbolic, 1.0, kGrid);
  const auto p = policy_log(coeffs, kMarket, kHyperbolic);
  for (double t : {0.0, 0.5}) {
    const double x = 1.3;
    const auto a = estimate_p_diagonal(p, kMarket, kHyperbolic, Utility::log(1.0), t, x, 100, sims(40000),
                                       0.01, true);
    const double oracle = kHyperbolic(1.0 - t) * coeffs.varphi(t) / x;
    EXPECT_LT(std::abs(a.p - oracle), 3 * a.p_stderr) << t;
  }
}

TEST(Adjoint, PowerMatchesPiOracle) {
  const auto coeffs = solve_power(kMarket, kHyperbolic, 1.0, 0.5, kGrid);
  const auto p = policy_power(coeffs, kMarket, kHyperbolic);
  const double t = 0.25, x = 0.8;
  const auto a = estimate_p_diagonal(p, kMarket, kHyperbolic, Utility::power(1.0, 0.5), t, x, 150,
                                     sims(40000), 0.01, true);
  const double oracle = kHyperbolic(0.75) * coeffs.Pi(t) * std::pow(x, -0.5);
  EXPECT_LT(std::abs(a.p - oracle), 3 * a.p_stderr);
}

TEST(Adjoint, ExtrapolationRemovesEulerBias) {
  // Plain Euler at 50 steps is visibly biased; the extrapolated estimate is not.
  const auto coeffs = solve_power(kMarket, kHyperbolic, 1.0, 0.5, kGrid);
  const auto p = policy_power(coeffs, kMarket, kHyperbolic);
  const auto u = Utility::power(1.0, 0.5);
  const double oracle = kHyperbolic(1.0) * coeffs.Pi(0.0);
  const auto plain = estimate_p_diagonal(p, kMarket, kHyperbolic, u, 0.0, 1.0, 50, sims(100000));
  const auto extra = estimate_p_diagonal(p, kMarket, kHyperbolic, u, 0.0, 1.0, 50, sims(100000), 0.01, true);
  EXPECT_GT(std::abs(plain.p - oracle), 5 * plain.p_stderr);
  EXPECT_LT(std::abs(extra.p - oracle), 3 * extra.p_stderr);
  EXPECT_THROW(estimate_p_diagonal(p, kMarket, kHyperbolic, u, 0.0, 1.0, 21, sims(10), 0.01, true),
               ValidationError);
}

TEST(Residuals, ThetaAdjointSatisfiesConditionsAlgebraically) {
  const std::vector<std::pair<std::shared_ptr<EquilibriumPolicy>, Utility>> cases{
      {power_policy(), Utility::power(1.0, 0.5)},
      {log_policy(), Utility::log(1.0)},
      {exp_policy(), Utility::exponential(1.0, 2.0)}};
  for (const auto& [p, u] : cases)
    for (double t : {0.0, 0.3, 0.99})
      for (double x : {0.4, 1.0, 2.5}) {
        const auto a = theta_adjoint(*p, kMarket, kHyperbolic, t, x);
        const auto r = residual_conditions(*p, a, p->theta(t, x)->dx, kMarket, u, kHyperbolic);
        EXPECT_LE(r.consumption, 1e-10);
        ASSERT_TRUE(r.investment);
        EXPECT_LE(*r.investment, 1e-10);
      }
}

TEST(Residuals, MissingThetaLeavesInvestmentUnavailable) {
  const auto base = power_policy();
  const ScaledConsumptionPolicy doubled(base, 2.0);
  const auto u = Utility::power(1.0, 0.5);
  EXPECT_THROW(theta_adjoint(doubled, kMarket, kHyperbolic, 0.0, 1.0), ValidationError);
  const auto a = estimate_p_diagonal(doubled, kMarket, kHyperbolic, u, 0.0, 1.0, 50, sims(2000));
  const auto r = residual_conditions(doubled, a, std::nullopt, kMarket, u, kHyperbolic);
  EXPECT_FALSE(r.investment);
}

TEST(Residuals, NestedAdjointWithinNoiseAndDoubledConsumptionDetected) {
  const auto p = log_policy();
  const auto u = Utility::log(1.0);
  const auto a = estimate_p_diagonal(*p, kMarket, kHyperbolic, u, 0.2, 1.1, 80, sims(20000), 0.01, true);
  const auto r = residual_conditions(*p, a, std::nullopt, kMarket, u, kHyperbolic);
  EXPECT_LE(r.consumption, 3 * a.p_stderr);

  const ScaledConsumptionPolicy doubled(p, 2.0);
  const auto b = estimate_p_diagonal(doubled, kMarket, kHyperbolic, u, 0.2, 1.1, 80, sims(20000), 0.01, true);
  const auto rb = residual_conditions(doubled, b, std::nullopt, kMarket, u, kHyperbolic);
  EXPECT_GT(rb.consumption, 5 * b.p_stderr);
}

TEST(Spike, RichardsonWeights) {
  const std::vector<double> eps{0.1, 0.05, 0.025};
  const auto w = richardson_weights(eps);
  EXPECT_NEAR(w[0], -0.5, 1e-12);
  EXPECT_NEAR(w[1], 0.5, 1e-12);
  EXPECT_NEAR(w[2], 1.0, 1e-12);
  // Exact on straight lines.
  double intercept = 0.0;
  for (std::size_t i = 0; i < 3; ++i) intercept += w[i] * (0.7 - 3.0 * eps[i]);
  EXPECT_NEAR(intercept, 0.7, 1e-12);
}

TEST(Spike, UnitDirections) {
  const auto v = unit_directions(2, 0.3);
  ASSERT_EQ(v.size(), 6u);
  EXPECT_EQ(v[0].consumption, 0.3);
  EXPECT_EQ(v[1].consumption, -0.3);
  EXPECT_EQ(v[2].investment[0], 0.3);
  EXPECT_EQ(v[5].investment[1], -0.3);
  EXPECT_THROW(unit_directions(1, -1.0), ValidationError);
}

TEST(Spike, ZeroDirectionGivesExactZeros) {
  const auto p = power_policy();
  const std::vector<Direction> v{{0.0, Eigen::VectorXd::Zero(1)}};
  const std::vector<double> eps{0.1, 0.05, 0.025};
  const auto r = spike_test(*p, kMarket, kHyperbolic, Utility::power(1.0, 0.5), 0.0, 1.0, v, eps, 40, sims(500));
  for (const auto& pt : r[0].points) {
    EXPECT_EQ(pt.delta, 0.0);
    EXPECT_EQ(pt.std_error, 0.0);
  }
  EXPECT_EQ(r[0].limit, 0.0);
}

TEST(Spike, RejectsBadEpsilonLists) {
  const auto p = power_policy();
  const auto u = Utility::power(1.0, 0.5);
  const auto v = unit_directions(1, 0.1);
  const std::vector<double> increasing{0.025, 0.05};
  const std::vector<double> repeated{0.05, 0.05};
  const std::vector<double> off_grid{0.1, 0.033};
  const std::vector<double> too_long{1.5};
  for (const auto* e : {&increasing, &repeated, &off_grid, &too_long})
    EXPECT_THROW(spike_test(*p, kMarket, kHyperbolic, u, 0.0, 1.0, v, *e, 40, sims(10)), ValidationError);
}

TEST(Spike, EquilibriumHasNoImprovingDirection) {
  const std::vector<std::pair<std::shared_ptr<EquilibriumPolicy>, Utility>> cases{
      {power_policy(), Utility::power(1.0, 0.5)},
      {log_policy(), Utility::log(1.0)},
      {exp_policy(), Utility::exponential(1.0, 2.0)}};
  const auto v = unit_directions(1, 0.1);
  for (const auto& [p, u] : cases)
    for (double t : {0.0, 0.5}) {
      const std::vector<double> eps{0.1 * (1 - t), 0.05 * (1 - t), 0.025 * (1 - t)};
      for (const auto& r : spike_test(*p, kMarket, kHyperbolic, u, t, 1.0, v, eps, 80, sims(20000)))
        EXPECT_LE(r.limit, 3 * r.limit_stderr) << p->describe() << " t=" << t << " v" << r.direction;
    }
}

TEST(Spike, ClassicalMertonConsumptionIsRefutedUnderHyperbolicDiscount) {
  // Equilibrium under exponential discount at rate 1, used where the true discount is hyperbolic.
  const auto expo = DiscountFunction::exponential(1.0, 1.0);
  const auto merton = policy_log(solve_log(kMarket, expo, 1.0, kGrid), kMarket, expo);
  const auto v = unit_directions(1, 0.1);
  const std::vector<double> eps{0.1, 0.05, 0.025};
  bool refuted = false;
  for (const auto& r : spike_test(merton, kMarket, kHyperbolic, Utility::log(1.0), 0.0, 1.0, v, eps, 80,
                                  sims(20000)))
    refuted = refuted || r.limit > 3 * r.limit_stderr;
  EXPECT_TRUE(refuted);
}

TEST(SecondOrder, TerminalAndSigns) {
  const auto p = log_policy();
  const auto u = Utility::log(1.0);
  const auto term = second_order_form(kMarket, kHyperbolic, u, *p, 0.3, 1.0, 1.4, 10, sims(10));
  EXPECT_DOUBLE_EQ(term.P, kHyperbolic(0.7) * u.h_xx(1.4));
  EXPECT_LE(term.P, 0.0);
  EXPECT_FALSE(term.Q.has_value());

  const auto unit = DiscountFunction::exponential(0.0, 1.0);
  const auto lp = policy_log(solve_log(kMarket, unit, 1.0, kGrid), kMarket, unit);
  const auto so = second_order_form(kMarket, unit, u, lp, 0.2, 0.2, 1.0, 80, sims(5000));
  EXPECT_LT(so.P, 0.0);
}

TEST(SecondOrder, MatrixIsNegativeSemidefinite) {
  const auto m2 = fixtures::two_assets();
  const auto d = kHyperbolic;
  const auto pw = policy_power(solve_power(m2, d, 1.0, 0.5, kGrid), m2, d);
  const auto lg = policy_log(solve_log(m2, d, 1.0, kGrid), m2, d);
  const auto ex = policy_exponential(solve_exponential(m2, d, 1.0, 2.0, kGrid), m2, d);
  const std::vector<std::pair<const Policy*, Utility>> cases{
      {&pw, Utility::power(1.0, 0.5)}, {&lg, Utility::log(1.0)}, {&ex, Utility::exponential(1.0, 2.0)}};
  for (const auto& [p, u] : cases)
    for (double t : {0.0, 0.4})
      for (double s : {t, 0.7}) {
        const auto so = second_order_form(m2, d, u, *p, t, s, 1.2, 40, sims(2000));
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(so.A);
        EXPECT_LE(eig.eigenvalues().maxCoeff(), 1e-10);
        EXPECT_EQ(so.A.rows(), 3);
      }
}

TEST(Report, EquilibriumPasses) {
  const auto p = power_policy();
  const auto rep = run_verification(*p, kMarket, kHyperbolic, Utility::power(1.0, 0.5), small());
  EXPECT_EQ(rep.verdict, Verdict::pass);
  EXPECT_EQ(rep.checkpoints.size(), 5u);
  EXPECT_DOUBLE_EQ(rep.checkpoints.back(), 1.0 - 1.0 / 40);
  EXPECT_EQ(rep.spikes.size(), 5u * 4u);
  for (const auto& a : rep.agreement) EXPECT_TRUE(a.agree) << a.t;
}

TEST(Report, DoubledConsumptionFails) {
  const ScaledConsumptionPolicy doubled(power_policy(), 2.0);
  const auto rep = run_verification(doubled, kMarket, kHyperbolic, Utility::power(1.0, 0.5), small());
  EXPECT_EQ(rep.verdict, Verdict::fail);
  bool positive = false;
  for (const auto& s : rep.spikes) positive = positive || s.limit > 3 * s.limit_stderr;
  EXPECT_TRUE(positive);
}

TEST(Report, ZeroBoundGivesZeroSpikesAndKeepsResiduals) {
  auto vs = small();
  vs.direction_bound = 0.0;
  const auto p = log_policy();
  const auto rep = run_verification(*p, kMarket, kHyperbolic, Utility::log(1.0), vs);
  for (const auto& s : rep.spikes) {
    EXPECT_EQ(s.limit, 0.0);
    EXPECT_EQ(s.limit_stderr, 0.0);
  }
  EXPECT_EQ(rep.residuals.size(), 10u);
}

TEST(Report, ExcessFlaggingIsInconclusive) {
  // Consuming at rate 3 from unit wealth ruins most paths before T.
  const ConstantPolicy greedy(3.0, Eigen::VectorXd::Constant(1, 0.5));
  const auto rep = run_verification(greedy, kMarket, kHyperbolic, Utility::log(1.0), small());
  EXPECT_EQ(rep.verdict, Verdict::inconclusive);
  EXPECT_GT(rep.outer_flagged, 0u);
}

TEST(Report, RejectsOffGridCheckpoints) {
  auto vs = small();
  vs.checkpoints = {0.0, 0.33};
  EXPECT_THROW(run_verification(*power_policy(), kMarket, kHyperbolic, Utility::power(1.0, 0.5), vs),
               ValidationError);
}
