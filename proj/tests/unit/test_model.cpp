#include <cmath>
#include <functional>
#include <random>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "mertoneq/discount.hpp"
#include "mertoneq/errors.hpp"
#include "mertoneq/grid.hpp"
#include "mertoneq/quadrature.hpp"
#include "mertoneq/utility.hpp"

using namespace mertoneq;

TEST(TimeGrid, NodesAreUniformAndEndExactly) {
  TimeGrid g(1.7, 7);
  EXPECT_EQ(g.node(0), 0.0);
  EXPECT_EQ(g.node(7), 1.7);
  for (std::size_t k = 1; k <= 7; ++k) EXPECT_NEAR(g.node(k) - g.node(k - 1), 1.7 / 7, 1e-15);
  EXPECT_EQ(g.index_of(1.7 * 3 / 7).value(), 3u);
  EXPECT_FALSE(g.index_of(0.1).has_value());
  EXPECT_THROW(TimeGrid(1.0, 0), ValidationError);
  EXPECT_THROW(TimeGrid(-1.0, 4), ValidationError);
}

TEST(Curve, LinearInterpolationAndExactIntegral) {
  Curve c(0.0, 2.0, {1.0, 3.0, 2.0});
  EXPECT_DOUBLE_EQ(c(0.5), 2.0);
  EXPECT_DOUBLE_EQ(c(1.5), 2.5);
  // trapezoid areas of the two pieces: 2 and 2.5
  EXPECT_NEAR(c.integral(0.0, 2.0), 4.5, 1e-15);
  // int_0.5^1.5 = (2+3)/2 * 0.5 + (3+2.5)/2 * 0.5
  EXPECT_NEAR(c.integral(0.5, 1.5), 1.25 + 1.375, 1e-15);
  EXPECT_THROW(c(2.1), DomainError);
  EXPECT_DOUBLE_EQ(Curve::constant(0.3, 0.0, 1.0).integral(0.25, 0.75), 0.15);
}

TEST(Quadrature, CubicsAreIntegratedExactly) {
  const double h = 0.1;
  std::vector<double> f(11);
  for (std::size_t k = 0; k < f.size(); ++k) {
    const double x = static_cast<double>(k) * h;
    f[k] = 2.0 * x * x * x - x * x + 3.0;
  }
  const auto cum = cumulative_integrals(f, h);
  for (std::size_t k = 0; k < f.size(); ++k) {
    const double x = static_cast<double>(k) * h;
    EXPECT_NEAR(cum[k], 0.5 * std::pow(x, 4) - x * x * x / 3.0 + 3.0 * x, 1e-14);
  }
  const auto tail = tail_integrals(f, h);
  EXPECT_NEAR(tail[0], cum.back(), 1e-14);
  EXPECT_NEAR(tail[4] + cum[4], cum.back(), 1e-14);
}

TEST(Quadrature, FourthOrderOnExponential) {
  auto err = [](std::size_t n) {
    const double h = 1.0 / static_cast<double>(n);
    std::vector<double> f(n + 1);
    for (std::size_t k = 0; k <= n; ++k) f[k] = std::exp(3.0 * static_cast<double>(k) * h);
    return std::abs(integrate(f, h) - (std::exp(3.0) - 1.0) / 3.0);
  };
  const double ratio = err(80) / err(160);
  EXPECT_GT(ratio, 14.0);
  EXPECT_LT(ratio, 18.0);
  // two and three samples fall back to lower-order exact rules
  EXPECT_NEAR(integrate(std::vector<double>{1.0, 3.0}, 0.5), 1.0, 1e-15);
  EXPECT_NEAR(integrate(std::vector<double>{0.0, 1.0, 4.0}, 1.0), 8.0 / 3.0, 1e-15);
}

TEST(Quadrature, DerivativeExactForQuartics) {
  const double h = 0.05;
  std::vector<double> f(9);
  for (std::size_t k = 0; k < f.size(); ++k) f[k] = std::pow(static_cast<double>(k) * h, 4);
  const auto df = derivative(f, h);
  for (std::size_t k = 0; k < f.size(); ++k) {
    EXPECT_NEAR(df[k], 4.0 * std::pow(static_cast<double>(k) * h, 3), 1e-12);
  }
}

TEST(Discount, ExponentialExamples) {
  const auto d = DiscountFunction::exponential(0.1, 3.0);
  EXPECT_EQ(evaluate_discount(d, 0.0), 1.0);
  EXPECT_NEAR(evaluate_discount(d, 2.0), 0.818730753077982, 1e-15);
  EXPECT_THROW(evaluate_discount(d, 3.5), DomainError);
  EXPECT_THROW(evaluate_discount(d, -0.1), DomainError);
}

TEST(Discount, KarpWithConstantRateIsExponential) {
  const auto karp = DiscountFunction::karp(Curve(0.0, 3.0, std::vector<double>(31, 0.1)), 3.0);
  EXPECT_NEAR(karp(2.0), std::exp(-0.2), 1e-10);
  const auto karp_const = DiscountFunction::karp(Curve::constant(0.1, 0.0, 3.0), 3.0);
  EXPECT_NEAR(karp_const(2.0), std::exp(-0.2), 1e-15);
}

TEST(Discount, KarpLinearRateMatchesAnalyticIntegral) {
  // delta(l) = 0.1 + 0.1 l  ->  int_0^tau = 0.1 tau + 0.05 tau^2
  const auto karp = DiscountFunction::karp(Curve(0.0, 2.0, {0.1, 0.3}), 2.0);
  for (double tau : {0.0, 0.3, 1.1, 2.0}) {
    EXPECT_NEAR(karp(tau), std::exp(-(0.1 * tau + 0.05 * tau * tau)), 1e-15);
  }
}

TEST(Discount, HyperbolicAndMixture) {
  const auto hyp = DiscountFunction::hyperbolic(1.0, 1.0, 2.0);
  EXPECT_DOUBLE_EQ(hyp(1.0), 0.5);
  const auto mix = DiscountFunction::mixture({0.5, 0.5}, {0.05, 0.3}, 2.0);
  EXPECT_NEAR(mix(1.0), 0.5 * std::exp(-0.05) + 0.5 * std::exp(-0.3), 1e-15);
  EXPECT_THROW(DiscountFunction::mixture({0.5, 0.4}, {0.05, 0.3}, 2.0), ValidationError);
  EXPECT_THROW(DiscountFunction::hyperbolic(0.0, 1.0, 2.0), ValidationError);
}

TEST(Discount, AxiomsAndLipschitzStability) {
  const double T = 2.0;
  const std::vector<DiscountFunction> family{
      DiscountFunction::exponential(0.2, T), DiscountFunction::hyperbolic(1.0, 1.0, T),
      DiscountFunction::mixture({0.3, 0.7}, {0.05, 0.4}, T),
      DiscountFunction::karp(Curve(0.0, T, {0.1, 0.3}), T)};
  // analytic |lambda'(tau)|
  const std::vector<std::function<double(double)>> slope{
      [](double t) { return 0.2 * std::exp(-0.2 * t); },
      [](double t) { return 1.0 / ((1.0 + t) * (1.0 + t)); },
      [](double t) { return 0.3 * 0.05 * std::exp(-0.05 * t) + 0.7 * 0.4 * std::exp(-0.4 * t); },
      [](double t) { return (0.1 + 0.1 * t) * std::exp(-(0.1 * t + 0.05 * t * t)); }};
  for (std::size_t i = 0; i < family.size(); ++i) {
    const auto& d = family[i];
    EXPECT_EQ(d(0.0), 1.0);
    double sup = 0.0;
    for (int k = 0; k <= 20000; ++k) {
      const double tau = T * k / 20000.0;
      EXPECT_GT(d(tau), 0.0);
      sup = std::max(sup, slope[i](tau));
    }
    const double coarse = lipschitz_estimate(d, TimeGrid(T, 200));
    const double fine = lipschitz_estimate(d, TimeGrid(T, 2000));
    EXPECT_LE(fine, sup * (1.0 + 1e-9));
    EXPECT_NEAR(coarse, fine, 0.01 * fine);
    EXPECT_NEAR(fine, sup, 1e-3 * sup);
  }
}

TEST(Market, ExcessReturnExamples) {
  const auto m1 = fixtures::one_asset();
  EXPECT_NEAR(m1.excess_return(0.3)(0), 0.05, 1e-15);
  const auto m2 = fixtures::two_assets();
  EXPECT_NEAR(m2.excess_return(0.0)(0), 0.05, 1e-15);
  EXPECT_NEAR(m2.excess_return(0.0)(1), 0.03, 1e-15);
  EXPECT_THROW(fixtures::one_asset(1.0, 0.03, 0.03), ValidationError);
}

TEST(Market, ValidationRejectsBadCoefficients) {
  EXPECT_THROW(fixtures::one_asset(1.0, -0.01), ValidationError);
  EXPECT_THROW(fixtures::one_asset(1.0, 0.03, 0.08, 0.0), ValidationError);
  Eigen::MatrixXd singular(2, 2);
  singular << 0.2, 0.2, 0.2, 0.2;
  EXPECT_THROW(MarketModel::constant(1.0, 0.0, Eigen::Vector2d(0.1, 0.1), singular),
               ValidationError);
  // excess return turns negative between constant-drift nodes: caught at the rate's node
  EXPECT_THROW(MarketModel(1.0, Curve(0.0, 1.0, {0.03, 0.09}), {Curve::constant(0.08, 0.0, 1.0)},
                           {{Curve::constant(0.2, 0.0, 1.0)}}),
               ValidationError);
}

TEST(Market, RiskPremiumQuadraticExamples) {
  EXPECT_NEAR(fixtures::one_asset().risk_premium_quadratic(0.5), 0.0625, 1e-15);
  const auto m = MarketModel::constant(1.0, 0.0, Eigen::Vector2d(0.3, 0.4), Eigen::Matrix2d::Identity());
  EXPECT_NEAR(m.risk_premium_quadratic(0.0), 0.25, 1e-15);
}

TEST(Market, RiskPremiumInvariantUnderOrthogonalChange) {
  std::mt19937 rng(7);
  std::normal_distribution<double> z;
  Eigen::MatrixXd A(3, 3), S(3, 3);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      A(i, j) = z(rng);
      S(i, j) = (i == j ? 0.3 : 0.0) + 0.05 * z(rng);
    }
  }
  const Eigen::MatrixXd O = Eigen::HouseholderQR<Eigen::MatrixXd>(A).householderQ();
  const Eigen::Vector3d mu(0.07, 0.09, 0.05);
  const auto base = MarketModel::constant(1.0, 0.02, mu, S);
  const auto rotated = MarketModel::constant(1.0, 0.02, mu, S * O);
  EXPECT_NEAR(base.risk_premium_quadratic(0.2), rotated.risk_premium_quadratic(0.2), 1e-12);
  // Sigma r is unchanged as well
  EXPECT_LT((base.merton_direction(0.2) - rotated.merton_direction(0.2)).norm(), 1e-12);
}

TEST(Market, GrowthFactorExamplesAndMultiplicativity) {
  const auto m = fixtures::one_asset(1.0, 0.05);
  EXPECT_EQ(m.growth_factor(0.4, 0.4), 1.0);
  EXPECT_NEAR(m.growth_factor(0.0, 1.0), 1.0512710963760241, 1e-15);
  EXPECT_THROW(m.growth_factor(0.6, 0.4), DomainError);
  const auto zero = fixtures::one_asset(1.0, 0.0);
  EXPECT_EQ(zero.growth_factor(0.1, 0.9), 1.0);

  const auto moving = fixtures::moving_market();
  const TimeGrid g(1.0, 40);
  for (std::size_t a = 0; a <= 40; a += 3) {
    for (std::size_t b = a; b <= 40; b += 5) {
      for (std::size_t c = b; c <= 40; c += 7) {
        const double lhs = moving.growth_factor(g.node(a), g.node(b)) *
                           moving.growth_factor(g.node(b), g.node(c));
        EXPECT_NEAR(lhs, moving.growth_factor(g.node(a), g.node(c)), 1e-12);
      }
    }
  }
}

TEST(Utility, InverseMarginalExamples) {
  EXPECT_DOUBLE_EQ(inverse_marginal(Utility::log(1.0), 2.0), 0.5);
  const auto p = Utility::power(1.0, 0.5);
  EXPECT_NEAR(inverse_marginal(p, p.phi_c(4.0)), 4.0, 1e-12);
  EXPECT_EQ(inverse_marginal(Utility::exponential(1.0, 1.0), 1.0), 0.0);
  EXPECT_THROW(inverse_marginal(p, 0.0), DomainError);
  EXPECT_THROW(inverse_marginal(p, -1.0), DomainError);
}

TEST(Utility, ValidationBounds) {
  EXPECT_THROW(Utility::power(1.0, 1.5), ValidationError);
  EXPECT_THROW(Utility::power(0.0, 0.5), ValidationError);
  EXPECT_THROW(Utility::log(-1.0), ValidationError);
  EXPECT_THROW(Utility::exponential(1.0, 0.0), ValidationError);
  EXPECT_THROW(Utility::log(1.0).phi(0.0), DomainError);
  EXPECT_THROW(Utility::power(1.0, 0.5).h(-1.0), DomainError);
  EXPECT_NO_THROW(Utility::exponential(1.0, 2.0).phi(-3.0));
}

TEST(Utility, RoundtripConcavityAndMonotoneInverse) {
  std::mt19937_64 rng(11);
  const std::vector<Utility> family{Utility::power(1.3, 0.3), Utility::power(0.7, 0.9),
                                    Utility::log(2.0), Utility::exponential(1.5, 0.7)};
  for (const auto& u : family) {
    std::uniform_real_distribution<double> pos(1e-6, 50.0);
    std::uniform_real_distribution<double> any(-20.0, 20.0);
    for (int i = 0; i < 1000; ++i) {
      const double c = u.positive_domain() ? pos(rng) : any(rng);
      EXPECT_NEAR(u.inverse_marginal(u.phi_c(c)), c, 1e-10 * (1.0 + std::abs(c)));
      EXPECT_GT(u.phi_c(c), 0.0);
      EXPECT_LT(u.phi_cc(c), 0.0);
      EXPECT_LT(u.h_xx(c), 0.0);
      EXPECT_GT(u.h_x(c), 0.0);
      // phi_cc agrees with a difference quotient of phi_c
      const double e = 1e-6 * (1.0 + std::abs(c));
      if (!u.positive_domain() || c > 2.0 * e) {
        EXPECT_NEAR(u.phi_cc(c), (u.phi_c(c + e) - u.phi_c(c - e)) / (2.0 * e),
                    1e-5 * std::abs(u.phi_cc(c)) + 1e-9);
      }
    }
    double prev = u.inverse_marginal(1e-3);
    for (double y = 2e-3; y < 10.0; y *= 1.5) {
      const double cur = u.inverse_marginal(y);
      EXPECT_LT(cur, prev);
      EXPECT_NEAR(u.inverse_marginal_slope(y), 1.0 / u.phi_cc(cur), 1e-12 * std::abs(1.0 / u.phi_cc(cur)));
      prev = cur;
    }
  }
}
