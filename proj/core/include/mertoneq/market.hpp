#pragma once

#include <vector>

#include <Eigen/Dense>

#include "mertoneq/curve.hpp"

namespace mertoneq {

class TimeGrid;

// Deterministic market: riskless rate r0, drifts mu_i and volatility sigma_ij,
// each a piecewise-linear curve on [0, T].
class MarketModel {
 public:
  MarketModel(double horizon, Curve riskless_rate, std::vector<Curve> drift,
              std::vector<std::vector<Curve>> volatility, double ellipticity_floor = 1e-10);

  static MarketModel constant(double horizon, double r0, const Eigen::VectorXd& mu,
                              const Eigen::MatrixXd& sigma);

  std::size_t dimension() const noexcept { return drift_.size(); }
  double horizon() const noexcept { return horizon_; }

  double riskless_rate(double t) const;
  Eigen::VectorXd drift(double t) const;
  Eigen::MatrixXd volatility(double t) const;

  // r(t) = mu(t) - r0(t) 1
  Eigen::VectorXd excess_return(double t) const;
  // Sigma(t) r(t) with Sigma = (sigma sigma^T)^{-1}
  Eigen::VectorXd merton_direction(double t) const;
  // r^T Sigma r
  double risk_premium_quadratic(double t) const;

  double integrated_rate(double s, double tau) const;
  // exp(int_s^tau r0)
  double growth_factor(double s, double tau) const;

  // Smallest eigenvalue of sigma sigma^T over all sample nodes.
  double min_ellipticity() const noexcept { return min_ellipticity_; }
  void validate_on(const TimeGrid& grid) const;

  const Curve& riskless_curve() const noexcept { return r0_; }
  const std::vector<Curve>& drift_curves() const noexcept { return drift_; }
  const std::vector<std::vector<Curve>>& volatility_curves() const noexcept { return sigma_; }

 private:
  void check_time(double t) const;
  double check_node(double t) const;

  double horizon_;
  Curve r0_;
  std::vector<Curve> drift_;
  std::vector<std::vector<Curve>> sigma_;
  double floor_;
  double min_ellipticity_ = 0.0;
};

}  // namespace mertoneq
