#pragma once

#include <Eigen/Dense>

#include "mertoneq/curve.hpp"
#include "mertoneq/market.hpp"

namespace fixtures {

inline mertoneq::MarketModel one_asset(double T = 1.0, double r0 = 0.03, double mu = 0.08,
                                       double sigma = 0.2) {
  return mertoneq::MarketModel::constant(T, r0, Eigen::VectorXd::Constant(1, mu),
                                         Eigen::MatrixXd::Constant(1, 1, sigma));
}

inline mertoneq::MarketModel two_assets(double T = 1.0) {
  Eigen::VectorXd mu(2);
  mu << 0.08, 0.06;
  Eigen::MatrixXd sigma(2, 2);
  sigma << 0.2, 0.0, 0.05, 0.15;
  return mertoneq::MarketModel::constant(T, 0.03, mu, sigma);
}

// Rates and drifts that move in time, sampled on five nodes.
inline mertoneq::MarketModel moving_market(double T = 1.0) {
  using mertoneq::Curve;
  Curve r0(0.0, T, {0.02, 0.025, 0.03, 0.028, 0.035});
  std::vector<Curve> mu{Curve(0.0, T, {0.07, 0.08, 0.09, 0.085, 0.08})};
  std::vector<std::vector<Curve>> sigma{{Curve(0.0, T, {0.2, 0.22, 0.25, 0.23, 0.21})}};
  return mertoneq::MarketModel(T, r0, mu, sigma);
}

}  // namespace fixtures
