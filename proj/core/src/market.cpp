#include "mertoneq/market.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mertoneq/errors.hpp"
#include "mertoneq/grid.hpp"

namespace mertoneq {

namespace {

void require_span(const Curve& c, double horizon, const char* what) {
  const double tol = 1e-12 * (1.0 + horizon);
  if (std::abs(c.lower()) > tol || std::abs(c.upper() - horizon) > tol) {
    throw ValidationError(std::string(what) + " must be defined on [0, T]");
  }
}

void collect_nodes(const Curve& c, std::vector<double>& out) {
  if (c.is_constant()) return;
  for (std::size_t k = 0; k < c.size(); ++k) out.push_back(c.node(k));
}

}  // namespace

MarketModel::MarketModel(double horizon, Curve riskless_rate, std::vector<Curve> drift,
                         std::vector<std::vector<Curve>> volatility, double ellipticity_floor)
    : horizon_(horizon),
      r0_(std::move(riskless_rate)),
      drift_(std::move(drift)),
      sigma_(std::move(volatility)),
      floor_(ellipticity_floor) {
  if (!(horizon_ > 0.0) || !std::isfinite(horizon_)) throw ValidationError("horizon T must be > 0");
  const std::size_t d = drift_.size();
  if (d == 0) throw ValidationError("market needs at least one risky asset");
  if (sigma_.size() != d) throw ValidationError("volatility must be a d x d matrix");
  for (const auto& row : sigma_) {
    if (row.size() != d) throw ValidationError("volatility must be a d x d matrix");
  }
  if (!(floor_ > 0.0)) throw ValidationError("ellipticity floor must be > 0");

  require_span(r0_, horizon_, "riskless rate");
  std::vector<double> nodes{0.0, horizon_};
  collect_nodes(r0_, nodes);
  for (const auto& c : drift_) {
    require_span(c, horizon_, "drift");
    collect_nodes(c, nodes);
  }
  for (const auto& row : sigma_) {
    for (const auto& c : row) {
      require_span(c, horizon_, "volatility");
      collect_nodes(c, nodes);
    }
  }
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());

  min_ellipticity_ = std::numeric_limits<double>::infinity();
  for (double t : nodes) min_ellipticity_ = std::min(min_ellipticity_, check_node(t));
}

MarketModel MarketModel::constant(double horizon, double r0, const Eigen::VectorXd& mu,
                                  const Eigen::MatrixXd& sigma) {
  const auto d = static_cast<std::size_t>(mu.size());
  if (sigma.rows() != mu.size() || sigma.cols() != mu.size()) {
    throw ValidationError("volatility must be a d x d matrix");
  }
  std::vector<Curve> drift;
  std::vector<std::vector<Curve>> vol(d);
  for (std::size_t i = 0; i < d; ++i) {
    drift.push_back(Curve::constant(mu(static_cast<Eigen::Index>(i)), 0.0, horizon));
    for (std::size_t j = 0; j < d; ++j) {
      vol[i].push_back(Curve::constant(
          sigma(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)), 0.0, horizon));
    }
  }
  return MarketModel(horizon, Curve::constant(r0, 0.0, horizon), std::move(drift), std::move(vol));
}

double MarketModel::check_node(double t) const {
  const double r0 = r0_(t);
  if (r0 < 0.0) {
    throw ValidationError("riskless rate must be >= 0 (violated at t=" + std::to_string(t) + ")");
  }
  for (std::size_t i = 0; i < drift_.size(); ++i) {
    if (!(drift_[i](t) > r0)) {
      throw ValidationError("excess return mu_" + std::to_string(i + 1) +
                            " - r0 must be > 0 (violated at t=" + std::to_string(t) + ")");
    }
  }
  const Eigen::MatrixXd s = volatility(t);
  const Eigen::MatrixXd gram = s * s.transpose();
  const double lo = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(gram, Eigen::EigenvaluesOnly)
                        .eigenvalues()
                        .minCoeff();
  if (!(lo >= floor_)) {
    throw ValidationError("uniform ellipticity fails: smallest eigenvalue of sigma sigma^T is " +
                          std::to_string(lo) + " at t=" + std::to_string(t));
  }
  return lo;
}

void MarketModel::validate_on(const TimeGrid& grid) const {
  if (std::abs(grid.end() - horizon_) > 1e-12 * (1.0 + horizon_) || grid.start() != 0.0) {
    throw ValidationError("time grid must span [0, T] of the market");
  }
  for (std::size_t k = 0; k < grid.size(); ++k) check_node(grid.node(k));
}

void MarketModel::check_time(double t) const {
  const double tol = 1e-10 * (1.0 + horizon_);
  if (!(t >= -tol && t <= horizon_ + tol)) {
    throw DomainError("market queried outside [0, T] at t=" + std::to_string(t));
  }
}

double MarketModel::riskless_rate(double t) const {
  check_time(t);
  return r0_(t);
}

Eigen::VectorXd MarketModel::drift(double t) const {
  check_time(t);
  Eigen::VectorXd out(static_cast<Eigen::Index>(dimension()));
  for (std::size_t i = 0; i < dimension(); ++i) out(static_cast<Eigen::Index>(i)) = drift_[i](t);
  return out;
}

Eigen::MatrixXd MarketModel::volatility(double t) const {
  check_time(t);
  const auto d = static_cast<Eigen::Index>(dimension());
  Eigen::MatrixXd out(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      out(i, j) = sigma_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)](t);
    }
  }
  return out;
}

Eigen::VectorXd MarketModel::excess_return(double t) const {
  return drift(t).array() - riskless_rate(t);
}

Eigen::VectorXd MarketModel::merton_direction(double t) const {
  const Eigen::MatrixXd s = volatility(t);
  const Eigen::VectorXd w = s.partialPivLu().solve(excess_return(t));
  return s.transpose().partialPivLu().solve(w);
}

double MarketModel::risk_premium_quadratic(double t) const {
  const Eigen::MatrixXd s = volatility(t);
  return s.partialPivLu().solve(excess_return(t)).squaredNorm();
}

double MarketModel::integrated_rate(double s, double tau) const {
  check_time(s);
  check_time(tau);
  if (s > tau) throw DomainError("integrated rate needs s <= tau");
  return r0_.integral(s, tau);
}

double MarketModel::growth_factor(double s, double tau) const {
  return std::exp(integrated_rate(s, tau));
}

}  // namespace mertoneq
