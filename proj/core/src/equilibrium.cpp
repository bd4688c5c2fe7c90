#include "mertoneq/equilibrium.hpp"

#include <cmath>
#include <string>

#include "mertoneq/errors.hpp"

namespace mertoneq {

namespace {

template <class... F>
struct overloaded : F... {
  using F::operator()...;
};
template <class... F>
overloaded(F...) -> overloaded<F...>;

TimeGrid grid_of(const EquilibriumPolicy::Backing& b) {
  return std::visit(overloaded{
                        [](const std::shared_ptr<const ThetaSurface>& s) { return s->time(); },
                        [](const auto& c) { return c.grid; },
                    },
                    b);
}

}  // namespace

EquilibriumPolicy::EquilibriumPolicy(Backing backing, const MarketModel& m,
                                     const DiscountFunction& d, Utility u)
    : backing_(std::move(backing)), discount_(d), utility_(u), horizon_(m.horizon()) {
  if (auto* s = std::get_if<std::shared_ptr<const ThetaSurface>>(&backing_); s && !*s) {
    throw ValidationError("equilibrium policy needs a theta surface");
  }
  const TimeGrid grid = grid_of(backing_);
  const std::size_t dim = m.dimension();
  std::vector<std::vector<double>> samples(dim, std::vector<double>(grid.size()));
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const Eigen::VectorXd v = m.merton_direction(grid.node(k));
    for (std::size_t i = 0; i < dim; ++i) samples[i][k] = v(static_cast<Eigen::Index>(i));
  }
  for (auto& s : samples) direction_.emplace_back(grid.start(), grid.end(), std::move(s));
}

Eigen::VectorXd EquilibriumPolicy::direction(double t) const {
  Eigen::VectorXd v(static_cast<Eigen::Index>(direction_.size()));
  for (std::size_t i = 0; i < direction_.size(); ++i) v(static_cast<Eigen::Index>(i)) = direction_[i](t);
  return v;
}

void EquilibriumPolicy::check_x(double x) const {
  if (!utility_.wealth_admissible(x)) {
    throw DomainError(std::string(utility_.name()) + " equilibrium policy undefined at x=" +
                      std::to_string(x));
  }
}

double EquilibriumPolicy::consumption(double t, double x) const {
  check_x(x);
  const double lam = discount_(horizon_ - t);
  return std::visit(
      overloaded{
          [&](const PowerCoefficients& c) {
            return std::pow(c.a * lam * c.Pi(t), 1.0 / (c.gamma - 1.0)) * x;
          },
          [&](const LogCoefficients& c) { return x / (c.a * lam * c.varphi(t)); },
          [&](const ExpCoefficients& c) {
            return -std::log(c.a * lam) / c.gamma + c.phi(t) * x + c.psi(t);
          },
          [&](const std::shared_ptr<const ThetaSurface>& s) {
            return utility_.inverse_marginal(lam * s->at(t, x).value);
          },
      },
      backing_);
}

void EquilibriumPolicy::investment_into(double t, double x, std::span<double> out) const {
  check_x(x);
  const double scale = std::visit(
      overloaded{
          [&](const PowerCoefficients& c) { return x / (1.0 - c.gamma); },
          [&](const LogCoefficients&) { return x; },
          [&](const ExpCoefficients& c) { return 1.0 / (c.gamma * c.phi(t)); },
          [&](const std::shared_ptr<const ThetaSurface>& s) {
            const ThetaValue th = s->at(t, x);
            if (std::abs(th.dx) < 1e-12) {
              throw DegeneracyError("theta_x vanishes at t=" + std::to_string(t) +
                                        ", x=" + std::to_string(x),
                                    t, x);
            }
            return -th.value / th.dx;
          },
      },
      backing_);
  for (std::size_t i = 0; i < direction_.size(); ++i) out[i] = direction_[i](t) * scale;
}

std::optional<ThetaValue> EquilibriumPolicy::theta(double t, double x) const {
  check_x(x);
  return std::visit(
      overloaded{
          [&](const PowerCoefficients& c) {
            const double v = c.a * c.Pi(t) * std::pow(x, c.gamma - 1.0);
            return ThetaValue{v, (c.gamma - 1.0) * v / x};
          },
          [&](const LogCoefficients& c) {
            const double v = c.varphi(t) * c.a / x;
            return ThetaValue{v, -v / x};
          },
          [&](const ExpCoefficients& c) {
            const double v = c.a * std::exp(-c.gamma * (c.phi(t) * x + c.psi(t)));
            return ThetaValue{v, -c.gamma * c.phi(t) * v};
          },
          [&](const std::shared_ptr<const ThetaSurface>& s) { return s->at(t, x); },
      },
      backing_);
}

std::optional<AffineControls> EquilibriumPolicy::affine_form(double t) const {
  const double lam = discount_(horizon_ - t);
  const Eigen::VectorXd dir = direction(t);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(dir.size());
  return std::visit(
      overloaded{
          [&](const PowerCoefficients& c) -> std::optional<AffineControls> {
            return AffineControls{0.0, std::pow(c.a * lam * c.Pi(t), 1.0 / (c.gamma - 1.0)), zero,
                                  dir / (1.0 - c.gamma)};
          },
          [&](const LogCoefficients& c) -> std::optional<AffineControls> {
            return AffineControls{0.0, 1.0 / (c.a * lam * c.varphi(t)), zero, dir};
          },
          [&](const ExpCoefficients& c) -> std::optional<AffineControls> {
            return AffineControls{-std::log(c.a * lam) / c.gamma + c.psi(t), c.phi(t),
                                  dir / (c.gamma * c.phi(t)), zero};
          },
          [&](const std::shared_ptr<const ThetaSurface>&) -> std::optional<AffineControls> {
            return std::nullopt;
          },
      },
      backing_);
}

std::string EquilibriumPolicy::describe() const {
  const bool surface = std::holds_alternative<std::shared_ptr<const ThetaSurface>>(backing_);
  return std::string(utility_.name()) + " equilibrium (" + (surface ? "pde" : "closed form") +
         ", " + std::string(discount_.name()) + " discount)";
}

EquilibriumPolicy policy_power(const PowerCoefficients& c, const MarketModel& m,
                               const DiscountFunction& d) {
  return EquilibriumPolicy(c, m, d, Utility::power(c.a, c.gamma));
}

EquilibriumPolicy policy_log(const LogCoefficients& c, const MarketModel& m,
                             const DiscountFunction& d) {
  return EquilibriumPolicy(c, m, d, Utility::log(c.a));
}

EquilibriumPolicy policy_exponential(const ExpCoefficients& c, const MarketModel& m,
                                     const DiscountFunction& d) {
  return EquilibriumPolicy(c, m, d, Utility::exponential(c.a, c.gamma));
}

EquilibriumPolicy policy_from_theta(std::shared_ptr<const ThetaSurface> s, const MarketModel& m,
                                    const DiscountFunction& d, const Utility& u) {
  return EquilibriumPolicy(std::move(s), m, d, u);
}

}  // namespace mertoneq
