#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>

#include <Eigen/Dense>

namespace mertoneq {

// c = c0 + c1 x and u_I = u0 + u1 x at a fixed time.
struct AffineControls {
  double c0 = 0.0;
  double c1 = 0.0;
  Eigen::VectorXd u0;
  Eigen::VectorXd u1;
};

struct ThetaValue {
  double value;
  double dx;
};

// Feedback strategy (t, x) -> (c, u_I).
class Policy {
 public:
  virtual ~Policy() = default;

  virtual std::size_t dimension() const = 0;
  virtual double consumption(double t, double x) const = 0;
  virtual void investment_into(double t, double x, std::span<double> out) const = 0;
  Eigen::VectorXd investment(double t, double x) const;

  // theta(t, x) and theta_x(t, x) when the policy comes from the verification PDE.
  virtual std::optional<ThetaValue> theta(double /*t*/, double /*x*/) const { return std::nullopt; }
  // Set when the controls are affine in wealth at time t; simulation uses it as a fast path.
  virtual std::optional<AffineControls> affine_form(double /*t*/) const { return std::nullopt; }
  virtual std::string describe() const = 0;
};

// Constant controls, e.g. the zero strategy.
class ConstantPolicy final : public Policy {
 public:
  ConstantPolicy(double consumption, Eigen::VectorXd investment);
  static ConstantPolicy zero(std::size_t dimension);

  std::size_t dimension() const override { return static_cast<std::size_t>(u_.size()); }
  double consumption(double t, double x) const override;
  void investment_into(double t, double x, std::span<double> out) const override;
  std::optional<AffineControls> affine_form(double t) const override;
  std::string describe() const override;

 private:
  double c_;
  Eigen::VectorXd u_;
};

// Base policy with consumption multiplied by a constant factor. The factor 2
// gives the deliberately non-equilibrium strategy used for refutation.
class ScaledConsumptionPolicy final : public Policy {
 public:
  ScaledConsumptionPolicy(std::shared_ptr<const Policy> base, double factor);

  std::size_t dimension() const override { return base_->dimension(); }
  double consumption(double t, double x) const override;
  void investment_into(double t, double x, std::span<double> out) const override;
  std::optional<AffineControls> affine_form(double t) const override;
  std::string describe() const override;

 private:
  std::shared_ptr<const Policy> base_;
  double factor_;
};

}  // namespace mertoneq
