#pragma once

#include <memory>
#include <variant>
#include <vector>

#include "mertoneq/closedform.hpp"
#include "mertoneq/curve.hpp"
#include "mertoneq/discount.hpp"
#include "mertoneq/market.hpp"
#include "mertoneq/policy.hpp"
#include "mertoneq/theta_surface.hpp"
#include "mertoneq/utility.hpp"

namespace mertoneq {

// Equilibrium strategy c = I(lambda(T-t) theta), u_I = -Sigma r theta / theta_x,
// backed by closed-form coefficients or by a PDE surface.
class EquilibriumPolicy final : public Policy {
 public:
  using Backing = std::variant<PowerCoefficients, LogCoefficients, ExpCoefficients,
                               std::shared_ptr<const ThetaSurface>>;

  EquilibriumPolicy(Backing backing, const MarketModel& m, const DiscountFunction& d, Utility u);

  std::size_t dimension() const override { return direction_.size(); }
  double consumption(double t, double x) const override;
  void investment_into(double t, double x, std::span<double> out) const override;
  std::optional<ThetaValue> theta(double t, double x) const override;
  std::optional<AffineControls> affine_form(double t) const override;
  std::string describe() const override;

  const Utility& utility() const noexcept { return utility_; }
  const DiscountFunction& discount() const noexcept { return discount_; }
  const Backing& backing() const noexcept { return backing_; }
  double horizon() const noexcept { return horizon_; }
  // Sigma(t) r(t) interpolated from the grid nodes.
  Eigen::VectorXd direction(double t) const;

 private:
  void check_x(double x) const;

  Backing backing_;
  DiscountFunction discount_;
  Utility utility_;
  double horizon_;
  std::vector<Curve> direction_;
};

EquilibriumPolicy policy_power(const PowerCoefficients& c, const MarketModel& m,
                               const DiscountFunction& d);
EquilibriumPolicy policy_log(const LogCoefficients& c, const MarketModel& m,
                             const DiscountFunction& d);
EquilibriumPolicy policy_exponential(const ExpCoefficients& c, const MarketModel& m,
                                     const DiscountFunction& d);
EquilibriumPolicy policy_from_theta(std::shared_ptr<const ThetaSurface> s, const MarketModel& m,
                                    const DiscountFunction& d, const Utility& u);

}  // namespace mertoneq
