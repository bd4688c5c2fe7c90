#include "mertoneq/policy.hpp"

#include <cmath>

#include "mertoneq/errors.hpp"

namespace mertoneq {

Eigen::VectorXd Policy::investment(double t, double x) const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(dimension()));
  investment_into(t, x, std::span<double>(out.data(), static_cast<std::size_t>(out.size())));
  return out;
}

ConstantPolicy::ConstantPolicy(double consumption, Eigen::VectorXd investment)
    : c_(consumption), u_(std::move(investment)) {
  if (u_.size() == 0) throw ValidationError("constant policy needs a non-empty investment vector");
  if (!std::isfinite(c_) || !u_.allFinite()) throw ValidationError("constant policy must be finite");
}

ConstantPolicy ConstantPolicy::zero(std::size_t dimension) {
  return ConstantPolicy(0.0, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dimension)));
}

double ConstantPolicy::consumption(double, double) const { return c_; }

void ConstantPolicy::investment_into(double, double, std::span<double> out) const {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = u_(static_cast<Eigen::Index>(i));
}

std::optional<AffineControls> ConstantPolicy::affine_form(double) const {
  return AffineControls{c_, 0.0, u_, Eigen::VectorXd::Zero(u_.size())};
}

std::string ConstantPolicy::describe() const { return "constant"; }

ScaledConsumptionPolicy::ScaledConsumptionPolicy(std::shared_ptr<const Policy> base, double factor)
    : base_(std::move(base)), factor_(factor) {
  if (!base_) throw ValidationError("scaled policy needs a base policy");
  if (!(factor > 0.0) || !std::isfinite(factor)) {
    throw ValidationError("consumption scale must be > 0");
  }
}

double ScaledConsumptionPolicy::consumption(double t, double x) const {
  return factor_ * base_->consumption(t, x);
}

void ScaledConsumptionPolicy::investment_into(double t, double x, std::span<double> out) const {
  base_->investment_into(t, x, out);
}

std::optional<AffineControls> ScaledConsumptionPolicy::affine_form(double t) const {
  auto f = base_->affine_form(t);
  if (f) {
    f->c0 *= factor_;
    f->c1 *= factor_;
  }
  return f;
}

std::string ScaledConsumptionPolicy::describe() const {
  return base_->describe() + " with consumption x" + std::to_string(factor_);
}

}  // namespace mertoneq
