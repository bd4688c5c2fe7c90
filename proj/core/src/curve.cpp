#include "mertoneq/curve.hpp"

#include <algorithm>
#include <cmath>

#include "mertoneq/errors.hpp"

namespace mertoneq {

namespace {
constexpr double kEdgeTolerance = 1e-10;
}

Curve::Curve(double lower, double upper, std::vector<double> samples)
    : lower_(lower), upper_(upper), samples_(std::move(samples)) {
  if (!std::isfinite(lower) || !std::isfinite(upper) || !(upper > lower)) {
    throw ValidationError("curve needs a finite interval with upper > lower");
  }
  if (samples_.empty()) throw ValidationError("curve needs at least one sample");
  for (double v : samples_) {
    if (!std::isfinite(v)) throw ValidationError("curve samples must be finite");
  }
  if (samples_.size() > 1) {
    h_ = (upper_ - lower_) / static_cast<double>(samples_.size() - 1);
    cumulative_.resize(samples_.size());
    cumulative_[0] = 0.0;
    for (std::size_t k = 1; k < samples_.size(); ++k) {
      cumulative_[k] = cumulative_[k - 1] + 0.5 * h_ * (samples_[k - 1] + samples_[k]);
    }
  }
}

Curve Curve::constant(double value, double lower, double upper) {
  return Curve(lower, upper, std::vector<double>{value});
}

double Curve::node(std::size_t k) const {
  if (k >= samples_.size()) throw DomainError("curve node index out of range");
  if (samples_.size() == 1) return lower_;
  if (k + 1 == samples_.size()) return upper_;
  return lower_ + static_cast<double>(k) * h_;
}

void Curve::check(double t) const {
  const double tol = kEdgeTolerance * (1.0 + std::abs(upper_) + std::abs(lower_));
  if (!(t >= lower_ - tol && t <= upper_ + tol)) {
    throw DomainError("curve evaluated outside [" + std::to_string(lower_) + ", " +
                      std::to_string(upper_) + "] at t=" + std::to_string(t));
  }
}

std::size_t Curve::locate(double t) const {
  const double pos = (t - lower_) / h_;
  if (pos <= 0.0) return 0;
  const auto last = samples_.size() - 2;
  return std::min(static_cast<std::size_t>(pos), last);
}

double Curve::operator()(double t) const {
  check(t);
  if (samples_.size() == 1) return samples_[0];
  if (t <= lower_) return samples_.front();
  if (t >= upper_) return samples_.back();
  const std::size_t i = locate(t);
  const double w = (t - lower_) / h_ - static_cast<double>(i);
  return (1.0 - w) * samples_[i] + w * samples_[i + 1];
}

double Curve::primitive(double t) const {
  if (samples_.size() == 1) return samples_[0] * (t - lower_);
  const std::size_t i = locate(t);
  const double dt = t - (lower_ + static_cast<double>(i) * h_);
  const double slope = (samples_[i + 1] - samples_[i]) / h_;
  return cumulative_[i] + dt * (samples_[i] + 0.5 * slope * dt);
}

double Curve::integral(double from, double to) const {
  check(from);
  check(to);
  from = std::clamp(from, lower_, upper_);
  to = std::clamp(to, lower_, upper_);
  if (samples_.size() == 1) return samples_[0] * (to - from);
  return primitive(to) - primitive(from);
}

double Curve::min() const { return *std::min_element(samples_.begin(), samples_.end()); }
double Curve::max() const { return *std::max_element(samples_.begin(), samples_.end()); }

}  // namespace mertoneq
