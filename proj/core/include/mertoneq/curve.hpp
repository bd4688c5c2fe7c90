#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mertoneq {

// Piecewise-linear function sampled on uniform nodes over [lower, upper].
// A single sample is a constant. Integrals are exact for the interpolant.
class Curve {
 public:
  Curve(double lower, double upper, std::vector<double> samples);
  static Curve constant(double value, double lower, double upper);

  double operator()(double t) const;
  double integral(double from, double to) const;

  double lower() const noexcept { return lower_; }
  double upper() const noexcept { return upper_; }
  std::size_t size() const noexcept { return samples_.size(); }
  bool is_constant() const noexcept { return samples_.size() == 1; }
  std::span<const double> samples() const noexcept { return samples_; }
  double node(std::size_t k) const;
  double min() const;
  double max() const;

 private:
  double primitive(double t) const;
  std::size_t locate(double t) const;
  void check(double t) const;

  double lower_;
  double upper_;
  double h_ = 0.0;
  std::vector<double> samples_;
  std::vector<double> cumulative_;
};

}  // namespace mertoneq
