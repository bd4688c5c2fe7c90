#pragma once

#include <string_view>
#include <variant>
#include <vector>

#include "mertoneq/curve.hpp"

namespace mertoneq {

class TimeGrid;

class DiscountFunction {
 public:
  struct Exponential {
    double rate;
  };
  // lambda(tau) = exp(-int_0^tau delta)
  struct KarpRate {
    Curve rate;
  };
  // lambda(tau) = (1 + k tau)^(-beta)
  struct Hyperbolic {
    double k;
    double beta;
  };
  struct Mixture {
    std::vector<double> weights;
    std::vector<double> rates;
  };
  using Variant = std::variant<Exponential, KarpRate, Hyperbolic, Mixture>;

  DiscountFunction(Variant spec, double horizon);

  static DiscountFunction exponential(double rate, double horizon);
  static DiscountFunction karp(Curve rate, double horizon);
  static DiscountFunction hyperbolic(double k, double beta, double horizon);
  static DiscountFunction mixture(std::vector<double> weights, std::vector<double> rates,
                                  double horizon);

  double operator()(double tau) const;
  double horizon() const noexcept { return horizon_; }
  const Variant& spec() const noexcept { return spec_; }
  std::string_view name() const;

 private:
  Variant spec_;
  double horizon_;
};

double evaluate_discount(const DiscountFunction& d, double tau);

// max |lambda(t_{k+1}) - lambda(t_k)| / h over the grid nodes in [0, T]
double lipschitz_estimate(const DiscountFunction& d, const TimeGrid& grid);

}  // namespace mertoneq
