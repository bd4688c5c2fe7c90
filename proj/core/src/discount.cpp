#include "mertoneq/discount.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "mertoneq/errors.hpp"
#include "mertoneq/grid.hpp"

namespace mertoneq {

namespace {

template <class... F>
struct overloaded : F... {
  using F::operator()...;
};
template <class... F>
overloaded(F...) -> overloaded<F...>;

void validate(const DiscountFunction::Variant& spec, double horizon) {
  std::visit(
      overloaded{
          [](const DiscountFunction::Exponential& e) {
            if (!std::isfinite(e.rate) || e.rate < 0.0) {
              throw ValidationError("exponential discount rate must be >= 0");
            }
          },
          [horizon](const DiscountFunction::KarpRate& k) {
            const double tol = 1e-12 * (1.0 + horizon);
            if (std::abs(k.rate.lower()) > tol || k.rate.upper() < horizon - tol) {
              throw ValidationError("Karp discount rate must be defined on [0, T]");
            }
          },
          [](const DiscountFunction::Hyperbolic& h) {
            if (!(h.k > 0.0) || !std::isfinite(h.k)) {
              throw ValidationError("hyperbolic discount needs k > 0");
            }
            if (!(h.beta > 0.0) || !std::isfinite(h.beta)) {
              throw ValidationError("hyperbolic discount needs beta > 0");
            }
          },
          [](const DiscountFunction::Mixture& m) {
            if (m.weights.empty() || m.weights.size() != m.rates.size()) {
              throw ValidationError("mixture discount needs matching, non-empty weights and rates");
            }
            for (double w : m.weights) {
              if (!(w >= 0.0) || !std::isfinite(w)) {
                throw ValidationError("mixture weights must be >= 0");
              }
            }
            for (double r : m.rates) {
              if (!(r >= 0.0) || !std::isfinite(r)) {
                throw ValidationError("mixture rates must be >= 0");
              }
            }
            const double total = std::accumulate(m.weights.begin(), m.weights.end(), 0.0);
            if (std::abs(total - 1.0) > 1e-12) {
              throw ValidationError("mixture weights must sum to 1");
            }
          },
      },
      spec);
}

}  // namespace

DiscountFunction::DiscountFunction(Variant spec, double horizon)
    : spec_(std::move(spec)), horizon_(horizon) {
  if (!(horizon_ > 0.0) || !std::isfinite(horizon_)) {
    throw ValidationError("discount horizon must be > 0");
  }
  validate(spec_, horizon_);
}

DiscountFunction DiscountFunction::exponential(double rate, double horizon) {
  return DiscountFunction(Exponential{rate}, horizon);
}

DiscountFunction DiscountFunction::karp(Curve rate, double horizon) {
  return DiscountFunction(KarpRate{std::move(rate)}, horizon);
}

DiscountFunction DiscountFunction::hyperbolic(double k, double beta, double horizon) {
  return DiscountFunction(Hyperbolic{k, beta}, horizon);
}

DiscountFunction DiscountFunction::mixture(std::vector<double> weights, std::vector<double> rates,
                                           double horizon) {
  return DiscountFunction(Mixture{std::move(weights), std::move(rates)}, horizon);
}

double DiscountFunction::operator()(double tau) const {
  const double tol = 1e-10 * (1.0 + horizon_);
  if (!(tau >= -tol && tau <= horizon_ + tol)) {
    throw DomainError("discount evaluated outside [0, T] at tau=" + std::to_string(tau));
  }
  tau = std::clamp(tau, 0.0, horizon_);
  return std::visit(overloaded{
                        [tau](const Exponential& e) { return std::exp(-e.rate * tau); },
                        [tau](const KarpRate& k) { return std::exp(-k.rate.integral(0.0, tau)); },
                        [tau](const Hyperbolic& h) { return std::pow(1.0 + h.k * tau, -h.beta); },
                        [tau](const Mixture& m) {
                          double sum = 0.0;
                          for (std::size_t i = 0; i < m.weights.size(); ++i) {
                            sum += m.weights[i] * std::exp(-m.rates[i] * tau);
                          }
                          return sum;
                        },
                    },
                    spec_);
}

std::string_view DiscountFunction::name() const {
  return std::visit(overloaded{
                        [](const Exponential&) { return std::string_view("exponential"); },
                        [](const KarpRate&) { return std::string_view("karp"); },
                        [](const Hyperbolic&) { return std::string_view("hyperbolic"); },
                        [](const Mixture&) { return std::string_view("mixture"); },
                    },
                    spec_);
}

double evaluate_discount(const DiscountFunction& d, double tau) { return d(tau); }

double lipschitz_estimate(const DiscountFunction& d, const TimeGrid& grid) {
  double best = 0.0;
  double prev = d(grid.node(0));
  for (std::size_t k = 1; k < grid.size(); ++k) {
    const double cur = d(grid.node(k));
    best = std::max(best, std::abs(cur - prev) / grid.step());
    prev = cur;
  }
  return best;
}

}  // namespace mertoneq
