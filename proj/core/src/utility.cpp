#include "mertoneq/utility.hpp"

#include <cmath>
#include <string>

#include "mertoneq/errors.hpp"

namespace mertoneq {

Utility Utility::power(double a, double gamma) {
  if (!(a > 0.0) || !std::isfinite(a)) throw ValidationError("power utility needs a > 0");
  if (!(gamma > 0.0 && gamma < 1.0)) {
    throw ValidationError("power utility needs gamma in (0,1), got " + std::to_string(gamma));
  }
  return Utility(Kind::power, a, gamma);
}

Utility Utility::log(double a) {
  if (!(a > 0.0) || !std::isfinite(a)) throw ValidationError("log utility needs a > 0");
  return Utility(Kind::log, a, 0.0);
}

Utility Utility::exponential(double a, double gamma) {
  if (!(a > 0.0) || !std::isfinite(a)) throw ValidationError("exponential utility needs a > 0");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw ValidationError("exponential utility needs gamma > 0, got " + std::to_string(gamma));
  }
  return Utility(Kind::exponential, a, gamma);
}

std::string_view Utility::name() const noexcept {
  switch (kind_) {
    case Kind::power:
      return "power";
    case Kind::log:
      return "log";
    case Kind::exponential:
      return "exponential";
  }
  return "unknown";
}

bool Utility::consumption_admissible(double c) const noexcept {
  return std::isfinite(c) && (kind_ == Kind::exponential || c > 0.0);
}

bool Utility::wealth_admissible(double x) const noexcept {
  return std::isfinite(x) && (kind_ == Kind::exponential || x > 0.0);
}

void Utility::check_c(double c) const {
  if (!consumption_admissible(c)) {
    throw DomainError(std::string(name()) + " utility undefined at c=" + std::to_string(c));
  }
}

void Utility::check_x(double x) const {
  if (!wealth_admissible(x)) {
    throw DomainError(std::string(name()) + " terminal utility undefined at x=" + std::to_string(x));
  }
}

double Utility::phi(double c) const {
  check_c(c);
  switch (kind_) {
    case Kind::power:
      return std::pow(c, gamma_) / gamma_;
    case Kind::log:
      return std::log(c);
    case Kind::exponential:
      return -std::exp(-gamma_ * c) / gamma_;
  }
  return 0.0;
}

double Utility::phi_c(double c) const {
  check_c(c);
  switch (kind_) {
    case Kind::power:
      return std::pow(c, gamma_ - 1.0);
    case Kind::log:
      return 1.0 / c;
    case Kind::exponential:
      return std::exp(-gamma_ * c);
  }
  return 0.0;
}

double Utility::phi_cc(double c) const {
  check_c(c);
  switch (kind_) {
    case Kind::power:
      return (gamma_ - 1.0) * std::pow(c, gamma_ - 2.0);
    case Kind::log:
      return -1.0 / (c * c);
    case Kind::exponential:
      return -gamma_ * std::exp(-gamma_ * c);
  }
  return 0.0;
}

double Utility::h(double x) const {
  check_x(x);
  switch (kind_) {
    case Kind::power:
      return a_ * std::pow(x, gamma_) / gamma_;
    case Kind::log:
      return a_ * std::log(x);
    case Kind::exponential:
      return -a_ * std::exp(-gamma_ * x) / gamma_;
  }
  return 0.0;
}

double Utility::h_x(double x) const {
  check_x(x);
  switch (kind_) {
    case Kind::power:
      return a_ * std::pow(x, gamma_ - 1.0);
    case Kind::log:
      return a_ / x;
    case Kind::exponential:
      return a_ * std::exp(-gamma_ * x);
  }
  return 0.0;
}

double Utility::h_xx(double x) const {
  check_x(x);
  switch (kind_) {
    case Kind::power:
      return a_ * (gamma_ - 1.0) * std::pow(x, gamma_ - 2.0);
    case Kind::log:
      return -a_ / (x * x);
    case Kind::exponential:
      return -a_ * gamma_ * std::exp(-gamma_ * x);
  }
  return 0.0;
}

double Utility::inverse_marginal(double y) const {
  if (!(y > 0.0) || !std::isfinite(y)) {
    throw DomainError("inverse marginal utility needs y > 0, got " + std::to_string(y));
  }
  switch (kind_) {
    case Kind::power:
      return std::pow(y, 1.0 / (gamma_ - 1.0));
    case Kind::log:
      return 1.0 / y;
    case Kind::exponential:
      return -std::log(y) / gamma_;
  }
  return 0.0;
}

double Utility::inverse_marginal_slope(double y) const {
  return 1.0 / phi_cc(inverse_marginal(y));
}

double inverse_marginal(const Utility& u, double y) { return u.inverse_marginal(y); }

}  // namespace mertoneq
