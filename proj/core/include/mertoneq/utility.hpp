#pragma once

#include <string_view>

namespace mertoneq {

// Running utility phi(c) and terminal utility h(x) = a * (phi-shaped in x).
class Utility {
 public:
  enum class Kind { power, log, exponential };

  static Utility power(double a, double gamma);
  static Utility log(double a);
  static Utility exponential(double a, double gamma);

  Kind kind() const noexcept { return kind_; }
  std::string_view name() const noexcept;
  double a() const noexcept { return a_; }
  // Zero for log utility.
  double gamma() const noexcept { return gamma_; }

  double phi(double c) const;
  double phi_c(double c) const;
  double phi_cc(double c) const;
  double h(double x) const;
  double h_x(double x) const;
  double h_xx(double x) const;

  // I = phi_c^{-1}
  double inverse_marginal(double y) const;
  // I'(y) = 1 / phi_cc(I(y))
  double inverse_marginal_slope(double y) const;

  bool consumption_admissible(double c) const noexcept;
  bool wealth_admissible(double x) const noexcept;
  bool positive_domain() const noexcept { return kind_ != Kind::exponential; }

 private:
  Utility(Kind kind, double a, double gamma) : kind_(kind), a_(a), gamma_(gamma) {}
  void check_c(double c) const;
  void check_x(double x) const;

  Kind kind_;
  double a_;
  double gamma_;
};

double inverse_marginal(const Utility& u, double y);

}  // namespace mertoneq
