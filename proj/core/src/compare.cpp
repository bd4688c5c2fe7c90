#include "mertoneq/compare.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <sstream>
#include <utility>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "mertoneq/errors.hpp"
#include "mertoneq/quadrature.hpp"

namespace mertoneq {

namespace {

using Fn = std::function<double(double)>;

double gk(const Fn& f, double lo, double hi) {
  if (!(hi > lo)) return 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, lo, hi, 5, 1e-12);
}

// Sorted, de-duplicated breakpoints inside [lo, hi], including both ends.
std::vector<double> clean_breaks(std::vector<double> b, double lo, double hi) {
  b.push_back(lo);
  b.push_back(hi);
  std::erase_if(b, [&](double v) { return v < lo || v > hi; });
  std::sort(b.begin(), b.end());
  const double tol = 1e-13 * (1.0 + std::abs(hi));
  std::vector<double> out;
  for (double v : b) {
    if (out.empty() || v - out.back() > tol) out.push_back(v);
  }
  out.back() = hi;
  return out;
}

double gk_split(const Fn& f, double lo, double hi, const std::vector<double>& breaks) {
  if (!(hi > lo)) return 0.0;
  double total = 0.0;
  double from = lo;
  for (double b : breaks) {
    if (b <= from) continue;
    if (b >= hi) break;
    total += gk(f, from, b);
    from = b;
  }
  return total + gk(f, from, hi);
}

// tau -> int_tau^T f, with the integrals between breakpoints cached.
class TailIntegral {
 public:
  // Exact tails for a function known in closed form.
  explicit TailIntegral(Fn tail) : exact_(std::move(tail)) {}

  TailIntegral(Fn f, std::vector<double> breaks) : f_(std::move(f)), breaks_(std::move(breaks)) {
    tail_.assign(breaks_.size(), 0.0);
    for (std::size_t i = breaks_.size() - 1; i-- > 0;) {
      tail_[i] = tail_[i + 1] + gk(f_, breaks_[i], breaks_[i + 1]);
    }
  }

  double operator()(double tau) const {
    if (exact_) return exact_(tau);
    const auto it = std::upper_bound(breaks_.begin(), breaks_.end(), tau);
    if (it == breaks_.end()) return 0.0;
    const std::size_t i = static_cast<std::size_t>(it - breaks_.begin());
    return gk(f_, tau, breaks_[i]) + tail_[i];
  }

 private:
  Fn f_;
  std::vector<double> breaks_;
  std::vector<double> tail_;
  Fn exact_;
};

std::vector<double> curve_breaks(const Curve& c) {
  std::vector<double> out;
  if (c.is_constant()) return out;
  for (std::size_t k = 0; k < c.size(); ++k) out.push_back(c.node(k));
  return out;
}

bool constant_market(const MarketModel& m) {
  if (!m.riskless_curve().is_constant()) return false;
  for (const auto& c : m.drift_curves()) {
    if (!c.is_constant()) return false;
  }
  for (const auto& row : m.volatility_curves()) {
    for (const auto& c : row) {
      if (!c.is_constant()) return false;
    }
  }
  return true;
}

// int_tau^T R
TailIntegral premium_tail(const MarketModel& m, const std::vector<double>& breaks) {
  const double T = m.horizon();
  if (constant_market(m)) {
    const double R = m.risk_premium_quadratic(0.0);
    return TailIntegral([R, T](double tau) { return R * (T - tau); });
  }
  return TailIntegral([&m](double s) { return m.risk_premium_quadratic(s); }, breaks);
}

// int_tau^T exp(int_s^T r0) ds
TailIntegral growth_tail(const MarketModel& m, const std::vector<double>& breaks) {
  const double T = m.horizon();
  if (constant_market(m)) {
    const double r = m.riskless_rate(0.0);
    return TailIntegral([r, T](double tau) { return r == 0.0 ? T - tau : std::expm1(r * (T - tau)) / r; });
  }
  return TailIntegral([&m, T](double s) { return std::exp(m.integrated_rate(s, T)); }, breaks);
}

std::vector<double> market_breaks(const MarketModel& m) {
  std::vector<double> out = curve_breaks(m.riskless_curve());
  for (const auto& c : m.drift_curves()) {
    auto b = curve_breaks(c);
    out.insert(out.end(), b.begin(), b.end());
  }
  for (const auto& row : m.volatility_curves()) {
    for (const auto& c : row) {
      auto b = curve_breaks(c);
      out.insert(out.end(), b.begin(), b.end());
    }
  }
  return out;
}

// Log-discount L(tau) = -ln lambda(tau) together with the kinks of its integrand.
struct LogDiscount {
  std::function<double(double)> L;
  std::vector<double> kinks;  // values of tau where delta has a node
  std::optional<double> rate;  // set for a constant rate
};

LogDiscount exponential_log_discount(double delta0) {
  return {[delta0](double tau) { return delta0 * tau; }, {}, delta0};
}

LogDiscount karp_log_discount(const Curve& delta) {
  return {[delta](double tau) { return delta.integral(0.0, tau); }, curve_breaks(delta), std::nullopt};
}

void check_grid(const MarketModel& m, const TimeGrid& grid) {
  if (std::abs(grid.start()) > 1e-12 || std::abs(grid.end() - m.horizon()) > 1e-9 * (1.0 + m.horizon())) {
    throw ValidationError("comparison grid must span [0, T]");
  }
}

void check_delta(const Curve& delta, double horizon) {
  if (delta.lower() > 1e-12 || delta.upper() < horizon - 1e-9 * (1.0 + horizon)) {
    throw ValidationError("delta curve must cover [0, T]");
  }
}

Curve on_grid(const TimeGrid& grid, const std::vector<double>& v) {
  return Curve(grid.start(), grid.end(), v);
}

std::vector<double> reflect(const std::vector<double>& kinks, double horizon) {
  std::vector<double> out;
  for (double k : kinks) out.push_back(horizon - k);
  return out;
}

std::vector<double> merge(std::vector<double> a, const std::vector<double>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

ComparisonPolicy build_log(Family f, const MarketModel& m, double a, const LogDiscount& ld,
                           const TimeGrid& grid, std::vector<std::string> notes) {
  const double T = m.horizon();
  const auto breaks = clean_breaks(reflect(ld.kinks, T), 0.0, T);
  std::vector<double> c1(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double t = grid.node(k);
    const double Ltt = ld.L(T - t);
    double integral = 0.0;
    if (ld.rate) {
      const double delta0 = *ld.rate;
      integral = delta0 == 0.0 ? T - t : -std::expm1(-delta0 * (T - t)) / delta0;
    } else {
      integral = gk_split([&](double l) { return std::exp(-(Ltt - ld.L(T - l))); }, t, T, breaks);
    }
    c1[k] = 1.0 / (a * std::exp(-Ltt) + integral);
  }
  return ComparisonPolicy(f, m, Curve::constant(0.0, 0.0, T), on_grid(grid, c1), Curve::constant(0.0, 0.0, T),
                          Curve::constant(1.0, 0.0, T), std::move(notes));
}

ComparisonPolicy build_power(Family f, const MarketModel& m, double a, double gamma, const LogDiscount& ld,
                             const TimeGrid& grid, std::vector<std::string> notes) {
  const double T = m.horizon();
  const auto mb = clean_breaks(market_breaks(m), 0.0, T);
  const auto breaks = clean_breaks(merge(market_breaks(m), reflect(ld.kinks, T)), 0.0, T);
  const TailIntegral int_R = premium_tail(m, mb);
  const double e = 1.0 / (gamma - 1.0);
  // int_tau^T K/(gamma-1) with K = gamma r0 + gamma R / (2 (1 - gamma))
  auto k_tail = [&](double tau) {
    return e * (gamma * m.integrated_rate(tau, T) + 0.5 * gamma / (1.0 - gamma) * int_R(tau));
  };
  auto A = [&](double tau) { return std::pow(a * std::exp(-ld.L(T - tau)), e); };
  const TailIntegral denom([&](double tau) { return A(tau) * std::exp(k_tail(tau)); }, breaks);
  std::vector<double> c1(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double t = grid.node(k);
    c1[k] = A(t) * std::exp(k_tail(t)) / (1.0 + denom(t));
  }
  return ComparisonPolicy(f, m, Curve::constant(0.0, 0.0, T), on_grid(grid, c1), Curve::constant(0.0, 0.0, T),
                          Curve::constant(1.0 / (1.0 - gamma), 0.0, T), std::move(notes));
}

ComparisonPolicy build_exponential(Family f, const MarketModel& m, double a, double gamma, const LogDiscount& ld,
                                   const TimeGrid& grid, std::vector<std::string> notes) {
  const double T = m.horizon();
  const auto mb = clean_breaks(market_breaks(m), 0.0, T);
  const auto breaks = clean_breaks(merge(market_breaks(m), reflect(ld.kinks, T)), 0.0, T);
  const TailIntegral growth = growth_tail(m, mb);
  auto D = [&](double l) { return 1.0 + growth(l); };
  auto phi = [&](double l) { return std::exp(m.integrated_rate(l, T)) / D(l); };
  auto log_alambda = [&](double l) { return std::log(a) - ld.L(T - l); };
  const TailIntegral psi_int(
      [&](double l) {
        return D(l) * (phi(l) * log_alambda(l) + 0.5 * m.risk_premium_quadratic(l) - m.riskless_rate(l));
      },
      breaks);
  std::vector<double> c0(grid.size()), c1(grid.size()), v0(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double t = grid.node(k);
    const double p = phi(t);
    const double psi = psi_int(t) / (gamma * D(t));
    c0[k] = -log_alambda(t) / gamma + psi;
    c1[k] = p;
    v0[k] = 1.0 / (gamma * p);
  }
  return ComparisonPolicy(f, m, on_grid(grid, c0), on_grid(grid, c1), on_grid(grid, v0),
                          Curve::constant(0.0, 0.0, T), std::move(notes));
}

// Cubic Lagrange interpolation of nodal values v on a uniform grid.
double interpolate(const std::vector<double>& v, double h, double t) {
  const std::size_t n = v.size() - 1;
  if (n < 3) {
    const double s = std::clamp(t / h, 0.0, static_cast<double>(n));
    const std::size_t i = std::min(static_cast<std::size_t>(s), n == 0 ? 0 : n - 1);
    if (n == 0) return v[0];
    const double w = s - static_cast<double>(i);
    return (1.0 - w) * v[i] + w * v[i + 1];
  }
  const double s = t / h;
  std::size_t i = static_cast<std::size_t>(std::max(0.0, std::floor(s)));
  std::size_t lo = i == 0 ? 0 : i - 1;
  lo = std::min(lo, n - 3);
  double out = 0.0;
  for (std::size_t a = 0; a < 4; ++a) {
    double w = 1.0;
    for (std::size_t b = 0; b < 4; ++b) {
      if (a == b) continue;
      w *= (s - static_cast<double>(lo + b)) / (static_cast<double>(a) - static_cast<double>(b));
    }
    out += w * v[lo + a];
  }
  return out;
}

}  // namespace

std::string_view family_name(Family f) noexcept {
  switch (f) {
    case Family::classical_merton_log: return "classical_merton_log";
    case Family::classical_merton_power: return "classical_merton_power";
    case Family::classical_merton_exp: return "classical_merton_exp";
    case Family::karp_openloop_log: return "karp_openloop_log";
    case Family::karp_openloop_power: return "karp_openloop_power";
    case Family::karp_openloop_exp: return "karp_openloop_exp";
    case Family::solano_feedback_log: return "solano_feedback_log";
    case Family::solano_feedback_power: return "solano_feedback_power";
  }
  return "unknown";
}

Utility::Kind family_utility(Family f) noexcept {
  switch (f) {
    case Family::classical_merton_log:
    case Family::karp_openloop_log:
    case Family::solano_feedback_log:
      return Utility::Kind::log;
    case Family::classical_merton_exp:
    case Family::karp_openloop_exp:
      return Utility::Kind::exponential;
    default:
      return Utility::Kind::power;
  }
}

ComparisonPolicy::ComparisonPolicy(Family family, const MarketModel& m, Curve c0, Curve c1, Curve v0, Curve v1,
                                   std::vector<std::string> notes)
    : family_(family),
      market_(m),
      c0_(std::move(c0)),
      c1_(std::move(c1)),
      v0_(std::move(v0)),
      v1_(std::move(v1)),
      notes_(std::move(notes)) {}

Eigen::VectorXd ComparisonPolicy::direction(double t) const { return market_.merton_direction(t); }

double ComparisonPolicy::consumption(double t, double x) const { return c0_(t) + c1_(t) * x; }

void ComparisonPolicy::investment_into(double t, double x, std::span<double> out) const {
  const Eigen::VectorXd dir = direction(t);
  const double scale = v0_(t) + v1_(t) * x;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = dir[static_cast<Eigen::Index>(i)] * scale;
}

std::optional<AffineControls> ComparisonPolicy::affine_form(double t) const {
  const Eigen::VectorXd dir = direction(t);
  return AffineControls{c0_(t), c1_(t), dir * v0_(t), dir * v1_(t)};
}

std::string ComparisonPolicy::describe() const { return std::string(family_name(family_)); }

ComparisonPolicy classical_merton(const MarketModel& m, const Utility& u, double delta0, const TimeGrid& grid) {
  check_grid(m, grid);
  const LogDiscount ld = exponential_log_discount(delta0);
  switch (u.kind()) {
    case Utility::Kind::log:
      return build_log(Family::classical_merton_log, m, u.a(), ld, grid,
                       {"discount exp(-delta0 tau)",
                        "lower limit of the consumption integral taken as t"});
    case Utility::Kind::power:
      return build_power(Family::classical_merton_power, m, u.a(), u.gamma(), ld, grid,
                         {"discount exp(-delta0 tau)"});
    case Utility::Kind::exponential:
      return build_exponential(Family::classical_merton_exp, m, u.a(), u.gamma(), ld, grid,
                               {"discount exp(-delta0 tau)",
                                "investment uses the wealth-independent form Sigma r / (gamma phi)"});
  }
  throw ValidationError("unknown utility");
}

ComparisonPolicy karp_openloop(const MarketModel& m, const Utility& u, const Curve& delta, const TimeGrid& grid) {
  check_grid(m, grid);
  check_delta(delta, m.horizon());
  const LogDiscount ld = karp_log_discount(delta);
  switch (u.kind()) {
    case Utility::Kind::log:
      return build_log(Family::karp_openloop_log, m, u.a(), ld, grid,
                       {"free variable s of the inner discount integral taken as t"});
    case Utility::Kind::power:
      return build_power(Family::karp_openloop_power, m, u.a(), u.gamma(), ld, grid,
                         {"free variable s of the wealth-growth exponent taken as t"});
    case Utility::Kind::exponential:
      return build_exponential(
          Family::karp_openloop_exp, m, u.a(), u.gamma(), ld, grid,
          {"psi integrand uses ln(a lambda(T-l)) under the integral",
           "investment uses the wealth-independent form Sigma r / (gamma phi), without the printed 1/X"});
  }
  throw ValidationError("unknown utility");
}

ComparisonPolicy solano_feedback_log(const MarketModel& m, double a, const Curve& delta, const TimeGrid& grid) {
  check_grid(m, grid);
  check_delta(delta, m.horizon());
  const double T = m.horizon();
  const auto kinks = curve_breaks(delta);
  std::vector<double> c1(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double t = grid.node(k);
    std::vector<double> shifted;
    for (double v : kinks) shifted.push_back(t + v);
    const auto breaks = clean_breaks(shifted, t, T);
    const double integral = gk_split([&](double l) { return std::exp(-delta.integral(0.0, l - t)); }, t, T, breaks);
    c1[k] = 1.0 / (a * std::exp(-delta.integral(0.0, T - t)) + integral);
  }
  return ComparisonPolicy(Family::solano_feedback_log, m, Curve::constant(0.0, 0.0, T), on_grid(grid, c1),
                          Curve::constant(0.0, 0.0, T), Curve::constant(1.0, 0.0, T),
                          {"delay discount read as lambda(l - t)"});
}

FeedbackPowerSolution solano_feedback_power(const MarketModel& m, double a, double gamma, const Curve& delta,
                                            const TimeGrid& grid, const FixedPointSettings& settings) {
  check_grid(m, grid);
  check_delta(delta, m.horizon());
  if (!(gamma > 0.0 && gamma < 1.0)) throw ValidationError("power utility needs gamma in (0,1)");
  if (!(a > 0.0)) throw ValidationError("a must be positive");
  if (!(settings.damping > 0.0 && settings.damping <= 1.0)) throw ValidationError("damping must lie in (0, 1]");
  const double T = m.horizon();
  const std::size_t n = grid.steps();
  const double h = grid.step();
  const double pe = gamma / (gamma - 1.0);
  const double ce = 1.0 / (gamma - 1.0);

  auto K = [&](double t) {
    return gamma * m.riskless_rate(t) + 0.5 * gamma * m.risk_premium_quadratic(t) / (1.0 - gamma);
  };
  std::vector<double> lam(n + 1), dd(n + 1), r0(n + 1), R(n + 1), dT(n + 1);
  for (std::size_t j = 0; j <= n; ++j) {
    const double s = grid.node(j);
    lam[j] = std::exp(-delta.integral(0.0, static_cast<double>(j) * h));
    dd[j] = delta(static_cast<double>(j) * h);
    r0[j] = m.riskless_rate(s);
    R[j] = m.risk_premium_quadratic(s);
    dT[j] = delta(T - s);
  }

  auto check_alpha = [&](const std::vector<double>& alpha) {
    for (std::size_t j = 0; j <= n; ++j) {
      if (!(alpha[j] > 0.0) || !std::isfinite(alpha[j])) {
        std::ostringstream os;
        os << "alpha left the positive axis at t=" << grid.node(j);
        throw SolverError(os.str());
      }
    }
  };

  auto memory_term = [&](const std::vector<double>& alpha) {
    std::vector<double> g(n + 1);
    for (std::size_t j = 0; j <= n; ++j) {
      g[j] = r0[j] + R[j] / (1.0 - gamma) - std::pow(alpha[j], ce);
    }
    const std::vector<double> G = cumulative_integrals(g, h);
    std::vector<double> I(n + 1, 0.0);
    std::vector<double> f;
    for (std::size_t j = 0; j < n; ++j) {
      f.assign(n - j + 1, 0.0);
      for (std::size_t i = j; i <= n; ++i) {
        const std::size_t d = i - j;
        f[d] = lam[d] * (dd[d] - dT[j]) * std::pow(alpha[i], pe) * std::exp(gamma * (G[i] - G[j]));
      }
      if (f.size() == 2) {
        I[j] = 0.5 * h * (f[0] + f[1]);
      } else if (f.size() == 3) {
        I[j] = h / 3.0 * (f[0] + 4.0 * f[1] + f[2]);
      } else {
        I[j] = integrate(f, h);
      }
    }
    return I;
  };

  auto sweep = [&](const std::vector<double>& I) {
    std::vector<double> alpha(n + 1);
    alpha[n] = a;
    auto rhs = [&](double t, double y) {
      if (!(y > 0.0)) throw SolverError("alpha left the positive axis during a sweep");
      return (delta(T - t) - K(t)) * y - (1.0 - gamma) * std::pow(y, pe) + interpolate(I, h, t);
    };
    for (std::size_t j = n; j > 0; --j) {
      const double t = grid.node(j);
      const double y = alpha[j];
      const double k1 = rhs(t, y);
      const double k2 = rhs(t - 0.5 * h, y - 0.5 * h * k1);
      const double k3 = rhs(t - 0.5 * h, y - 0.5 * h * k2);
      const double k4 = rhs(t - h, y - h * k3);
      alpha[j - 1] = y - h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    check_alpha(alpha);
    return alpha;
  };

  std::vector<double> alpha = sweep(std::vector<double>(n + 1, 0.0));
  std::vector<double> history;
  bool converged = false;
  for (std::size_t it = 0; it < settings.max_iterations; ++it) {
    const std::vector<double> next = sweep(memory_term(alpha));
    double change = 0.0;
    for (std::size_t j = 0; j <= n; ++j) {
      const double v = (1.0 - settings.damping) * alpha[j] + settings.damping * next[j];
      change = std::max(change, std::abs(v - alpha[j]));
      alpha[j] = v;
    }
    history.push_back(change);
    if (!std::isfinite(change)) break;
    if (change <= settings.tolerance) {
      converged = true;
      break;
    }
  }
  if (!converged) throw ConvergenceError("feedback power fixed point did not converge", history);

  std::vector<double> c1(n + 1);
  for (std::size_t j = 0; j <= n; ++j) c1[j] = std::pow(alpha[j], ce);
  ComparisonPolicy policy(Family::solano_feedback_power, m, Curve::constant(0.0, 0.0, T), on_grid(grid, c1),
                          Curve::constant(0.0, 0.0, T), Curve::constant(1.0 / (1.0 - gamma), 0.0, T),
                          {"alpha exponents taken as gamma/(gamma-1) and 1/(gamma-1) to match c = alpha^(1/(gamma-1)) x",
                           "memory term evaluated with the delay discount lambda(s - t)"});
  return FeedbackPowerSolution{std::move(policy), on_grid(grid, alpha), std::move(history)};
}

double naive_log_fraction(const DiscountFunction& d, double a, double t0, double s) {
  const double T = d.horizon();
  if (s < t0 || s > T) throw DomainError("naive fraction needs t0 <= s <= T");
  const double base = std::log(d(s - t0));
  const double integral =
      gk([&](double r) { return std::exp(d(r - s) + std::log(d(r - t0)) - base); }, s, T);
  return 1.0 / (a + integral);
}

NaiveConsumption naive_log_consumption(const DiscountFunction& d, double a, double t0, std::size_t steps) {
  const double T = d.horizon();
  if (!(t0 >= 0.0 && t0 < T)) throw ValidationError("naive start must lie in [0, T)");
  if (steps == 0) throw ValidationError("naive grid needs at least one step");
  const TimeGrid grid(t0, T, steps);
  std::vector<double> v(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) v[k] = naive_log_fraction(d, a, t0, grid.node(k));
  return NaiveConsumption{t0, Curve(t0, T, std::move(v)),
                          {"exponent evaluated as written, including the additive lambda(r - s) term"}};
}

std::vector<GapRow> policy_gaps(const ComparisonPolicy& a, const ComparisonPolicy& b, const TimeGrid& grid,
                                double x) {
  std::vector<GapRow> rows;
  rows.reserve(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double t = grid.node(k);
    const Eigen::VectorXd ua = a.investment(t, x);
    const Eigen::VectorXd ub = b.investment(t, x);
    rows.push_back({t, a.family(), b.family(), std::abs(a.consumption(t, x) - b.consumption(t, x)),
                    (ua - ub).cwiseAbs().maxCoeff()});
  }
  return rows;
}

}  // namespace mertoneq
