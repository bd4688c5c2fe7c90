#include "mertoneq/closedform.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mertoneq/errors.hpp"
#include "mertoneq/quadrature.hpp"

namespace mertoneq {

namespace {

void check_grid(const MarketModel& m, const DiscountFunction& d, const TimeGrid& grid) {
  const double T = m.horizon();
  if (grid.start() != 0.0 || std::abs(grid.end() - T) > 1e-12 * (1.0 + T)) {
    throw ValidationError("solve grid must span [0, T] of the market");
  }
  if (std::abs(d.horizon() - T) > 1e-12 * (1.0 + T)) {
    throw ValidationError("discount horizon differs from market horizon");
  }
  if (grid.steps() < 4) throw ValidationError("closed-form solve needs at least 4 grid steps");
}

Curve on_grid(const TimeGrid& grid, std::vector<double> values) {
  return Curve(grid.start(), grid.end(), std::move(values));
}

double sup_abs(const std::vector<double>& v) {
  double best = 0.0;
  for (double x : v) best = std::max(best, std::abs(x));
  return best;
}

}  // namespace

PowerCoefficients solve_power(const MarketModel& m, const DiscountFunction& d, double a,
                              double gamma, const TimeGrid& grid) {
  if (!(a > 0.0)) throw ValidationError("power utility needs a > 0");
  if (!(gamma > 0.0 && gamma < 1.0)) throw ValidationError("power utility needs gamma in (0,1)");
  check_grid(m, d, grid);

  const double T = grid.end();
  const double h = grid.step();
  const std::size_t n = grid.size();
  std::vector<double> K(n), Q(n), R(n), r0(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = grid.node(k);
    r0[k] = m.riskless_rate(t);
    R[k] = m.risk_premium_quadratic(t);
    K[k] = gamma * r0[k] + 0.5 * gamma / (1.0 - gamma) * R[k];
    Q[k] = (1.0 - gamma) * std::pow(a * d(T - t), 1.0 / (gamma - 1.0));
  }

  // E_k = int_{t_k}^T K/(gamma-1); the r0 part is exact for the piecewise-linear rate.
  const std::vector<double> intR = tail_integrals(R, h);
  std::vector<double> E(n), g(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double intK = gamma * m.integrated_rate(grid.node(k), T) +
                        0.5 * gamma / (1.0 - gamma) * intR[k];
    E[k] = intK / (gamma - 1.0);
    g[k] = Q[k] / (gamma - 1.0) * std::exp(E[k]);
  }
  const std::vector<double> G = tail_integrals(g, h);

  std::vector<double> y(n), Pi(n);
  for (std::size_t k = 0; k < n; ++k) {
    y[k] = (1.0 - G[k]) * std::exp(-E[k]);
    if (!(y[k] > 0.0)) {
      throw SolverError("power case not solvable: y(t) <= 0 at t=" + std::to_string(grid.node(k)));
    }
    Pi[k] = std::pow(y[k], 1.0 - gamma);
  }
  y[n - 1] = 1.0;
  Pi[n - 1] = 1.0;

  const std::vector<double> dPi = derivative(Pi, h);
  std::vector<double> res(n);
  for (std::size_t k = 0; k < n; ++k) {
    res[k] = dPi[k] + (K[k] + Q[k] * std::pow(Pi[k], 1.0 / (gamma - 1.0))) * Pi[k];
  }

  return PowerCoefficients{grid,
                           a,
                           gamma,
                           on_grid(grid, std::move(K)),
                           on_grid(grid, std::move(Q)),
                           on_grid(grid, std::move(y)),
                           on_grid(grid, std::move(Pi)),
                           sup_abs(res)};
}

LogCoefficients solve_log(const MarketModel& m, const DiscountFunction& d, double a,
                          const TimeGrid& grid) {
  if (!(a > 0.0)) throw ValidationError("log utility needs a > 0");
  check_grid(m, d, grid);
  const double T = grid.end();
  const std::size_t n = grid.size();
  std::vector<double> f(n);
  for (std::size_t k = 0; k < n; ++k) f[k] = 1.0 / (a * d(T - grid.node(k)));
  std::vector<double> varphi = tail_integrals(f, grid.step());
  for (double& v : varphi) v += 1.0;

  const std::vector<double> dv = derivative(varphi, grid.step());
  std::vector<double> res(n);
  for (std::size_t k = 0; k < n; ++k) res[k] = dv[k] + f[k];
  return LogCoefficients{grid, a, on_grid(grid, std::move(varphi)), sup_abs(res)};
}

ExpCoefficients solve_exponential(const MarketModel& m, const DiscountFunction& d, double a,
                                  double gamma, const TimeGrid& grid) {
  if (!(a > 0.0)) throw ValidationError("exponential utility needs a > 0");
  if (!(gamma > 0.0)) throw ValidationError("exponential utility needs gamma > 0");
  check_grid(m, d, grid);
  const double T = grid.end();
  const double h = grid.step();
  const std::size_t n = grid.size();

  std::vector<double> growth(n), r0(n), R(n), logw(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = grid.node(k);
    growth[k] = m.growth_factor(t, T);
    r0[k] = m.riskless_rate(t);
    R[k] = m.risk_premium_quadratic(t);
    logw[k] = std::log(a * d(T - t));
  }
  const std::vector<double> denom = tail_integrals(growth, h);
  std::vector<double> phi(n);
  for (std::size_t k = 0; k < n; ++k) phi[k] = growth[k] / (1.0 + denom[k]);

  const std::vector<double> Phi = tail_integrals(phi, h);
  std::vector<double> src(n), w(n);
  for (std::size_t k = 0; k < n; ++k) {
    src[k] = phi[k] * logw[k] / gamma + R[k] / (2.0 * gamma) - r0[k] / gamma;
    w[k] = std::exp(Phi[k]) * src[k];
  }
  const std::vector<double> W = tail_integrals(w, h);
  std::vector<double> psi(n);
  for (std::size_t k = 0; k < n; ++k) psi[k] = std::exp(-Phi[k]) * W[k];
  phi[n - 1] = 1.0;
  psi[n - 1] = 0.0;

  const std::vector<double> dphi = derivative(phi, h);
  const std::vector<double> dpsi = derivative(psi, h);
  std::vector<double> res(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double r1 = dphi[k] + r0[k] * phi[k] - phi[k] * phi[k];
    const double r2 = dpsi[k] - phi[k] * psi[k] + src[k];
    res[k] = std::max(std::abs(r1), std::abs(r2));
  }
  return ExpCoefficients{grid, a, gamma, on_grid(grid, std::move(phi)), on_grid(grid, std::move(psi)),
                         sup_abs(res)};
}

}  // namespace mertoneq
