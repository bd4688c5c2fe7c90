#include "mertoneq/pde.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "mertoneq/closedform.hpp"
#include "mertoneq/errors.hpp"

namespace mertoneq {

namespace {

struct Layer {
  double t;
  double r0;
  double R;
  double lam;
};

struct Local {
  double F;
  double dtheta;
  double dD1;
  double dD2;
  double nu;
  double drift;
};

class Scheme {
 public:
  Scheme(const Utility& u, SpatialCoordinate coord, double z0, double z1, std::size_t M)
      : u_(u), h_((z1 - z0) / static_cast<double>(M)), z_(M + 1), x_(M + 1), a1_(M + 1) {
    b_ = coord == SpatialCoordinate::log_wealth ? -1.0 : 0.0;
    for (std::size_t j = 0; j <= M; ++j) {
      z_[j] = j == M ? z1 : z0 + static_cast<double>(j) * h_;
      x_[j] = coord == SpatialCoordinate::log_wealth ? std::exp(z_[j]) : z_[j];
      a1_[j] = coord == SpatialCoordinate::log_wealth ? 1.0 / x_[j] : 1.0;
    }
  }

  double h() const { return h_; }
  const std::vector<double>& z() const { return z_; }
  const std::vector<double>& x() const { return x_; }
  double a1(std::size_t j) const { return a1_[j]; }

  double d1(const std::vector<double>& th, std::size_t j) const {
    return (th[j + 1] - th[j - 1]) / (2.0 * h_);
  }

  Local eval(const Layer& L, const std::vector<double>& th, std::size_t j) const {
    const double D1 = d1(th, j);
    const double D2 = (th[j + 1] - 2.0 * th[j] + th[j - 1]) / (h_ * h_);
    const double theta = th[j];
    const double y = L.lam * theta;
    const double c = u_.inverse_marginal(y);
    const double cp = u_.inverse_marginal_slope(y);
    const double adv = (L.r0 * x_[j] - c) * a1_[j];
    const double nu = 0.5 * L.R * theta * theta / (D1 * D1);
    Local out{};
    out.F = adv * D1 + (L.r0 - L.R) * theta + nu * (D2 + b_ * D1);
    out.dtheta = -cp * L.lam * a1_[j] * D1 + (L.r0 - L.R) + L.R * theta * (D2 + b_ * D1) / (D1 * D1);
    out.dD1 = adv + nu * (-b_ - 2.0 * D2 / D1);
    out.dD2 = nu;
    out.nu = nu;
    out.drift = adv + nu * b_;
    return out;
  }

 private:
  const Utility& u_;
  double h_;
  double b_;
  std::vector<double> z_, x_, a1_;
};

// In-place Thomas solve; sub[0] and sup[n-1] unused.
void thomas(std::vector<double>& sub, std::vector<double>& diag, std::vector<double>& sup,
            std::vector<double>& rhs) {
  const std::size_t n = diag.size();
  for (std::size_t i = 1; i < n; ++i) {
    const double w = sub[i] / diag[i - 1];
    diag[i] -= w * sup[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  rhs[n - 1] /= diag[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - sup[i] * rhs[i + 1]) / diag[i];
}

std::function<double(double, double)> closed_form_theta(const MarketModel& m,
                                                        const DiscountFunction& d,
                                                        const Utility& u, const TimeGrid& grid) {
  switch (u.kind()) {
    case Utility::Kind::power: {
      auto c = std::make_shared<PowerCoefficients>(solve_power(m, d, u.a(), u.gamma(), grid));
      return [c](double t, double x) { return c->a * c->Pi(t) * std::pow(x, c->gamma - 1.0); };
    }
    case Utility::Kind::log: {
      auto c = std::make_shared<LogCoefficients>(solve_log(m, d, u.a(), grid));
      return [c](double t, double x) { return c->varphi(t) * c->a / x; };
    }
    case Utility::Kind::exponential: {
      auto c = std::make_shared<ExpCoefficients>(solve_exponential(m, d, u.a(), u.gamma(), grid));
      return [c](double t, double x) {
        return c->a * std::exp(-c->gamma * (c->phi(t) * x + c->psi(t)));
      };
    }
  }
  return {};
}

std::string fmt_point(double t, double x) {
  return "t=" + std::to_string(t) + ", x=" + std::to_string(x);
}

}  // namespace

SpatialDomain default_domain(const Utility& u, double x0) {
  if (u.kind() == Utility::Kind::exponential) return {x0 - 5.0 / u.gamma(), x0 + 5.0 / u.gamma()};
  if (!(x0 > 0.0)) throw ValidationError("initial wealth must be > 0 for power/log utility");
  return {0.05 * x0, 20.0 * x0};
}

ThetaSurface solve_theta(const MarketModel& m, const DiscountFunction& d, const Utility& u,
                         const TimeGrid& grid, const PdeSettings& s) {
  const double T = m.horizon();
  if (grid.start() != 0.0 || std::abs(grid.end() - T) > 1e-12 * (1.0 + T)) {
    throw ValidationError("PDE time grid must span [0, T] of the market");
  }
  if (s.space_steps < 50) throw ValidationError("PDE needs at least 50 spatial steps");
  if (!(s.domain.x_max > s.domain.x_min)) throw ValidationError("PDE domain needs x_max > x_min");
  if (!(s.time_weight >= 0.5 && s.time_weight <= 1.0)) {
    throw ValidationError("PDE time weight must lie in [0.5, 1]");
  }
  const SpatialCoordinate coord =
      s.coordinate.value_or(u.positive_domain() ? SpatialCoordinate::log_wealth
                                                : SpatialCoordinate::wealth);
  if ((coord == SpatialCoordinate::log_wealth || u.positive_domain()) && !(s.domain.x_min > 0.0)) {
    throw ValidationError("PDE domain must lie in x > 0 for this utility/coordinate");
  }

  const std::size_t M = s.space_steps;
  const std::size_t n = grid.steps();
  const double dt = grid.step();
  const double w = s.time_weight;
  const double z0 = coord == SpatialCoordinate::log_wealth ? std::log(s.domain.x_min) : s.domain.x_min;
  const double z1 = coord == SpatialCoordinate::log_wealth ? std::log(s.domain.x_max) : s.domain.x_max;
  const Scheme scheme(u, coord, z0, z1, M);
  const auto& xs = scheme.x();

  const bool dirichlet = s.boundary != BoundaryMode::extrapolate;
  std::function<double(double, double)> edge;
  if (dirichlet) edge = closed_form_theta(m, d, u, grid);

  PdeDiagnostics diag;
  diag.boundary = dirichlet ? "closed-form Dirichlet" : "theta_zz = 0 extrapolation";
  diag.newton_iterations.assign(n + 1, 0);
  diag.step_residual.assign(n + 1, 0.0);

  std::vector<double> values((n + 1) * (M + 1));
  std::vector<double> old(M + 1), cur(M + 1), trial(M + 1);
  for (std::size_t j = 0; j <= M; ++j) old[j] = u.h_x(xs[j]);
  std::copy(old.begin(), old.end(), values.begin() + static_cast<std::ptrdiff_t>(n * (M + 1)));

  const double orientation = scheme.d1(old, M / 2) < 0.0 ? -1.0 : 1.0;
  auto layer_at = [&](double t) {
    return Layer{t, m.riskless_rate(t), m.risk_premium_quadratic(t), d(T - t)};
  };
  auto set_edges = [&](std::vector<double>& th, double t) {
    if (dirichlet) {
      th[0] = edge(t, xs[0]);
      th[M] = edge(t, xs[M]);
    } else {
      th[0] = 2.0 * th[1] - th[2];
      th[M] = 2.0 * th[M - 1] - th[M - 2];
    }
  };
  auto admissible = [&](const std::vector<double>& th) {
    for (std::size_t j = 0; j <= M; ++j) {
      if (!(th[j] > 0.0) || !std::isfinite(th[j])) return false;
    }
    for (std::size_t j = 1; j < M; ++j) {
      if (!(orientation * scheme.d1(th, j) * scheme.a1(j) >= 1e-12)) return false;
    }
    return true;
  };

  std::vector<double> Fold(M + 1), G(M - 1), sub(M - 1), dia(M - 1), sup(M - 1);
  std::vector<Local> loc(M + 1);

  // Fills G and returns the scaled max residual |G_j| / (dt (1 + |theta_j|)).
  auto residual = [&](const Layer& L, const std::vector<double>& th, bool with_jacobian) {
    double worst = 0.0;
    for (std::size_t j = 1; j < M; ++j) {
      loc[j] = scheme.eval(L, th, j);
      const double g = th[j] - old[j] - dt * (w * loc[j].F + (1.0 - w) * Fold[j]);
      G[j - 1] = g;
      worst = std::max(worst, std::abs(g) / (dt * (1.0 + std::abs(th[j]))));
    }
    if (with_jacobian) {
      const double h = scheme.h();
      for (std::size_t j = 1; j < M; ++j) {
        const Local& q = loc[j];
        sub[j - 1] = -dt * w * (-q.dD1 / (2.0 * h) + q.dD2 / (h * h));
        dia[j - 1] = 1.0 - dt * w * (q.dtheta - 2.0 * q.dD2 / (h * h));
        sup[j - 1] = -dt * w * (q.dD1 / (2.0 * h) + q.dD2 / (h * h));
      }
      if (!dirichlet) {
        // theta_0 = 2 theta_1 - theta_2 and theta_M = 2 theta_{M-1} - theta_{M-2}
        dia[0] += 2.0 * sub[0];
        sup[0] -= sub[0];
        dia[M - 2] += 2.0 * sup[M - 2];
        sub[M - 2] -= sup[M - 2];
      }
    }
    return worst;
  };

  std::size_t warned_diffusion = 0;
  for (std::size_t k = n; k-- > 0;) {
    const double t_new = grid.node(k);
    const Layer L_old = layer_at(grid.node(k + 1));
    const Layer L_new = layer_at(t_new);

    for (std::size_t j = 1; j < M; ++j) {
      if (!(orientation * scheme.d1(old, j) * scheme.a1(j) >= 1e-12)) {
        throw DegeneracyError("theta_x degenerates at " + fmt_point(grid.node(k + 1), xs[j]),
                              grid.node(k + 1), xs[j]);
      }
      Fold[j] = scheme.eval(L_old, old, j).F;
    }

    cur = old;
    set_edges(cur, t_new);
    if (!admissible(cur)) {
      throw DegeneracyError("initial Newton iterate inadmissible near t=" + std::to_string(t_new),
                            t_new, xs[M / 2]);
    }
    double err = residual(L_new, cur, true);
    int it = 0;
    std::vector<std::string> trace;
    while (err > s.newton_tol) {
      if (it == s.max_newton) {
        trace.push_back("step t=" + std::to_string(t_new) + ": no convergence after " +
                        std::to_string(it) + " Newton iterations, residual " + std::to_string(err));
        throw SolverError("Newton iteration failed to converge at t=" + std::to_string(t_new), trace);
      }
      std::vector<double> rhs(G.size());
      for (std::size_t i = 0; i < G.size(); ++i) rhs[i] = -G[i];
      auto a = sub, b = dia, c = sup;
      thomas(a, b, c, rhs);

      double alpha = 1.0;
      double next = 0.0;
      bool accepted = false;
      for (int halving = 0; halving < 40; ++halving) {
        trial = cur;
        for (std::size_t j = 1; j < M; ++j) trial[j] += alpha * rhs[j - 1];
        set_edges(trial, t_new);
        if (admissible(trial)) {
          next = residual(L_new, trial, false);
          if (next < (1.0 - 1e-4 * alpha) * err || next <= s.newton_tol) {
            accepted = true;
            break;
          }
        }
        alpha *= 0.5;
      }
      ++it;
      trace.push_back("iteration " + std::to_string(it) + ": residual " + std::to_string(next) +
                      ", damping " + std::to_string(alpha));
      if (!accepted) {
        throw SolverError("damped Newton step could not reduce the residual at t=" +
                              std::to_string(t_new),
                          trace);
      }
      cur = trial;
      err = residual(L_new, cur, true);
    }

    double step_res = 0.0;
    for (std::size_t j = 1; j < M; ++j) {
      step_res = std::max(step_res, std::abs(G[j - 1]) / dt);
      const double dn = loc[j].nu * dt / (scheme.h() * scheme.h());
      diag.max_diffusion_number = std::max(diag.max_diffusion_number, dn);
      if (loc[j].nu > 0.0) {
        diag.max_cell_peclet =
            std::max(diag.max_cell_peclet, std::abs(loc[j].drift) * scheme.h() / loc[j].nu);
      }
      if (dn > s.diffusion_warning) ++warned_diffusion;
    }
    diag.newton_iterations[k] = it;
    diag.step_residual[k] = step_res;
    std::copy(cur.begin(), cur.end(), values.begin() + static_cast<std::ptrdiff_t>(k * (M + 1)));
    std::swap(old, cur);
  }

  if (warned_diffusion > 0) {
    diag.warnings.push_back("diffusion number nu dt / dz^2 exceeded " +
                            std::to_string(s.diffusion_warning) + " at " +
                            std::to_string(warned_diffusion) + " node-steps (max " +
                            std::to_string(diag.max_diffusion_number) + ")");
  }
  if (diag.max_cell_peclet > 2.0) {
    diag.warnings.push_back("cell Peclet number reached " + std::to_string(diag.max_cell_peclet) +
                            "; centred advection may oscillate");
  }
  return ThetaSurface(grid, coord, scheme.z(), std::move(values), std::move(diag));
}

}  // namespace mertoneq
