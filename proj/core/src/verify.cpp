#include "mertoneq/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mertoneq/errors.hpp"
#include "mertoneq/grid.hpp"

namespace mertoneq {

namespace {

bool at_horizon(double t, double T) { return t >= T - 1e-12 * (1.0 + T); }

SimulationSettings floored(const Utility& u, SimulationSettings s) {
  if (u.positive_domain() && !s.wealth_floor) s.wealth_floor = 1e-8;
  return s;
}

void check_time(double t, double T) {
  if (!(t >= 0.0) || t > T * (1 + 1e-12)) throw ValidationError("time must lie in [0, T]");
}

double nan() { return std::numeric_limits<double>::quiet_NaN(); }

struct Moments {
  double mean;
  double se;
  std::size_t n;
};

Moments moments(std::span<const double> v) {
  const double n = static_cast<double>(v.size());
  if (v.empty()) return {nan(), nan(), 0};
  double s = 0.0;
  for (double x : v) s += x;
  const double mean = s / n;
  if (v.size() < 2) return {mean, 0.0, v.size()};
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1.0) / n), v.size()};
}

}  // namespace

AdjointEstimate estimate_p_diagonal(const Policy& policy, const MarketModel& m, const DiscountFunction& d,
                                    const Utility& u, double t, double x, std::size_t steps,
                                    const SimulationSettings& settings, double flagged_limit,
                                    bool extrapolate) {
  const double T = m.horizon();
  check_time(t, T);
  if (!u.wealth_admissible(x)) throw DomainError("state outside the utility's wealth domain");
  if (at_horizon(t, T)) return {T, x, d(0.0) * u.h_x(x), 0.0, std::nullopt, AdjointMethod::nested_mc, 0, 0, true};
  if (extrapolate && (steps < 2 || steps % 2 != 0))
    throw ValidationError("extrapolated adjoint needs an even number of steps");
  const double lam = d(T - t);
  const double growth = m.growth_factor(t, T);
  const SimulationSettings fine = floored(u, settings);

  auto terminal_values = [&](std::size_t n, const SimulationSettings& s) {
    std::vector<std::optional<double>> values(s.paths);
    for_each_path(policy, m, TimeGrid(t, T, n), x, s, [&](const PathView& v, unsigned) {
      if (v.flagged) return;
      const double xt = v.wealth.back();
      if (u.wealth_admissible(xt)) values[v.id] = lam * u.h_x(xt) * growth;
    });
    return values;
  };

  std::vector<std::optional<double>> values = terminal_values(steps, fine);
  if (extrapolate) {
    SimulationSettings coarse = fine;
    coarse.substeps = 2 * fine.substeps;
    const auto half = terminal_values(steps / 2, coarse);
    for (std::size_t i = 0; i < values.size(); ++i)
      values[i] = values[i] && half[i] ? std::optional<double>(2.0 * *values[i] - *half[i]) : std::nullopt;
  }
  const SampleSummary s = summarize(values);
  AdjointEstimate out{t, x, s.mean, s.std_error, std::nullopt, AdjointMethod::nested_mc, s.used, s.missing, true};
  out.conclusive = s.used >= 2 && static_cast<double>(s.missing) <=
                                      flagged_limit * static_cast<double>(settings.paths);
  return out;
}

AdjointEstimate theta_adjoint(const Policy& policy, const MarketModel& m, const DiscountFunction& d,
                              double t, double x) {
  check_time(t, m.horizon());
  const auto th = policy.theta(t, x);
  if (!th) throw ValidationError("policy '" + policy.describe() + "' does not expose theta");
  const double lam = d(m.horizon() - t);
  const Eigen::VectorXd q = lam * th->dx * (m.volatility(t).transpose() * policy.investment(t, x));
  return {t, x, lam * th->value, 0.0, q, AdjointMethod::theta, 0, 0, true};
}

ResidualPair residual_conditions(const Policy& policy, const AdjointEstimate& adjoint,
                                 std::optional<double> theta_x, const MarketModel& m,
                                 const Utility& u, const DiscountFunction& d) {
  const double t = adjoint.t;
  const double x = adjoint.x;
  const double c = policy.consumption(t, x);
  ResidualPair out{std::abs(u.phi_c(c) - adjoint.p), std::nullopt};
  if (theta_x) {
    const Eigen::MatrixXd sigma = m.volatility(t);
    const Eigen::VectorXd sq = d(m.horizon() - t) * *theta_x * (sigma * (sigma.transpose() * policy.investment(t, x)));
    out.investment = (adjoint.p * m.excess_return(t) + sq).lpNorm<Eigen::Infinity>();
  }
  return out;
}

std::vector<Direction> unit_directions(std::size_t d, double bound) {
  if (!(bound >= 0.0) || !std::isfinite(bound)) throw ValidationError("direction bound must be finite and >= 0");
  std::vector<Direction> out;
  out.reserve(2 * (d + 1));
  for (std::size_t i = 0; i <= d; ++i)
    for (double sign : {1.0, -1.0}) {
      Direction v{0.0, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d))};
      if (i == 0)
        v.consumption = sign * bound;
      else
        v.investment[static_cast<Eigen::Index>(i - 1)] = sign * bound;
      out.push_back(std::move(v));
    }
  return out;
}

std::vector<double> richardson_weights(std::span<const double> eps) {
  const std::size_t n = eps.size();
  if (n == 0) throw ValidationError("at least one epsilon is required");
  if (n == 1) return {1.0};
  double mean = 0.0;
  for (double e : eps) mean += e;
  mean /= static_cast<double>(n);
  double sxx = 0.0;
  for (double e : eps) sxx += (e - mean) * (e - mean);
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = 1.0 / static_cast<double>(n) - mean * (eps[i] - mean) / sxx;
  return w;
}

std::vector<SpikeResult> spike_test(const Policy& policy, const MarketModel& m, const DiscountFunction& d,
                                    const Utility& u, double t, double x,
                                    std::span<const Direction> directions,
                                    std::span<const double> epsilons, std::size_t steps,
                                    const SimulationSettings& settings) {
  const double T = m.horizon();
  check_time(t, T);
  if (at_horizon(t, T)) throw ValidationError("spike test needs t < T");
  if (epsilons.empty()) throw ValidationError("spike test needs at least one epsilon");
  const std::size_t dim = m.dimension();
  for (const auto& v : directions)
    if (static_cast<std::size_t>(v.investment.size()) != dim || !std::isfinite(v.consumption) ||
        !v.investment.allFinite())
      throw ValidationError("spike direction must be finite with investment of dimension " + std::to_string(dim));

  const TimeGrid grid(t, T, steps);
  const double span = T - t;
  std::vector<std::size_t> count(epsilons.size());
  for (std::size_t j = 0; j < epsilons.size(); ++j) {
    const double e = epsilons[j];
    if (!(e > 0.0)) throw ValidationError("epsilons must be positive");
    if (j > 0 && !(e < epsilons[j - 1])) throw ValidationError("epsilons must be strictly decreasing");
    if (e > span * (1 + 1e-12)) throw ValidationError("epsilon exceeds T - t");
    const double k = e / span * static_cast<double>(steps);
    const double kr = std::round(k);
    if (kr < 1.0 || std::abs(k - kr) > 1e-6 * std::max(1.0, k))
      throw ValidationError("epsilon " + std::to_string(e) + " is not a multiple of the spike grid step");
    count[j] = static_cast<std::size_t>(kr);
  }
  const std::size_t horizon_steps = count.front();

  // Per-step data for the linear perturbation recursion.
  std::vector<double> growth(horizon_steps), tail(horizon_steps + 1);
  std::vector<std::vector<double>> drift(directions.size(), std::vector<double>(horizon_steps));
  std::vector<std::vector<double>> loading(directions.size(), std::vector<double>(horizon_steps * dim));
  const std::vector<double> weights = discount_weights(d, grid);
  for (std::size_t k = 0; k <= horizon_steps; ++k) tail[k] = m.growth_factor(grid.node(k), T);
  for (std::size_t k = 0; k < horizon_steps; ++k) {
    const double tk = grid.node(k);
    growth[k] = m.growth_factor(tk, grid.node(k + 1));
    const Eigen::VectorXd r = m.excess_return(tk);
    const Eigen::MatrixXd sigma = m.volatility(tk);
    for (std::size_t i = 0; i < directions.size(); ++i) {
      const auto& v = directions[i];
      drift[i][k] = (v.investment.dot(r) - v.consumption) * grid.step();
      const Eigen::VectorXd b = sigma.transpose() * v.investment;
      for (std::size_t j = 0; j < dim; ++j) loading[i][k * dim + j] = b[static_cast<Eigen::Index>(j)];
    }
  }
  const double terminal = d(span);

  const std::size_t n = settings.paths;
  const std::size_t ne = epsilons.size();
  // values[i][j][path]
  std::vector<std::vector<std::vector<std::optional<double>>>> values(
      directions.size(), std::vector<std::vector<std::optional<double>>>(ne, std::vector<std::optional<double>>(n)));

  for_each_path(policy, m, grid, x, floored(u, settings), [&](const PathView& p, unsigned) {
    if (p.flagged) return;
    const double xt = p.wealth.back();
    const double ht = u.h(xt);
    for (std::size_t i = 0; i < directions.size(); ++i) {
      const double vc = directions[i].consumption;
      double dx = 0.0;
      double running = 0.0;
      bool ok = true;
      std::size_t j = ne;
      for (std::size_t k = 0; k < horizon_steps && ok; ++k) {
        if (vc != 0.0) {
          const double c = p.consumption[k];
          if (!u.consumption_admissible(c + vc)) {
            ok = false;
            break;
          }
          running += weights[k] * (u.phi(c + vc) - u.phi(c));
        }
        double noise = 0.0;
        for (std::size_t q = 0; q < dim; ++q) noise += loading[i][k * dim + q] * p.increments[k * dim + q];
        dx = growth[k] * dx + drift[i][k] + noise;
        while (j > 0 && count[j - 1] == k + 1) {
          --j;
          const double xe = xt + dx * tail[k + 1];
          if (!u.wealth_admissible(xe)) {
            ok = false;
            break;
          }
          values[i][j][p.id] = (running + terminal * (u.h(xe) - ht)) / epsilons[j];
        }
      }
      if (!ok)
        for (std::size_t q = 0; q < ne; ++q) values[i][q][p.id].reset();
    }
  });

  const std::vector<double> w = richardson_weights(epsilons);
  std::vector<SpikeResult> out;
  out.reserve(directions.size());
  for (std::size_t i = 0; i < directions.size(); ++i) {
    SpikeResult r{t, x, i, {}, nan(), nan(), 0, 0};
    std::vector<std::optional<double>> combined(n);
    for (std::size_t id = 0; id < n; ++id) {
      double acc = 0.0;
      bool all = true;
      for (std::size_t j = 0; j < ne && all; ++j) {
        if (!values[i][j][id]) all = false;
        else acc += w[j] * *values[i][j][id];
      }
      if (all) combined[id] = acc;
    }
    for (std::size_t j = 0; j < ne; ++j) {
      std::vector<std::optional<double>> col(n);
      for (std::size_t id = 0; id < n; ++id)
        if (combined[id]) col[id] = values[i][j][id];
      const SampleSummary s = summarize(col);
      r.points.push_back({epsilons[j], s.mean, s.std_error});
    }
    const SampleSummary s = summarize(combined);
    r.limit = s.mean;
    r.limit_stderr = s.std_error;
    r.paths = s.used;
    r.flagged = s.missing;
    out.push_back(std::move(r));
  }
  return out;
}

SecondOrderAdjoint second_order_form(const MarketModel& m, const DiscountFunction& d, const Utility& u,
                                     const Policy& policy, double t, double s, double x,
                                     std::size_t steps, const SimulationSettings& settings) {
  const double T = m.horizon();
  check_time(t, T);
  check_time(s, T);
  if (s < t) throw ValidationError("second-order form needs s >= t");
  const double lam = d(T - t);
  SecondOrderAdjoint out{t, s, x, 0.0, 0.0, {}, std::nullopt, 0, 0};
  if (at_horizon(s, T)) {
    out.P = lam * u.h_xx(x);
  } else {
    const double g2 = std::pow(m.growth_factor(s, T), 2);
    std::vector<std::optional<double>> values(settings.paths);
    for_each_path(policy, m, TimeGrid(s, T, steps), x, floored(u, settings),
                  [&](const PathView& v, unsigned) {
                    if (v.flagged) return;
                    const double xt = v.wealth.back();
                    if (u.wealth_admissible(xt)) values[v.id] = lam * u.h_xx(xt) * g2;
                  });
    const SampleSummary sum = summarize(values);
    out.P = sum.mean;
    out.P_stderr = sum.std_error;
    out.paths = sum.used;
    out.flagged = sum.missing;
  }
  const auto dim = static_cast<Eigen::Index>(m.dimension());
  const Eigen::MatrixXd sigma = m.volatility(s);
  out.A = Eigen::MatrixXd::Zero(dim + 1, dim + 1);
  out.A(0, 0) = d(s - t) * u.phi_cc(policy.consumption(s, x));
  out.A.bottomRightCorner(dim, dim) = sigma * sigma.transpose() * out.P;
  return out;
}

std::vector<double> default_checkpoints(double horizon, std::size_t steps) {
  const TimeGrid g(horizon, steps);
  return {0.0, horizon / 4, horizon / 2, 3 * horizon / 4, g.node(steps - 1)};
}

std::string_view verdict_name(Verdict v) noexcept {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

std::string_view method_name(AdjointMethod m) noexcept {
  return m == AdjointMethod::theta ? "theta" : "nested-mc";
}

EquilibriumReport run_verification(const Policy& policy, const MarketModel& m, const DiscountFunction& d,
                                   const Utility& u, const VerificationSettings& vs) {
  const double T = m.horizon();
  if (vs.steps < 4) throw ValidationError("verification grid needs at least 4 steps");
  if (vs.n_outer < 2 || vs.n_inner < 2 || vs.spike_paths < 2)
    throw ValidationError("verification needs at least 2 outer, inner and spike paths");
  if (!u.wealth_admissible(vs.x0)) throw ValidationError("x0 outside the utility's wealth domain");
  const TimeGrid grid(T, vs.steps);

  EquilibriumReport rep;
  rep.checkpoints = vs.checkpoints.empty() ? default_checkpoints(T, vs.steps) : vs.checkpoints;
  std::vector<std::size_t> index;
  for (double t : rep.checkpoints) {
    const auto k = grid.index_of(t);
    if (!k || *k >= vs.steps)
      throw ValidationError("checkpoint " + std::to_string(t) + " is not a grid node before T");
    index.push_back(*k);
  }
  const std::size_t nc = index.size();
  if (2 + nc * vs.n_outer >= 0x20000000u) throw ValidationError("too many outer paths for the stream layout");
  bool missing_state = false;

  auto sim = [&](std::size_t paths, std::uint32_t stream) {
    SimulationSettings s;
    s.paths = paths;
    s.seed = vs.seed;
    s.stream = stream;
    s.workers = vs.workers;
    return floored(u, s);
  };

  // Outer paths give the checkpoint states.
  std::vector<std::vector<std::optional<double>>> states(nc, std::vector<std::optional<double>>(vs.n_outer));
  for_each_path(policy, m, grid, vs.x0, sim(vs.n_outer, 1), [&](const PathView& v, unsigned) {
    if (v.flagged) return;
    for (std::size_t c = 0; c < nc; ++c) states[c][v.id] = v.wealth[index[c]];
  });
  for (const auto& s : states[0])
    if (!s) ++rep.outer_flagged;

  const auto dirs = unit_directions(m.dimension(), vs.direction_bound);
  bool spike_inconclusive = false;

  for (std::size_t c = 0; c < nc; ++c) {
    const double t = rep.checkpoints[c];
    const double lam = d(T - t);
    std::vector<double> xs;
    for (const auto& s : states[c])
      if (s) xs.push_back(*s);
    if (xs.empty()) {
      rep.notes.push_back("no admissible outer state at t=" + std::to_string(t));
      rep.states.push_back(nan());
      missing_state = true;
      continue;
    }
    std::vector<double> sorted = xs;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<long>(sorted.size() / 2), sorted.end());
    const double x = sorted[sorted.size() / 2];
    rep.states.push_back(x);

    std::optional<ThetaValue> th;
    try {
      th = policy.theta(t, x);
    } catch (const DomainError&) {
    }
    if (th) {
      const AdjointEstimate a = theta_adjoint(policy, m, d, t, x);
      const ResidualPair r = residual_conditions(policy, a, th->dx, m, u, d);
      const bool ok = r.consumption <= vs.residual_floor && r.investment && *r.investment <= vs.residual_floor;
      rep.residuals.push_back({t, x, AdjointMethod::theta, r.consumption, r.investment, 0.0, 0.0, ok});
    }

    // Nested Monte Carlo over the outer states.
    const std::size_t dim = m.dimension();
    const Eigen::MatrixXd sigma = m.volatility(t);
    const Eigen::VectorXd excess = m.excess_return(t);
    // Extrapolation needs an even inner grid; an odd one is refined by a factor 2.
    std::size_t inner_steps = vs.steps - index[c];
    if (vs.extrapolate_nested && inner_steps % 2 != 0) inner_steps *= 2;
    std::vector<double> p_vals, theta_vals, diff_vals, rc_vals;
    std::vector<std::vector<double>> ri_vals(dim);
    bool theta_everywhere = static_cast<bool>(th);
    for (std::size_t i = 0; i < vs.n_outer; ++i) {
      if (!states[c][i]) continue;
      const double xi = *states[c][i];
      const auto stream = static_cast<std::uint32_t>(2 + c * vs.n_outer + i);
      const AdjointEstimate a =
          estimate_p_diagonal(policy, m, d, u, t, xi, inner_steps, sim(vs.n_inner, stream), vs.flagged_limit,
                              vs.extrapolate_nested);
      rep.inner_paths += vs.n_inner;
      rep.inner_flagged += a.flagged;
      if (a.paths == 0) continue;
      p_vals.push_back(a.p);
      rc_vals.push_back(u.phi_c(policy.consumption(t, xi)) - a.p);
      if (theta_everywhere) {
        std::optional<ThetaValue> ti;
        try {
          ti = policy.theta(t, xi);
        } catch (const DomainError&) {
        }
        if (!ti) {
          theta_everywhere = false;
          continue;
        }
        theta_vals.push_back(lam * ti->value);
        diff_vals.push_back(a.p - lam * ti->value);
        const Eigen::VectorXd e =
            a.p * excess + lam * ti->dx * (sigma * (sigma.transpose() * policy.investment(t, xi)));
        for (std::size_t j = 0; j < dim; ++j) ri_vals[j].push_back(e[static_cast<Eigen::Index>(j)]);
      }
    }
    if (!p_vals.empty()) {
      const Moments mc = moments(rc_vals);
      ResidualRow row{t, x, AdjointMethod::nested_mc, std::abs(mc.mean), std::nullopt, mc.se, std::nullopt, false};
      bool ok = row.consumption <= std::max(vs.residual_floor, vs.sigmas * mc.se);
      if (theta_everywhere) {
        double worst = 0.0, worst_se = 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
          const Moments mi = moments(ri_vals[j]);
          if (std::abs(mi.mean) >= worst) {
            worst = std::abs(mi.mean);
            worst_se = mi.se;
          }
          ok = ok && std::abs(mi.mean) <= std::max(vs.residual_floor, vs.sigmas * mi.se);
        }
        row.investment = worst;
        row.stderr_i = worst_se;
        const Moments mp = moments(p_vals), mt = moments(theta_vals), md = moments(diff_vals);
        rep.agreement.push_back({t, mp.mean, mp.se, mt.mean, mt.se, md.mean, md.se,
                                 std::abs(md.mean) <= vs.sigmas * md.se + 1e-12 * std::abs(mt.mean)});
      }
      row.ok = ok;
      rep.residuals.push_back(row);
    }

    // Spike variations at the representative state.
    std::vector<double> eps;
    for (double f : vs.epsilon_fractions) eps.push_back(f * (T - t));
    auto spikes = spike_test(policy, m, d, u, t, x, dirs, eps, vs.spike_steps,
                             sim(vs.spike_paths, 0x40000000u + static_cast<std::uint32_t>(c)));
    for (auto& s : spikes) {
      if (static_cast<double>(s.flagged) > vs.flagged_limit * static_cast<double>(vs.spike_paths))
        spike_inconclusive = true;
      rep.spikes.push_back(std::move(s));
    }

    rep.second_order.push_back(second_order_form(m, d, u, policy, t, t, x, vs.steps - index[c],
                                                 sim(vs.n_inner, 0x20000000u + static_cast<std::uint32_t>(c))));
  }

  const bool outer_bad = static_cast<double>(rep.outer_flagged) > vs.flagged_limit * static_cast<double>(vs.n_outer);
  const bool inner_bad =
      static_cast<double>(rep.inner_flagged) > vs.flagged_limit * static_cast<double>(std::max<std::size_t>(rep.inner_paths, 1));
  if (outer_bad) rep.notes.push_back("outer flagged fraction above limit");
  if (inner_bad) rep.notes.push_back("inner flagged fraction above limit");
  if (spike_inconclusive) rep.notes.push_back("spike flagged fraction above limit");

  bool pass = true;
  for (const auto& r : rep.residuals)
    if (!r.ok) pass = false;
  for (const auto& s : rep.spikes)
    if (!(s.limit <= vs.sigmas * s.limit_stderr)) pass = false;
  if (outer_bad || inner_bad || spike_inconclusive || missing_state)
    rep.verdict = Verdict::inconclusive;
  else
    rep.verdict = pass ? Verdict::pass : Verdict::fail;
  return rep;
}

}  // namespace mertoneq
