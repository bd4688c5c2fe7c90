#include "mertoneq/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <string>
#include <thread>

#include "mertoneq/errors.hpp"
#include "mertoneq/rng.hpp"

namespace mertoneq {

namespace {

struct StepData {
  double t;
  double dt;
  double sqrt_dt;
  double growth;
  Eigen::VectorXd excess;
  Eigen::MatrixXd sigma;
  std::optional<AffineControls> affine;
  // sigma^T u0 and sigma^T u1 for the affine fast path.
  Eigen::VectorXd s0;
  Eigen::VectorXd s1;
  double r0;
  double r1;
};

std::vector<StepData> prepare_steps(const Policy& p, const MarketModel& m, const TimeGrid& grid) {
  const std::size_t n = grid.steps();
  std::vector<StepData> steps(n);
  bool all_affine = true;
  for (std::size_t k = 0; k < n; ++k) {
    StepData& s = steps[k];
    s.t = grid.node(k);
    const double next = grid.node(k + 1);
    s.dt = next - s.t;
    s.sqrt_dt = std::sqrt(s.dt);
    s.growth = m.growth_factor(s.t, next);
    s.excess = m.excess_return(s.t);
    s.sigma = m.volatility(s.t);
    if (all_affine) {
      s.affine = p.affine_form(s.t);
      all_affine = s.affine.has_value();
    }
  }
  for (auto& s : steps) {
    if (!all_affine) {
      s.affine.reset();
      continue;
    }
    s.s0 = s.sigma.transpose() * s.affine->u0;
    s.s1 = s.sigma.transpose() * s.affine->u1;
    s.r0 = s.excess.dot(s.affine->u0);
    s.r1 = s.excess.dot(s.affine->u1);
  }
  return steps;
}

struct Scratch {
  std::vector<double> wealth;
  std::vector<double> consumption;
  std::vector<double> investment;
  std::vector<double> increments;
  std::vector<double> normals;
  Eigen::VectorXd u;
  Eigen::VectorXd z;
};

void check_inputs(const Policy& p, const MarketModel& m, const TimeGrid& grid, double x0,
                  const SimulationSettings& s) {
  if (s.paths < 1) throw ValidationError("simulation needs at least one path");
  if (s.paths > std::numeric_limits<std::uint32_t>::max())
    throw ValidationError("too many paths for the generator counter");
  if (s.substeps < 1) throw ValidationError("substeps must be at least 1");
  if (grid.steps() * s.substeps > std::numeric_limits<std::uint32_t>::max())
    throw ValidationError("too many time steps for the generator counter");
  if (p.dimension() != m.dimension())
    throw ValidationError("policy dimension " + std::to_string(p.dimension()) +
                          " does not match market dimension " + std::to_string(m.dimension()));
  if (!std::isfinite(x0)) throw ValidationError("initial wealth must be finite");
  if (grid.start() < -1e-12 || grid.end() > m.horizon() * (1 + 1e-12) + 1e-12)
    throw ValidationError("simulation grid must lie inside [0, T]");
  if (s.wealth_floor && x0 <= *s.wealth_floor)
    throw ValidationError("initial wealth is not above the wealth floor");
}

}  // namespace

void for_each_path(const Policy& p, const MarketModel& m, const TimeGrid& grid, double x0,
                   const SimulationSettings& s, const PathVisitor& visit) {
  check_inputs(p, m, grid, x0, s);
  const std::vector<StepData> steps = prepare_steps(p, m, grid);
  const std::vector<double> time = grid.nodes();
  const std::size_t n = grid.steps();
  const std::size_t d = m.dimension();
  const NormalStream normals(s.seed, s.stream);
  const std::size_t sub = s.substeps;
  const double sub_scale = 1.0 / std::sqrt(static_cast<double>(sub));
  const double floor = s.wealth_floor.value_or(-std::numeric_limits<double>::infinity());

  auto run_path = [&](std::size_t id, Scratch& w, unsigned worker) {
    w.wealth[0] = x0;
    if (sub == 1) {
      normals.fill(static_cast<std::uint32_t>(id), 0, w.increments);
    } else {
      normals.fill(static_cast<std::uint32_t>(id), 0, w.normals);
      for (std::size_t k = 0; k < n; ++k)
        for (std::size_t j = 0; j < d; ++j) {
          double acc = 0.0;
          for (std::size_t q = 0; q < sub; ++q) acc += w.normals[(k * sub + q) * d + j];
          w.increments[k * d + j] = acc;
        }
    }
    std::size_t done = 0;
    bool flagged = false;
    for (std::size_t k = 0; k < n; ++k) {
      const StepData& st = steps[k];
      const double x = w.wealth[k];
      double c;
      double drift;
      double noise = 0.0;
      std::span<double> z(w.increments.data() + k * d, d);
      for (auto& v : z) v *= st.sqrt_dt * sub_scale;
      if (st.affine) {
        const AffineControls& a = *st.affine;
        c = a.c0 + a.c1 * x;
        drift = st.r0 + st.r1 * x - c;
        for (std::size_t i = 0; i < d; ++i) {
          w.investment[k * d + i] = a.u0[i] + a.u1[i] * x;
          noise += (st.s0[i] + st.s1[i] * x) * z[i];
        }
      } else {
        try {
          c = p.consumption(st.t, x);
          p.investment_into(st.t, x, std::span<double>(w.u.data(), d));
        } catch (const DomainError&) {
          flagged = true;
          break;
        }
        drift = st.excess.dot(w.u) - c;
        for (std::size_t i = 0; i < d; ++i) w.investment[k * d + i] = w.u[i];
        for (std::size_t j = 0; j < d; ++j) w.z[j] = z[j];
        noise = (st.sigma.transpose() * w.u).dot(w.z);
      }
      w.consumption[k] = c;
      const double next = st.growth * x + drift * st.dt + noise;
      if (!std::isfinite(c) || !std::isfinite(next) || next <= floor) {
        flagged = true;
        if (std::isfinite(next)) {
          w.wealth[k + 1] = next;
          done = k + 1;
        }
        break;
      }
      w.wealth[k + 1] = next;
      done = k + 1;
    }
    const PathView view{id,
                        std::span<const double>(time.data(), done + 1),
                        std::span<const double>(w.wealth.data(), done + 1),
                        std::span<const double>(w.consumption.data(), done),
                        std::span<const double>(w.investment.data(), done * d),
                        std::span<const double>(w.increments.data(), done * d),
                        d,
                        done,
                        flagged};
    visit(view, worker);
  };

  const unsigned workers =
      static_cast<unsigned>(std::clamp<std::size_t>(s.workers == 0 ? 1 : s.workers, 1, s.paths));
  auto run_block = [&](unsigned worker) {
    Scratch w;
    w.wealth.resize(n + 1);
    w.consumption.resize(n);
    w.investment.resize(n * d);
    w.increments.resize(n * d);
    if (sub > 1) w.normals.resize(n * sub * d);
    w.u.resize(static_cast<Eigen::Index>(d));
    w.z.resize(static_cast<Eigen::Index>(d));
    const std::size_t begin = s.paths * worker / workers;
    const std::size_t end = s.paths * (worker + 1) / workers;
    for (std::size_t id = begin; id < end; ++id) run_path(id, w, worker);
  };

  if (workers == 1) {
    run_block(0);
    return;
  }
  std::vector<std::thread> threads;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  threads.reserve(workers);
  for (unsigned i = 0; i < workers; ++i) {
    threads.emplace_back([&, i] {
      try {
        run_block(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::vector<WealthPath> simulate_paths(const Policy& p, const MarketModel& m, const TimeGrid& grid,
                                       double x0, const SimulationSettings& s) {
  std::vector<WealthPath> out(s.paths);
  for_each_path(p, m, grid, x0, s, [&](const PathView& v, unsigned) {
    WealthPath& w = out[v.id];
    w.id = v.id;
    w.time.assign(v.time.begin(), v.time.end());
    w.wealth.assign(v.wealth.begin(), v.wealth.end());
    w.consumption.assign(v.consumption.begin(), v.consumption.end());
    w.investment.assign(v.investment.begin(), v.investment.end());
    w.increments.assign(v.increments.begin(), v.increments.end());
    w.flagged = v.flagged;
  });
  return out;
}

std::vector<double> discount_weights(const DiscountFunction& d, const TimeGrid& grid) {
  const double t = grid.start();
  std::vector<double> w(grid.steps());
  double left = d(0.0);
  for (std::size_t k = 0; k < grid.steps(); ++k) {
    const double a = grid.node(k);
    const double b = grid.node(k + 1);
    const double right = d(b - t);
    w[k] = 0.5 * (left + right) * (b - a);
    left = right;
  }
  return w;
}

namespace {

SimulationSettings with_default_floor(const Utility& u, SimulationSettings s) {
  if (u.positive_domain() && !s.wealth_floor) s.wealth_floor = 1e-8;
  return s;
}

}  // namespace

std::vector<std::optional<double>> path_objectives(const Policy& p, const MarketModel& m,
                                                   const DiscountFunction& d, const Utility& u,
                                                   const TimeGrid& grid, double x,
                                                   const SimulationSettings& s) {
  if (std::abs(grid.end() - d.horizon()) > 1e-9 * (1.0 + d.horizon()))
    throw ValidationError("objective grid must end at the horizon");
  const std::vector<double> weights = discount_weights(d, grid);
  const double terminal_weight = d(grid.end() - grid.start());
  std::vector<std::optional<double>> values(s.paths);
  for_each_path(p, m, grid, x, with_default_floor(u, s), [&](const PathView& v, unsigned) {
    if (v.flagged) return;
    double running = 0.0;
    for (std::size_t k = 0; k < v.completed_steps; ++k) {
      const double c = v.consumption[k];
      if (!u.consumption_admissible(c)) return;
      running += weights[k] * u.phi(c);
    }
    const double xt = v.wealth.back();
    if (!u.wealth_admissible(xt)) return;
    const double j = running + terminal_weight * u.h(xt);
    if (std::isfinite(j)) values[v.id] = j;
  });
  return values;
}

SampleSummary summarize(std::span<const std::optional<double>> values) {
  SampleSummary out{std::numeric_limits<double>::quiet_NaN(), 0.0, 0, 0};
  double sum = 0.0;
  for (const auto& v : values) {
    if (v) {
      sum += *v;
      ++out.used;
    } else {
      ++out.missing;
    }
  }
  if (out.used == 0) return out;
  out.mean = sum / static_cast<double>(out.used);
  if (out.used < 2) return out;
  double ss = 0.0;
  for (const auto& v : values)
    if (v) ss += (*v - out.mean) * (*v - out.mean);
  const double n = static_cast<double>(out.used);
  out.std_error = std::sqrt(ss / (n - 1.0) / n);
  return out;
}

ObjectiveEstimate estimate_objective(const Policy& p, const MarketModel& m, const DiscountFunction& d,
                                     const Utility& u, const TimeGrid& grid, double x,
                                     const SimulationSettings& s) {
  const auto values = path_objectives(p, m, d, u, grid, x, s);
  const SampleSummary sum = summarize(values);
  if (sum.used == 0)
    throw SolverError("every simulated path was flagged",
                      {"flagged paths: " + std::to_string(sum.missing)});
  return {grid.start(), x, sum.mean, sum.std_error, sum.used, sum.missing};
}

DifferenceEstimate estimate_difference(const Policy& a, const Policy& b, const MarketModel& m,
                                       const DiscountFunction& d, const Utility& u,
                                       const TimeGrid& grid, double x, const SimulationSettings& s,
                                       bool common_numbers) {
  SimulationSettings sb = s;
  if (!common_numbers) sb.stream = s.stream + 1;
  const auto ja = path_objectives(a, m, d, u, grid, x, s);
  const auto jb = path_objectives(b, m, d, u, grid, x, sb);
  std::vector<std::optional<double>> diff(s.paths);
  for (std::size_t i = 0; i < s.paths; ++i)
    if (ja[i] && jb[i]) diff[i] = *ja[i] - *jb[i];
  const SampleSummary sum = summarize(diff);
  if (sum.used == 0)
    throw SolverError("every simulated path was flagged",
                      {"flagged paths: " + std::to_string(sum.missing)});
  return {sum.mean, sum.std_error, sum.used, sum.missing};
}

}  // namespace mertoneq
