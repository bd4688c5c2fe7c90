#include "mertoneq_cli/run_config.hpp"

#include <set>

#include "mertoneq/errors.hpp"

namespace mertoneq::cli {

namespace {

using nlohmann::json;

const json kEmpty = json::object();

const json& section(const json& doc, const char* name) {
  if (!doc.contains(name)) return kEmpty;
  const json& s = doc.at(name);
  if (!s.is_object()) throw ValidationError(std::string(name) + " must be an object");
  return s;
}

void only_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
  for (const auto& [key, value] : j.items()) {
    if (!allowed.contains(key)) throw ValidationError("unknown field '" + key + "' in " + where);
  }
}

double number(const json& j, const std::string& what) {
  if (!j.is_number()) throw ValidationError(what + " must be a number");
  return j.get<double>();
}

std::size_t count(const json& j, const std::string& what, std::size_t min = 0) {
  if (!j.is_number_integer() || j.get<long long>() < static_cast<long long>(min)) {
    throw ValidationError(what + " must be an integer >= " + std::to_string(min));
  }
  return static_cast<std::size_t>(j.get<long long>());
}

std::vector<double> numbers(const json& j, const std::string& what) {
  if (!j.is_array()) throw ValidationError(what + " must be an array of numbers");
  std::vector<double> v;
  for (const auto& e : j) v.push_back(number(e, what));
  return v;
}

template <class T>
void read(const json& s, const char* key, T& into, const std::string& where);

template <>
void read(const json& s, const char* key, double& into, const std::string& where) {
  if (s.contains(key)) into = number(s.at(key), where + "." + key);
}

template <>
void read(const json& s, const char* key, std::size_t& into, const std::string& where) {
  if (s.contains(key)) into = count(s.at(key), where + "." + key);
}

template <>
void read(const json& s, const char* key, std::vector<double>& into, const std::string& where) {
  if (s.contains(key)) into = numbers(s.at(key), where + "." + key);
}

template <>
void read(const json& s, const char* key, std::string& into, const std::string& where) {
  if (!s.contains(key)) return;
  if (!s.at(key).is_string()) throw ValidationError(where + "." + key + " must be a string");
  into = s.at(key).get<std::string>();
}

void require_positive(double v, const std::string& what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError(what + " must be > 0");
}

Curve curve_of(const json& j, double T, const std::string& what) {
  if (j.is_number()) return Curve::constant(j.get<double>(), 0.0, T);
  const auto v = numbers(j, what);
  if (v.empty()) throw ValidationError(what + " must not be empty");
  if (v.size() == 1) return Curve::constant(v[0], 0.0, T);
  return Curve(0.0, T, v);
}

json curve_json(const Curve& c) {
  if (c.is_constant()) return c.samples()[0];
  return json(std::vector<double>(c.samples().begin(), c.samples().end()));
}

std::optional<Family> family_from(std::string_view name) {
  for (Family f : {Family::classical_merton_log, Family::classical_merton_power, Family::classical_merton_exp,
                   Family::karp_openloop_log, Family::karp_openloop_power, Family::karp_openloop_exp,
                   Family::solano_feedback_log, Family::solano_feedback_power}) {
    if (family_name(f) == name) return f;
  }
  return std::nullopt;
}

void check_wealth_grid(const std::vector<double>& xs, const Utility& u, const std::string& what) {
  if (xs.empty()) throw ValidationError(what + " must not be empty");
  for (double x : xs) {
    if (!std::isfinite(x) || (u.positive_domain() && !(x > 0.0))) {
      throw ValidationError(what + " values must be > 0 for " + std::string(u.name()) + " utility");
    }
  }
}

}  // namespace

std::string_view command_name(Command c) noexcept {
  switch (c) {
    case Command::solve: return "solve";
    case Command::simulate: return "simulate";
    case Command::verify: return "verify";
    case Command::compare: return "compare";
  }
  return "unknown";
}

RunConfig parse_run_config(std::string_view text, Command command, const Overrides& overrides) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ValidationError("config must be a JSON object");
  only_keys(doc, "config",
            {"market", "discount", "utility", "grid", "policy", "solve", "simulate", "verify", "compare", "seed",
             "out_dir"});

  RunConfig rc{parse_model_config(text, true), {}, {}, {}, {}, {}, 0, "out", json::object()};
  const ModelConfig& model = rc.model;
  const double T = model.grid.horizon();

  if (doc.contains("seed")) {
    const json& s = doc.at("seed");
    if (!s.is_number_unsigned()) throw ValidationError("seed must be a non-negative integer");
    rc.seed = s.get<std::uint64_t>();
  }
  read(doc, "out_dir", rc.out_dir, "config");
  if (overrides.seed) rc.seed = *overrides.seed;
  if (overrides.out_dir) rc.out_dir = *overrides.out_dir;
  if (rc.out_dir.empty()) throw ValidationError("out_dir must not be empty");

  // policy
  const json& pj = section(doc, "policy");
  only_keys(pj, "policy", {"source", "consumption_factor", "consumption", "investment"});
  PolicySpec& policy = rc.policy;
  read(pj, "source", policy.source, "policy");
  read(pj, "consumption_factor", policy.consumption_factor, "policy");
  read(pj, "consumption", policy.consumption, "policy");
  read(pj, "investment", policy.investment, "policy");
  if (policy.source != "equilibrium" && policy.source != "constant") {
    throw ValidationError("policy.source must be 'equilibrium' or 'constant'");
  }
  if (!std::isfinite(policy.consumption_factor) || policy.consumption_factor < 0.0) {
    throw ValidationError("policy.consumption_factor must be >= 0");
  }
  if (policy.investment.empty()) policy.investment.assign(model.market.dimension(), 0.0);
  if (policy.investment.size() != model.market.dimension()) {
    throw ValidationError("policy.investment needs one entry per asset");
  }

  // solve
  const json& sj = section(doc, "solve");
  only_keys(sj, "solve", {"method", "x_grid", "x_min", "x_max", "space_steps"});
  SolveSpec& solve = rc.solve;
  read(sj, "method", solve.method, "solve");
  read(sj, "x_grid", solve.x_grid, "solve");
  read(sj, "space_steps", solve.space_steps, "solve");
  if (sj.contains("x_min")) solve.x_min = number(sj.at("x_min"), "solve.x_min");
  if (sj.contains("x_max")) solve.x_max = number(sj.at("x_max"), "solve.x_max");
  if (solve.method != "closed_form" && solve.method != "pde") {
    throw ValidationError("solve.method must be 'closed_form' or 'pde'");
  }
  if (solve.space_steps < 4) throw ValidationError("solve.space_steps must be >= 4");
  check_wealth_grid(solve.x_grid, model.utility, "solve.x_grid");

  // simulate
  const json& mj = section(doc, "simulate");
  only_keys(mj, "simulate", {"x0", "paths", "write_paths", "workers"});
  SimulateSpec& sim = rc.simulate;
  read(mj, "x0", sim.x0, "simulate");
  read(mj, "paths", sim.paths, "simulate");
  read(mj, "write_paths", sim.write_paths, "simulate");
  std::size_t workers = sim.workers;
  read(mj, "workers", workers, "simulate");
  sim.workers = static_cast<unsigned>(workers);
  if (command == Command::simulate && overrides.paths) sim.paths = *overrides.paths;
  if (sim.paths == 0) throw ValidationError("simulate.paths must be >= 1");
  if (sim.workers == 0) throw ValidationError("simulate.workers must be >= 1");
  if (!std::isfinite(sim.x0) || (model.utility.positive_domain() && !(sim.x0 > 0.0))) {
    throw ValidationError("simulate.x0 must be > 0 for " + std::string(model.utility.name()) + " utility");
  }

  // verify
  const json& vj = section(doc, "verify");
  only_keys(vj, "verify",
            {"checkpoints", "epsilons", "steps", "n_outer", "n_inner", "extrapolate", "spike_paths", "spike_steps",
             "direction_bound", "x0", "workers", "flagged_limit", "sigmas"});
  VerificationSettings& vs = rc.verify;
  read(vj, "checkpoints", vs.checkpoints, "verify");
  read(vj, "epsilons", vs.epsilon_fractions, "verify");
  read(vj, "n_outer", vs.n_outer, "verify");
  read(vj, "n_inner", vs.n_inner, "verify");
  read(vj, "spike_paths", vs.spike_paths, "verify");
  read(vj, "spike_steps", vs.spike_steps, "verify");
  read(vj, "direction_bound", vs.direction_bound, "verify");
  read(vj, "x0", vs.x0, "verify");
  read(vj, "flagged_limit", vs.flagged_limit, "verify");
  read(vj, "sigmas", vs.sigmas, "verify");
  if (vj.contains("extrapolate")) {
    if (!vj.at("extrapolate").is_boolean()) throw ValidationError("verify.extrapolate must be true or false");
    vs.extrapolate_nested = vj.at("extrapolate").get<bool>();
  }
  vs.steps = model.grid.steps();
  if (vj.contains("steps")) {
    if (count(vj.at("steps"), "verify.steps", 1) != vs.steps) {
      throw ValidationError("verify.steps must equal grid.n");
    }
  }
  std::size_t vworkers = vs.workers;
  read(vj, "workers", vworkers, "verify");
  vs.workers = static_cast<unsigned>(vworkers);
  vs.seed = rc.seed;
  if (command == Command::verify && overrides.paths) vs.spike_paths = *overrides.paths;
  if (vs.n_outer == 0 || vs.n_inner == 0 || vs.spike_paths == 0 || vs.spike_steps == 0 || vs.workers == 0) {
    throw ValidationError("verify path counts, steps and workers must be >= 1");
  }
  if (!(vs.direction_bound >= 0.0)) throw ValidationError("verify.direction_bound must be >= 0");
  if (vs.epsilon_fractions.empty()) throw ValidationError("verify.epsilons must not be empty");
  for (std::size_t i = 0; i < vs.epsilon_fractions.size(); ++i) {
    const double e = vs.epsilon_fractions[i];
    if (!(e > 0.0 && e <= 1.0)) throw ValidationError("verify.epsilons must lie in (0, 1]");
    if (i > 0 && !(e < vs.epsilon_fractions[i - 1])) throw ValidationError("verify.epsilons must be decreasing");
  }
  if (!(vs.flagged_limit >= 0.0 && vs.flagged_limit < 1.0)) {
    throw ValidationError("verify.flagged_limit must lie in [0, 1)");
  }
  require_positive(vs.sigmas, "verify.sigmas");
  for (double t : vs.checkpoints) {
    if (!model.grid.index_of(t) || t >= T) {
      throw ValidationError("verify.checkpoints must be grid nodes before T");
    }
  }
  if (model.utility.positive_domain() && !(vs.x0 > 0.0)) throw ValidationError("verify.x0 must be > 0");

  // compare
  const json& cj = section(doc, "compare");
  only_keys(cj, "compare",
            {"families", "delta", "delta0", "x", "x_grid", "damping", "tolerance", "max_iterations", "naive_starts",
             "naive_steps"});
  CompareSpec& cmp = rc.compare;
  if (cj.contains("families")) {
    const json& f = cj.at("families");
    if (!f.is_array()) throw ValidationError("compare.families must be an array of names");
    for (const auto& e : f) {
      if (!e.is_string() || !family_from(e.get<std::string>())) {
        throw ValidationError("compare.families has an unknown family " + e.dump());
      }
      cmp.families.push_back(e.get<std::string>());
    }
  }
  if (cj.contains("delta")) {
    cmp.delta = curve_of(cj.at("delta"), T, "compare.delta");
  } else if (const auto* k = std::get_if<DiscountFunction::KarpRate>(&model.discount.spec())) {
    cmp.delta = k->rate;
  } else if (const auto* e = std::get_if<DiscountFunction::Exponential>(&model.discount.spec())) {
    cmp.delta = Curve::constant(e->rate, 0.0, T);
  }
  if (cj.contains("delta0")) cmp.delta0 = number(cj.at("delta0"), "compare.delta0");
  if (!cmp.delta0 && cmp.delta && cmp.delta->is_constant()) cmp.delta0 = cmp.delta->samples()[0];
  read(cj, "x", cmp.x, "compare");
  read(cj, "x_grid", cmp.x_grid, "compare");
  read(cj, "damping", cmp.fixed_point.damping, "compare");
  read(cj, "tolerance", cmp.fixed_point.tolerance, "compare");
  read(cj, "max_iterations", cmp.fixed_point.max_iterations, "compare");
  read(cj, "naive_starts", cmp.naive_starts, "compare");
  read(cj, "naive_steps", cmp.naive_steps, "compare");
  check_wealth_grid(cmp.x_grid, model.utility, "compare.x_grid");
  check_wealth_grid({cmp.x}, model.utility, "compare.x");
  for (double t0 : cmp.naive_starts) {
    if (!(t0 >= 0.0 && t0 < T)) throw ValidationError("compare.naive_starts must lie in [0, T)");
  }
  if (cmp.naive_steps == 0) throw ValidationError("compare.naive_steps must be >= 1");

  if (command == Command::compare) {
    const auto kind = model.utility.kind();
    if (cmp.families.empty()) {
      for (Family f : {Family::classical_merton_log, Family::classical_merton_power, Family::classical_merton_exp,
                       Family::karp_openloop_log, Family::karp_openloop_power, Family::karp_openloop_exp,
                       Family::solano_feedback_log, Family::solano_feedback_power}) {
        const bool classical = f == Family::classical_merton_log || f == Family::classical_merton_power ||
                               f == Family::classical_merton_exp;
        if (family_utility(f) == kind && (!classical || cmp.delta0)) cmp.families.emplace_back(family_name(f));
      }
    }
    for (const auto& name : cmp.families) {
      const Family f = *family_from(name);
      if (family_utility(f) != kind) {
        throw ValidationError("compare family " + name + " does not match the configured utility");
      }
      const bool classical = f == Family::classical_merton_log || f == Family::classical_merton_power ||
                             f == Family::classical_merton_exp;
      if (classical && !cmp.delta0) throw ValidationError("classical families need compare.delta0 or a constant delta");
      if (!classical && !cmp.delta) {
        throw ValidationError("compare needs compare.delta unless the discount is karp or exponential");
      }
    }
    if (cmp.families.empty()) throw ValidationError("compare has no families to run");
  }
  if (command == Command::solve && overrides.paths) throw ValidationError("--paths applies to simulate and verify");
  if (command == Command::compare && overrides.paths) throw ValidationError("--paths applies to simulate and verify");

  // resolved echo
  json& r = rc.resolved;
  for (const char* k : {"market", "discount", "utility", "grid"}) r[k] = doc.at(k);
  r["seed"] = rc.seed;
  r["out_dir"] = rc.out_dir;
  r["policy"] = {{"source", policy.source},
                 {"consumption_factor", policy.consumption_factor},
                 {"consumption", policy.consumption},
                 {"investment", policy.investment}};
  json solve_j = {{"method", solve.method}, {"x_grid", solve.x_grid}, {"space_steps", solve.space_steps}};
  if (solve.x_min) solve_j["x_min"] = *solve.x_min;
  if (solve.x_max) solve_j["x_max"] = *solve.x_max;
  r["solve"] = solve_j;
  r["simulate"] = {{"x0", sim.x0}, {"paths", sim.paths}, {"write_paths", sim.write_paths}, {"workers", sim.workers}};
  r["verify"] = {{"checkpoints", vs.checkpoints.empty() ? default_checkpoints(T, vs.steps) : vs.checkpoints},
                 {"epsilons", vs.epsilon_fractions},
                 {"steps", vs.steps},
                 {"n_outer", vs.n_outer},
                 {"n_inner", vs.n_inner},
                 {"extrapolate", vs.extrapolate_nested},
                 {"spike_paths", vs.spike_paths},
                 {"spike_steps", vs.spike_steps},
                 {"direction_bound", vs.direction_bound},
                 {"x0", vs.x0},
                 {"workers", vs.workers},
                 {"flagged_limit", vs.flagged_limit},
                 {"sigmas", vs.sigmas}};
  json cmp_j = {{"families", cmp.families},
                {"x", cmp.x},
                {"x_grid", cmp.x_grid},
                {"damping", cmp.fixed_point.damping},
                {"tolerance", cmp.fixed_point.tolerance},
                {"max_iterations", cmp.fixed_point.max_iterations},
                {"naive_starts", cmp.naive_starts},
                {"naive_steps", cmp.naive_steps}};
  if (cmp.delta) cmp_j["delta"] = curve_json(*cmp.delta);
  if (cmp.delta0) cmp_j["delta0"] = *cmp.delta0;
  r["compare"] = cmp_j;
  return rc;
}

}  // namespace mertoneq::cli
