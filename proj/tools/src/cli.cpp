#include "mertoneq_cli/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <openssl/evp.h>

#include "mertoneq/closedform.hpp"
#include "mertoneq/compare.hpp"
#include "mertoneq/equilibrium.hpp"
#include "mertoneq/errors.hpp"
#include "mertoneq/io.hpp"
#include "mertoneq/pde.hpp"
#include "mertoneq/simulate.hpp"
#include "mertoneq/verify.hpp"
#include "mertoneq_cli/run_config.hpp"

namespace mertoneq::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path);
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw Error("sha256 unavailable");
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md, &len);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return os.str();
}

namespace {

// Output directory plus the list of files written into it.
class Artifacts {
 public:
  explicit Artifacts(const std::string& dir) : dir_(dir) { fs::create_directories(dir_); }

  void write(const std::string& name, const std::function<void(std::ostream&)>& body) {
    const fs::path p = dir_ / name;
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + p.string());
    body(out);
    out.close();
    if (!out) throw Error("failed writing " + p.string());
    files_.push_back(name);
  }

  void manifest(const std::string& command, const RunConfig& rc, const json& results) const {
    json files = json::array();
    for (const auto& f : files_) {
      const fs::path p = dir_ / f;
      files.push_back({{"name", f}, {"sha256", sha256_file(p.string())}, {"bytes", fs::file_size(p)}});
    }
    const json m = {{"command", command}, {"seed", rc.seed}, {"config", rc.resolved}, {"files", files},
                    {"results", results}};
    std::ofstream out(dir_ / "manifest.json", std::ios::binary | std::ios::trunc);
    out << m.dump(2) << '\n';
    if (!out) throw Error("failed writing manifest");
  }

 private:
  fs::path dir_;
  std::vector<std::string> files_;
};

std::shared_ptr<const EquilibriumPolicy> solve_equilibrium(const RunConfig& rc, json& results) {
  const ModelConfig& mc = rc.model;
  const Utility& u = mc.utility;
  if (rc.solve.method == "pde") {
    PdeSettings ps;
    ps.domain = default_domain(u, 1.0);
    if (rc.solve.x_min) ps.domain.x_min = *rc.solve.x_min;
    if (rc.solve.x_max) ps.domain.x_max = *rc.solve.x_max;
    ps.space_steps = rc.solve.space_steps;
    auto s = std::make_shared<const ThetaSurface>(solve_theta(mc.market, mc.discount, u, mc.grid, ps));
    results["pde_warnings"] = s->diagnostics().warnings;
    results["pde_boundary"] = s->diagnostics().boundary;
    return std::make_shared<const EquilibriumPolicy>(policy_from_theta(s, mc.market, mc.discount, u));
  }
  switch (u.kind()) {
    case Utility::Kind::power: {
      auto c = solve_power(mc.market, mc.discount, u.a(), u.gamma(), mc.grid);
      results["ode_residual"] = c.ode_residual;
      return std::make_shared<const EquilibriumPolicy>(policy_power(c, mc.market, mc.discount));
    }
    case Utility::Kind::log: {
      auto c = solve_log(mc.market, mc.discount, u.a(), mc.grid);
      results["ode_residual"] = c.ode_residual;
      return std::make_shared<const EquilibriumPolicy>(policy_log(c, mc.market, mc.discount));
    }
    case Utility::Kind::exponential: {
      auto c = solve_exponential(mc.market, mc.discount, u.a(), u.gamma(), mc.grid);
      results["ode_residual"] = c.ode_residual;
      return std::make_shared<const EquilibriumPolicy>(policy_exponential(c, mc.market, mc.discount));
    }
  }
  throw ValidationError("unknown utility");
}

std::shared_ptr<const Policy> configured_policy(const RunConfig& rc, json& results) {
  const PolicySpec& ps = rc.policy;
  if (ps.source == "constant") {
    return std::make_shared<const ConstantPolicy>(
        ps.consumption, Eigen::Map<const Eigen::VectorXd>(ps.investment.data(), static_cast<Eigen::Index>(ps.investment.size())));
  }
  std::shared_ptr<const Policy> eq = solve_equilibrium(rc, results);
  if (ps.consumption_factor != 1.0) return std::make_shared<const ScaledConsumptionPolicy>(eq, ps.consumption_factor);
  return eq;
}

int cmd_solve(const RunConfig& rc, Artifacts& art, json& results, std::ostream& out) {
  const ModelConfig& mc = rc.model;
  const auto policy = solve_equilibrium(rc, results);
  std::visit(
      [&](const auto& b) {
        using B = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<B, PowerCoefficients>) {
          art.write("pi.csv", [&](std::ostream& o) { write_curve_csv(o, b.Pi, mc.grid); });
        } else if constexpr (std::is_same_v<B, LogCoefficients>) {
          art.write("varphi.csv", [&](std::ostream& o) { write_curve_csv(o, b.varphi, mc.grid); });
        } else if constexpr (std::is_same_v<B, ExpCoefficients>) {
          art.write("phi.csv", [&](std::ostream& o) { write_curve_csv(o, b.phi, mc.grid); });
          art.write("psi.csv", [&](std::ostream& o) { write_curve_csv(o, b.psi, mc.grid); });
        } else {
          art.write("theta.csv", [&](std::ostream& o) {
            CsvWriter w(o, {"t", "x", "theta", "theta_x"});
            for (std::size_t k = 0; k < b->time().size(); ++k) {
              for (std::size_t j = 0; j < b->space_size(); ++j) {
                w.field(b->time().node(k)).field(b->x(j)).field(b->value(k, j)).field(b->dx(k, j)).end_row();
              }
            }
          });
        }
      },
      policy->backing());
  art.write("policy.csv", [&](std::ostream& o) { write_policy_csv(o, *policy, mc.grid, rc.solve.x_grid); });
  out << "solved " << policy->describe() << '\n';
  return success;
}

int cmd_simulate(const RunConfig& rc, Artifacts& art, json& results, std::ostream& out) {
  const ModelConfig& mc = rc.model;
  const auto policy = configured_policy(rc, results);
  SimulationSettings s;
  s.paths = rc.simulate.paths;
  s.seed = rc.seed;
  s.workers = rc.simulate.workers;
  const std::size_t keep = std::min(rc.simulate.write_paths, rc.simulate.paths);
  std::vector<WealthPath> kept(keep);
  std::size_t flagged = 0;
  std::vector<std::size_t> flagged_by_worker(s.workers, 0);
  for_each_path(*policy, mc.market, mc.grid, rc.simulate.x0, s, [&](const PathView& v, unsigned worker) {
    if (v.flagged) ++flagged_by_worker[worker];
    if (v.id < keep) {
      kept[v.id] = WealthPath{v.id,
                              {v.time.begin(), v.time.end()},
                              {v.wealth.begin(), v.wealth.end()},
                              {v.consumption.begin(), v.consumption.end()},
                              {v.investment.begin(), v.investment.end()},
                              {},
                              v.flagged};
    }
  });
  for (auto f : flagged_by_worker) flagged += f;
  const std::size_t d = mc.market.dimension();
  art.write("paths.csv", [&](std::ostream& o) {
    std::vector<std::string> header{"path", "t", "wealth", "consumption"};
    for (std::size_t i = 0; i < d; ++i) header.push_back("u" + std::to_string(i + 1));
    CsvWriter w(o, header);
    for (const auto& p : kept) {
      for (std::size_t k = 0; k < p.wealth.size(); ++k) {
        w.field(p.id).field(p.time[k]).field(p.wealth[k]);
        // no controls are applied at the last recorded state
        if (k < p.consumption.size()) {
          w.field(p.consumption[k]);
          for (std::size_t i = 0; i < d; ++i) w.field(p.investment[k * d + i]);
        } else {
          for (std::size_t i = 0; i <= d; ++i) w.field(std::string_view(""));
        }
        w.end_row();
      }
    }
  });
  results["paths"] = rc.simulate.paths;
  results["flagged_paths"] = flagged;
  results["flagged_fraction"] = static_cast<double>(flagged) / static_cast<double>(rc.simulate.paths);
  try {
    const auto e = estimate_objective(*policy, mc.market, mc.discount, mc.utility, mc.grid, rc.simulate.x0, s);
    art.write("estimate.csv", [&](std::ostream& o) {
      CsvWriter w(o, {"t", "x", "mean", "std_error", "paths", "flagged"});
      w.field(e.t).field(e.x).field(e.mean).field(e.std_error).field(e.paths).field(e.flagged).end_row();
    });
    results["objective"] = e.mean;
    results["objective_std_error"] = e.std_error;
    out << "objective " << format_double(e.mean) << " +/- " << format_double(e.std_error) << " (" << flagged
        << " of " << rc.simulate.paths << " paths flagged)\n";
  } catch (const SolverError& e) {
    results["objective_error"] = e.what();
    out << "objective unavailable: " << e.what() << '\n';
    return solver_error;
  }
  return success;
}

int cmd_verify(const RunConfig& rc, Artifacts& art, json& results, std::ostream& out) {
  const ModelConfig& mc = rc.model;
  const auto policy = configured_policy(rc, results);
  const EquilibriumReport r = run_verification(*policy, mc.market, mc.discount, mc.utility, rc.verify);
  const std::size_t d = mc.market.dimension();
  const auto dirs = unit_directions(d, rc.verify.direction_bound);

  art.write("residuals.csv", [&](std::ostream& o) {
    CsvWriter w(o, {"t", "x", "method", "r_c", "r_i", "stderr_c", "stderr_i", "ok"});
    for (const auto& row : r.residuals) {
      w.field(row.t).field(row.x).field(method_name(row.method)).field(row.consumption);
      if (row.investment) w.field(*row.investment); else w.field(std::string_view(""));
      w.field(row.stderr_c);
      if (row.stderr_i) w.field(*row.stderr_i); else w.field(std::string_view(""));
      w.field(std::string_view(row.ok ? "1" : "0")).end_row();
    }
  });
  art.write("agreement.csv", [&](std::ostream& o) {
    CsvWriter w(o, {"t", "nested", "nested_stderr", "theta", "theta_stderr", "difference", "difference_stderr",
                    "agree"});
    for (const auto& a : r.agreement) {
      w.field(a.t).field(a.nested).field(a.nested_stderr).field(a.theta).field(a.theta_stderr).field(a.difference)
          .field(a.difference_stderr).field(std::string_view(a.agree ? "1" : "0")).end_row();
    }
  });
  auto direction_header = [&](std::vector<std::string> h) {
    h.push_back("v_c");
    for (std::size_t i = 0; i < d; ++i) h.push_back("v_" + std::to_string(i + 1));
    return h;
  };
  auto direction_fields = [&](CsvWriter& w, std::size_t k) {
    w.field(dirs[k].consumption);
    for (std::size_t i = 0; i < d; ++i) w.field(dirs[k].investment[static_cast<Eigen::Index>(i)]);
  };
  art.write("spikes.csv", [&](std::ostream& o) {
    auto h = direction_header({"t", "x", "direction"});
    for (const char* c : {"epsilon", "delta", "std_error"}) h.emplace_back(c);
    CsvWriter w(o, h);
    for (const auto& s : r.spikes) {
      for (const auto& p : s.points) {
        w.field(s.t).field(s.x).field(s.direction);
        direction_fields(w, s.direction);
        w.field(p.epsilon).field(p.delta).field(p.std_error).end_row();
      }
    }
  });
  art.write("spike_limits.csv", [&](std::ostream& o) {
    auto h = direction_header({"t", "x", "direction"});
    for (const char* c : {"limit", "limit_stderr", "paths", "flagged"}) h.emplace_back(c);
    CsvWriter w(o, h);
    for (const auto& s : r.spikes) {
      w.field(s.t).field(s.x).field(s.direction);
      direction_fields(w, s.direction);
      w.field(s.limit).field(s.limit_stderr).field(s.paths).field(s.flagged).end_row();
    }
  });
  art.write("second_order.csv", [&](std::ostream& o) {
    CsvWriter w(o, {"t", "s", "x", "P", "P_stderr", "A_cc", "max_eig_A"});
    for (const auto& s : r.second_order) {
      const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s.A);
      w.field(s.t).field(s.s).field(s.x).field(s.P).field(s.P_stderr).field(s.A(0, 0))
          .field(es.eigenvalues().maxCoeff()).end_row();
    }
  });
  results["verdict"] = verdict_name(r.verdict);
  results["notes"] = r.notes;
  results["outer_flagged"] = r.outer_flagged;
  results["inner_flagged"] = r.inner_flagged;
  results["inner_paths"] = r.inner_paths;
  out << "verdict: " << verdict_name(r.verdict) << '\n';
  for (const auto& n : r.notes) out << "  " << n << '\n';
  switch (r.verdict) {
    case Verdict::pass: return success;
    case Verdict::fail: return verification_fail;
    case Verdict::inconclusive: return inconclusive;
  }
  return inconclusive;
}

bool is_classical(Family f) {
  return f == Family::classical_merton_log || f == Family::classical_merton_power ||
         f == Family::classical_merton_exp;
}

Family family_of(const std::string& name) {
  for (int i = 0; i <= static_cast<int>(Family::solano_feedback_power); ++i) {
    const auto f = static_cast<Family>(i);
    if (family_name(f) == name) return f;
  }
  throw ValidationError("unknown family " + name);
}

int cmd_compare(const RunConfig& rc, Artifacts& art, json& results, std::ostream& out) {
  const ModelConfig& mc = rc.model;
  const CompareSpec& cs = rc.compare;
  std::vector<ComparisonPolicy> done;
  json failed = json::object();
  for (const auto& name : cs.families) {
    const Family f = family_of(name);
    try {
      if (is_classical(f)) {
        done.push_back(classical_merton(mc.market, mc.utility, *cs.delta0, mc.grid));
      } else if (f == Family::solano_feedback_log) {
        done.push_back(solano_feedback_log(mc.market, mc.utility.a(), *cs.delta, mc.grid));
      } else if (f == Family::solano_feedback_power) {
        auto sol = solano_feedback_power(mc.market, mc.utility.a(), mc.utility.gamma(), *cs.delta, mc.grid,
                                         cs.fixed_point);
        art.write("alpha.csv", [&](std::ostream& o) { write_curve_csv(o, sol.alpha, mc.grid); });
        art.write("fixed_point.csv", [&](std::ostream& o) {
          CsvWriter w(o, {"iteration", "change"});
          for (std::size_t i = 0; i < sol.history.size(); ++i) w.field(i + 1).field(sol.history[i]).end_row();
        });
        results["fixed_point_iterations"] = sol.history.size();
        done.push_back(std::move(sol.policy));
      } else {
        done.push_back(karp_openloop(mc.market, mc.utility, *cs.delta, mc.grid));
      }
    } catch (const ConvergenceError& e) {
      failed[name] = {{"error", e.what()}, {"iterations", e.history().size()}};
      out << name << ": " << e.what() << '\n';
      continue;
    } catch (const SolverError& e) {
      failed[name] = {{"error", e.what()}};
      out << name << ": " << e.what() << '\n';
      continue;
    }
    const ComparisonPolicy& p = done.back();
    art.write("policy_" + name + ".csv", [&](std::ostream& o) { write_policy_csv(o, p, mc.grid, cs.x_grid); });
    json notes = p.notes();
    results["notes"][name] = notes;
  }

  std::vector<GapRow> rows;
  json pairs = json::array();
  for (std::size_t i = 0; i < done.size(); ++i) {
    for (std::size_t j = i + 1; j < done.size(); ++j) {
      const auto g = policy_gaps(done[i], done[j], mc.grid, cs.x);
      double mc_gap = 0.0, mi_gap = 0.0;
      for (const auto& row : g) {
        mc_gap = std::max(mc_gap, row.consumption_gap);
        mi_gap = std::max(mi_gap, row.investment_gap);
      }
      pairs.push_back({{"family_a", family_name(done[i].family())}, {"family_b", family_name(done[j].family())},
                       {"max_consumption_gap", mc_gap}, {"max_investment_gap", mi_gap}});
      out << family_name(done[i].family()) << " vs " << family_name(done[j].family()) << ": max consumption gap "
          << format_double(mc_gap) << ", max investment gap " << format_double(mi_gap) << '\n';
      rows.insert(rows.end(), g.begin(), g.end());
    }
  }
  art.write("gaps.csv", [&](std::ostream& o) { write_gaps_csv(o, rows); });
  art.write("summary.csv", [&](std::ostream& o) {
    CsvWriter w(o, {"family_a", "family_b", "max_consumption_gap", "max_investment_gap"});
    for (const auto& p : pairs) {
      w.field(p["family_a"].get<std::string>()).field(p["family_b"].get<std::string>())
          .field(p["max_consumption_gap"].get<double>()).field(p["max_investment_gap"].get<double>()).end_row();
    }
  });
  if (!cs.naive_starts.empty()) {
    art.write("naive.csv", [&](std::ostream& o) {
      CsvWriter w(o, {"t0", "s", "fraction"});
      for (double t0 : cs.naive_starts) {
        const auto n = naive_log_consumption(mc.discount, mc.utility.a(), t0, cs.naive_steps);
        const TimeGrid g(t0, mc.grid.horizon(), cs.naive_steps);
        for (std::size_t k = 0; k < g.size(); ++k) w.field(t0).field(g.node(k)).field(n.fraction.samples()[k]).end_row();
      }
    });
  }
  results["pairs"] = pairs;
  results["failed"] = failed;
  return failed.empty() ? success : solver_error;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Equilibrium consumption-investment under non-exponential discounting"};
  app.require_subcommand(1);
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::size_t> paths;
  for (const char* name : {"solve", "simulate", "verify", "compare"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON run configuration")->required();
    sub->add_option("--seed", seed, "override the configured seed");
    sub->add_option("--out-dir", out_dir, "override the configured output directory");
    sub->add_option("--paths", paths, "override simulate.paths or verify.spike_paths");
  }
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return success;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return validation_error;
  }
  Command command = Command::solve;
  std::string name;
  for (auto* sub : app.get_subcommands()) name = sub->get_name();
  if (name == "simulate") command = Command::simulate;
  if (name == "verify") command = Command::verify;
  if (name == "compare") command = Command::compare;

  std::optional<RunConfig> rc;
  try {
    std::ifstream in(config_path, std::ios::binary);
    if (!in) throw ValidationError("cannot open config " + config_path);
    std::stringstream text;
    text << in.rdbuf();
    rc = parse_run_config(text.str(), command, Overrides{seed, out_dir, paths});
  } catch (const Error& e) {
    err << "validation error: " << e.what() << '\n';
    return validation_error;
  }

  json results = json::object();
  try {
    Artifacts art(rc->out_dir);
    int code = success;
    switch (command) {
      case Command::solve: code = cmd_solve(*rc, art, results, out); break;
      case Command::simulate: code = cmd_simulate(*rc, art, results, out); break;
      case Command::verify: code = cmd_verify(*rc, art, results, out); break;
      case Command::compare: code = cmd_compare(*rc, art, results, out); break;
    }
    art.manifest(std::string(command_name(command)), *rc, results);
    return code;
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << '\n';
    return validation_error;
  } catch (const std::exception& e) {
    err << "solver error: " << e.what() << '\n';
    return solver_error;
  }
}

}  // namespace mertoneq::cli
