#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mertoneq/compare.hpp"
#include "mertoneq/config.hpp"
#include "mertoneq/verify.hpp"

namespace mertoneq::cli {

enum class Command { solve, simulate, verify, compare };

std::string_view command_name(Command c) noexcept;

// Which strategy simulate and verify run.
struct PolicySpec {
  std::string source = "equilibrium";  // "equilibrium" or "constant"
  double consumption_factor = 1.0;     // scales equilibrium consumption
  double consumption = 0.0;            // constant source only
  std::vector<double> investment;      // constant source only; empty means zero
};

struct SolveSpec {
  std::string method = "closed_form";  // "closed_form" or "pde"
  std::vector<double> x_grid{0.5, 1.0, 2.0};
  std::optional<double> x_min;
  std::optional<double> x_max;
  std::size_t space_steps = 400;
};

struct SimulateSpec {
  double x0 = 1.0;
  std::size_t paths = 1000;
  std::size_t write_paths = 10;
  unsigned workers = 1;
};

struct CompareSpec {
  std::vector<std::string> families;  // empty means every family for the utility
  std::optional<Curve> delta;
  std::optional<double> delta0;
  double x = 1.0;
  std::vector<double> x_grid{1.0};
  FixedPointSettings fixed_point;
  std::vector<double> naive_starts;
  std::size_t naive_steps = 100;
};

struct RunConfig {
  ModelConfig model;
  PolicySpec policy;
  SolveSpec solve;
  SimulateSpec simulate;
  VerificationSettings verify;
  CompareSpec compare;
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  // Model sections as given plus every other section with defaults filled in.
  nlohmann::json resolved;
};

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::size_t> paths;
};

// Parses and validates the whole document; throws ValidationError on any problem.
// --paths sets simulate.paths for simulate and verify.spike_paths for verify.
RunConfig parse_run_config(std::string_view text, Command command, const Overrides& overrides);

}  // namespace mertoneq::cli
