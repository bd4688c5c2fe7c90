#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "mertoneq/discount.hpp"
#include "mertoneq/grid.hpp"
#include "mertoneq/market.hpp"
#include "mertoneq/policy.hpp"
#include "mertoneq/utility.hpp"

namespace mertoneq {

struct SimulationSettings {
  std::size_t paths = 1;
  std::uint64_t seed = 0;
  std::uint32_t stream = 0;
  // Paths whose wealth reaches this level are flagged and stopped.
  std::optional<double> wealth_floor;
  unsigned workers = 1;
  // Each step's Brownian increment is the sum of `substeps` increments of a grid that many
  // times finer, so (steps n*s, substeps 1) and (steps n, substeps s) see the same path.
  std::size_t substeps = 1;
};

// One simulated path, valid only during the visitor call. Controls are the
// left-endpoint values used on [t_k, t_{k+1}); investment and increments are
// stored step-major (d entries per step).
struct PathView {
  std::size_t id;
  std::span<const double> time;
  std::span<const double> wealth;
  std::span<const double> consumption;
  std::span<const double> investment;
  std::span<const double> increments;
  std::size_t dimension;
  std::size_t completed_steps;
  bool flagged;
};

using PathVisitor = std::function<void(const PathView&, unsigned worker)>;

// Simulates paths on grid [t, T] starting from x0 at grid.start():
//   X_{k+1} = Theta(t_k, t_{k+1}) X_k + (u_k . r_k - c_k) dt + u_k^T sigma_k dW_k.
// Each visitor call sees one path; paths are split into contiguous blocks per worker.
void for_each_path(const Policy& p, const MarketModel& m, const TimeGrid& grid, double x0,
                   const SimulationSettings& s, const PathVisitor& visit);

struct WealthPath {
  std::size_t id;
  std::vector<double> time;
  std::vector<double> wealth;
  std::vector<double> consumption;
  std::vector<double> investment;
  std::vector<double> increments;
  bool flagged;
};

std::vector<WealthPath> simulate_paths(const Policy& p, const MarketModel& m, const TimeGrid& grid,
                                       double x0, const SimulationSettings& s);

struct ObjectiveEstimate {
  double t;
  double x;
  double mean;
  double std_error;
  std::size_t paths;
  std::size_t flagged;
};

// Per-path objective int_t^T lambda(s-t) phi(c(s)) ds + lambda(T-t) h(X(T)) with
// c held at its left-endpoint value on each step and lambda integrated by the
// trapezoid rule; the default wealth floor is 1e-8 for power and log utility.
std::vector<std::optional<double>> path_objectives(const Policy& p, const MarketModel& m,
                                                   const DiscountFunction& d, const Utility& u,
                                                   const TimeGrid& grid, double x,
                                                   const SimulationSettings& s);

ObjectiveEstimate estimate_objective(const Policy& p, const MarketModel& m, const DiscountFunction& d,
                                     const Utility& u, const TimeGrid& grid, double x,
                                     const SimulationSettings& s);

struct DifferenceEstimate {
  double mean;
  double std_error;
  std::size_t paths;
  std::size_t flagged;
};

// J(a) - J(b); with common_numbers both policies see the same increments,
// otherwise b uses stream + 1.
DifferenceEstimate estimate_difference(const Policy& a, const Policy& b, const MarketModel& m,
                                       const DiscountFunction& d, const Utility& u,
                                       const TimeGrid& grid, double x, const SimulationSettings& s,
                                       bool common_numbers = true);

// Mean and standard error (sample std over sqrt n) of the engaged values in path order.
struct SampleSummary {
  double mean;
  double std_error;
  std::size_t used;
  std::size_t missing;
};
SampleSummary summarize(std::span<const std::optional<double>> values);

// Step weights 0.5 (lambda(t_k - t) + lambda(t_{k+1} - t)) dt on grid [t, T].
std::vector<double> discount_weights(const DiscountFunction& d, const TimeGrid& grid);

}  // namespace mertoneq
