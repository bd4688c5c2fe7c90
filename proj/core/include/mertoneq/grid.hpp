#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace mertoneq {

// Uniform grid start = t_0 < ... < t_n = end.
class TimeGrid {
 public:
  TimeGrid(double horizon, std::size_t steps);
  TimeGrid(double start, double end, std::size_t steps);

  double start() const noexcept { return start_; }
  double end() const noexcept { return end_; }
  double horizon() const noexcept { return end_; }
  double length() const noexcept { return end_ - start_; }
  std::size_t steps() const noexcept { return steps_; }
  std::size_t size() const noexcept { return steps_ + 1; }
  double step() const noexcept { return (end_ - start_) / static_cast<double>(steps_); }

  double node(std::size_t k) const;
  std::vector<double> nodes() const;

  // Index of the node equal to t within tol * step, if any.
  std::optional<std::size_t> index_of(double t, double tol = 1e-9) const;

  // Grid [t_k, end] sharing the nodes of this grid.
  TimeGrid tail(std::size_t k) const;

 private:
  double start_;
  double end_;
  std::size_t steps_;
};

}  // namespace mertoneq
