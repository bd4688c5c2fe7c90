#include "mertoneq/grid.hpp"

#include <cmath>

#include "mertoneq/errors.hpp"

namespace mertoneq {

TimeGrid::TimeGrid(double horizon, std::size_t steps) : TimeGrid(0.0, horizon, steps) {}

TimeGrid::TimeGrid(double start, double end, std::size_t steps)
    : start_(start), end_(end), steps_(steps) {
  if (!std::isfinite(start) || !std::isfinite(end) || !(end > start)) {
    throw ValidationError("time grid needs a finite interval with end > start");
  }
  if (steps == 0) throw ValidationError("time grid needs at least one step");
}

double TimeGrid::node(std::size_t k) const {
  if (k > steps_) throw DomainError("time grid index out of range");
  if (k == steps_) return end_;
  return start_ + static_cast<double>(k) * step();
}

std::vector<double> TimeGrid::nodes() const {
  std::vector<double> out(size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = node(k);
  return out;
}

std::optional<std::size_t> TimeGrid::index_of(double t, double tol) const {
  const double pos = (t - start_) / step();
  const double k = std::round(pos);
  if (k < 0.0 || k > static_cast<double>(steps_) || std::abs(pos - k) > tol) return std::nullopt;
  return static_cast<std::size_t>(k);
}

TimeGrid TimeGrid::tail(std::size_t k) const {
  if (k >= steps_) throw DomainError("tail grid must keep at least one step");
  return TimeGrid(node(k), end_, steps_ - k);
}

}  // namespace mertoneq
