#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mertoneq/grid.hpp"
#include "mertoneq/policy.hpp"

namespace mertoneq {

// Spatial coordinate the PDE is discretised in: z = ln x or z = x.
enum class SpatialCoordinate { log_wealth, wealth };

struct PdeDiagnostics {
  std::vector<int> newton_iterations;     // per backward step, index k = step ending at t_k
  std::vector<double> step_residual;      // max discrete residual after Newton, per step
  double max_diffusion_number = 0.0;      // max nu dt / dz^2
  double max_cell_peclet = 0.0;           // max |drift| dz / nu
  std::string boundary;
  std::vector<std::string> warnings;
};

// theta(t_k, x_j) on a time grid times a spatial grid uniform in z.
class ThetaSurface {
 public:
  ThetaSurface(TimeGrid time, SpatialCoordinate coordinate, std::vector<double> z,
               std::vector<double> values, PdeDiagnostics diagnostics);

  const TimeGrid& time() const noexcept { return time_; }
  SpatialCoordinate coordinate() const noexcept { return coordinate_; }
  std::size_t space_size() const noexcept { return z_.size(); }
  double z(std::size_t j) const { return z_.at(j); }
  double x(std::size_t j) const;
  double x_min() const { return x(0); }
  double x_max() const { return x(z_.size() - 1); }

  double value(std::size_t k, std::size_t j) const { return values_.at(k * z_.size() + j); }
  // theta_x at a node from centred differences in z.
  double dx(std::size_t k, std::size_t j) const;

  // Bilinear in (t, z); outside the grids raises DomainError.
  ThetaValue at(double t, double x) const;

  const PdeDiagnostics& diagnostics() const noexcept { return diagnostics_; }

 private:
  double dz_node(std::size_t k, std::size_t j) const;

  TimeGrid time_;
  SpatialCoordinate coordinate_;
  std::vector<double> z_;
  std::vector<double> values_;
  std::vector<double> dz_;
  PdeDiagnostics diagnostics_;
};

}  // namespace mertoneq
