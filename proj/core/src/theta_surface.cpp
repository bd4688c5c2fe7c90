#include "mertoneq/theta_surface.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mertoneq/errors.hpp"

namespace mertoneq {

ThetaSurface::ThetaSurface(TimeGrid time, SpatialCoordinate coordinate, std::vector<double> z,
                           std::vector<double> values, PdeDiagnostics diagnostics)
    : time_(time),
      coordinate_(coordinate),
      z_(std::move(z)),
      values_(std::move(values)),
      diagnostics_(std::move(diagnostics)) {
  const std::size_t M = z_.size();
  if (M < 3) throw ValidationError("theta surface needs at least 3 spatial nodes");
  if (values_.size() != time_.size() * M) throw ValidationError("theta surface size mismatch");
  const double h = z_[1] - z_[0];
  dz_.resize(values_.size());
  for (std::size_t k = 0; k < time_.size(); ++k) {
    const double* f = values_.data() + k * M;
    double* out = dz_.data() + k * M;
    out[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
    for (std::size_t j = 1; j + 1 < M; ++j) out[j] = (f[j + 1] - f[j - 1]) / (2.0 * h);
    out[M - 1] = (3.0 * f[M - 1] - 4.0 * f[M - 2] + f[M - 3]) / (2.0 * h);
  }
}

double ThetaSurface::x(std::size_t j) const {
  const double zj = z_.at(j);
  return coordinate_ == SpatialCoordinate::log_wealth ? std::exp(zj) : zj;
}

double ThetaSurface::dz_node(std::size_t k, std::size_t j) const {
  return dz_.at(k * z_.size() + j);
}

double ThetaSurface::dx(std::size_t k, std::size_t j) const {
  const double d = dz_node(k, j);
  return coordinate_ == SpatialCoordinate::log_wealth ? d / x(j) : d;
}

ThetaValue ThetaSurface::at(double t, double x) const {
  const double T = time_.end();
  const double ttol = 1e-10 * (1.0 + T);
  if (!(t >= time_.start() - ttol && t <= T + ttol)) {
    throw DomainError("theta surface queried outside its time grid at t=" + std::to_string(t));
  }
  if (coordinate_ == SpatialCoordinate::log_wealth && !(x > 0.0)) {
    throw DomainError("theta surface queried at non-positive wealth x=" + std::to_string(x));
  }
  const double zq = coordinate_ == SpatialCoordinate::log_wealth ? std::log(x) : x;
  const std::size_t M = z_.size();
  const double h = z_[1] - z_[0];
  const double ztol = 1e-10 * (1.0 + std::abs(z_[0]) + std::abs(z_[M - 1]));
  if (!(zq >= z_[0] - ztol && zq <= z_[M - 1] + ztol)) {
    throw DomainError("theta surface queried outside its spatial grid at x=" + std::to_string(x));
  }

  const double tp = std::clamp((t - time_.start()) / time_.step(), 0.0,
                               static_cast<double>(time_.steps()));
  const std::size_t i = std::min(static_cast<std::size_t>(tp), time_.steps() - 1);
  const double wt = tp - static_cast<double>(i);
  const double zp = std::clamp((zq - z_[0]) / h, 0.0, static_cast<double>(M - 1));
  const std::size_t j = std::min(static_cast<std::size_t>(zp), M - 2);
  const double wz = zp - static_cast<double>(j);

  auto blend = [&](const std::vector<double>& a) {
    const double lo = (1.0 - wz) * a[i * M + j] + wz * a[i * M + j + 1];
    const double hi = (1.0 - wz) * a[(i + 1) * M + j] + wz * a[(i + 1) * M + j + 1];
    return (1.0 - wt) * lo + wt * hi;
  };
  const double value = blend(values_);
  const double dz = blend(dz_);
  return {value, coordinate_ == SpatialCoordinate::log_wealth ? dz / x : dz};
}

}  // namespace mertoneq
