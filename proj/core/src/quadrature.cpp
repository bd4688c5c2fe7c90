#include "mertoneq/quadrature.hpp"

#include "mertoneq/errors.hpp"

namespace mertoneq {

namespace {

// Integral over panel [x_k, x_{k+1}].
double panel(std::span<const double> f, std::size_t k, double h) {
  const std::size_t n = f.size() - 1;
  if (n == 1) return 0.5 * h * (f[0] + f[1]);
  if (n == 2) {
    return k == 0 ? h / 12.0 * (5.0 * f[0] + 8.0 * f[1] - f[2])
                  : h / 12.0 * (-f[0] + 8.0 * f[1] + 5.0 * f[2]);
  }
  if (k == 0) return h / 24.0 * (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3]);
  if (k == n - 1) {
    return h / 24.0 * (f[n - 3] - 5.0 * f[n - 2] + 19.0 * f[n - 1] + 9.0 * f[n]);
  }
  return h / 24.0 * (-f[k - 1] + 13.0 * f[k] + 13.0 * f[k + 1] - f[k + 2]);
}

void require_samples(std::span<const double> f, std::size_t count) {
  if (f.size() < count) throw DomainError("too few samples for quadrature rule");
}

}  // namespace

double integrate(std::span<const double> f, double h) {
  require_samples(f, 2);
  double sum = 0.0;
  for (std::size_t k = 0; k + 1 < f.size(); ++k) sum += panel(f, k, h);
  return sum;
}

std::vector<double> cumulative_integrals(std::span<const double> f, double h) {
  require_samples(f, 2);
  std::vector<double> out(f.size(), 0.0);
  for (std::size_t k = 0; k + 1 < f.size(); ++k) out[k + 1] = out[k] + panel(f, k, h);
  return out;
}

std::vector<double> tail_integrals(std::span<const double> f, double h) {
  require_samples(f, 2);
  std::vector<double> out(f.size(), 0.0);
  for (std::size_t k = f.size() - 1; k-- > 0;) out[k] = out[k + 1] + panel(f, k, h);
  return out;
}

std::vector<double> derivative(std::span<const double> f, double h) {
  require_samples(f, 5);
  const std::size_t n = f.size() - 1;
  std::vector<double> out(f.size());
  const double s = 1.0 / (12.0 * h);
  out[0] = s * (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]);
  out[1] = s * (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]);
  for (std::size_t k = 2; k + 2 <= n; ++k) {
    out[k] = s * (f[k - 2] - 8.0 * f[k - 1] + 8.0 * f[k + 1] - f[k + 2]);
  }
  out[n - 1] = s * (3.0 * f[n] + 10.0 * f[n - 1] - 18.0 * f[n - 2] + 6.0 * f[n - 3] - f[n - 4]);
  out[n] = s * (25.0 * f[n] - 48.0 * f[n - 1] + 36.0 * f[n - 2] - 16.0 * f[n - 3] + 3.0 * f[n - 4]);
  return out;
}

}  // namespace mertoneq
