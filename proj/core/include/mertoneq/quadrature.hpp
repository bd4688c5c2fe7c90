#pragma once

#include <span>
#include <vector>

namespace mertoneq {

// Fourth-order rules for samples f_k = f(x_0 + k h).
//
// Each panel [x_k, x_{k+1}] is integrated with the cubic through four
// neighbouring samples, shifted inward at the ends, so any n >= 3 panels work.

double integrate(std::span<const double> f, double h);

// out[k] = integral from x_0 to x_k
std::vector<double> cumulative_integrals(std::span<const double> f, double h);

// out[k] = integral from x_k to x_n
std::vector<double> tail_integrals(std::span<const double> f, double h);

// Fourth-order finite-difference derivative at every node (needs >= 5 samples).
std::vector<double> derivative(std::span<const double> f, double h);

}  // namespace mertoneq
