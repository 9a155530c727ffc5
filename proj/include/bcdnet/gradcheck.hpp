#pragma once

#include <cstdint>
#include <string>

#include "bcdnet/nn.hpp"

namespace bcdnet {

struct GradCheckReport {
  std::string layer;
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  // Probes skipped: a kink within eps, or a failing slope below rounding noise.
  std::size_t excluded = 0;
  bool pass = false;
};

// |a - n| / max(|a|, |n|, 1e-8)
double relative_error(double analytic, double numeric);

// Compares the analytic gradient of sum(layer(input) * R), for a fixed random
// R, with central differences (f(x+eps) - f(x-eps)) / (2 eps) on every input
// element and every parameter element. A probe whose one-sided differences
// disagree by more than 1e-3 * max(1, |d+|, |d-|) sits on a non-differentiable
// point and is excluded, as is a failing probe whose analytic and numeric
// slopes are both below 64 ulp(f) / eps. Throws NonDeterministicLayer if two identical
// forwards differ.
GradCheckReport grad_check(nn::Module<double>& layer, const Tensor<double>& input,
                           double eps = 1e-5, double tol = 1e-4, std::uint64_t seed = 0);

}  // namespace bcdnet
