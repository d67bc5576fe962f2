#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "cv4code/tensor/autograd.hpp"

namespace cv4code::tensor {

struct GradCheckOptions {
  double eps = 1e-4;
  /// Coordinates probed per parameter; 0 probes all of them.
  std::size_t max_coords = 0;
  std::uint64_t seed = 0;
};

/// Compares backward() against central differences of `loss` (a closure that
/// rebuilds the scalar loss from the current parameter values). Returns the
/// max over probed coordinates of |a - n| / max(1e-8, |a| + |n|).
/// Parameter gradients are cleared before and after.
double grad_check(const std::function<Var<double>()>& loss, std::vector<Var<double>> params,
                  const GradCheckOptions& options = {});

}  // namespace cv4code::tensor
