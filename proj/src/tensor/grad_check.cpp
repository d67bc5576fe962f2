#include "cv4code/tensor/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cv4code/common/rng.hpp"

namespace cv4code::tensor {

double grad_check(const std::function<Var<double>()>& loss, std::vector<Var<double>> params,
                  const GradCheckOptions& options) {
  for (auto& p : params) p.zero_grad();
  backward(loss());
  std::vector<Tensor<double>> analytic;
  analytic.reserve(params.size());
  for (auto& p : params) {
    analytic.push_back(p.has_grad() ? p.grad() : Tensor<double>(p.shape()));
    p.zero_grad();
  }

  SplitMix64 rng(options.seed);
  NoGradGuard no_grad;
  double worst = 0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor<double>& value = params[i].mutable_value();
    std::vector<std::size_t> coords(value.size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (options.max_coords != 0 && coords.size() > options.max_coords) {
      shuffle(std::span<std::size_t>(coords), rng);
      coords.resize(options.max_coords);
    }
    for (std::size_t c : coords) {
      const double saved = value[c];
      value[c] = saved + options.eps;
      const double up = loss().item();
      value[c] = saved - options.eps;
      const double down = loss().item();
      value[c] = saved;
      const double numeric = (up - down) / (2 * options.eps);
      const double a = analytic[i][c];
      worst = std::max(worst, std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric)));
    }
  }
  return worst;
}

}  // namespace cv4code::tensor
