#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace transtte {

struct AdamWHyper {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

struct OptimState {
  AdamWHyper hyper;
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;

  static OptimState zeros(std::size_t n, const AdamWHyper& hyper) {
    return OptimState{hyper, std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), 0};
  }
};

/// One AdamW update in place. Weight decay is decoupled: the parameter is
/// first shrunk by lr * weight_decay * p, then moved by the bias-corrected
/// moment ratio. Throws ShapeMismatch.
void adamw_step(std::span<double> params, std::span<const double> grads, OptimState& state);

}  // namespace transtte
