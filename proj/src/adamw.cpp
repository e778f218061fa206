#include "transtte/adamw.hpp"

#include <cmath>

#include "transtte/error.hpp"

namespace transtte {

void adamw_step(std::span<double> params, std::span<const double> grads, OptimState& state) {
  if (grads.size() != params.size() || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    throw Error(ErrorKind::ShapeMismatch, "params, grads and optimizer moments must have equal sizes");
  }
  const AdamWHyper& h = state.hyper;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(h.beta1, t);
  const double bc2 = 1.0 - std::pow(h.beta2, t);
  const double decay = h.lr * h.weight_decay;
  double* m = state.m.data();
  double* v = state.v.data();
  const auto n = static_cast<std::ptrdiff_t>(params.size());
#pragma omp parallel for schedule(static) if (n > 65536)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const double g = grads[static_cast<std::size_t>(i)];
    m[i] = h.beta1 * m[i] + (1.0 - h.beta1) * g;
    v[i] = h.beta2 * v[i] + (1.0 - h.beta2) * g * g;
    double& p = params[static_cast<std::size_t>(i)];
    p -= decay * p;
    p -= h.lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + h.eps);
  }
}

}  // namespace transtte
