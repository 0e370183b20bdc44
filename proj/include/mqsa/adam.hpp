#pragma once

#include <vector>

#include "mqsa/common.hpp"

namespace mqsa {

// Bias-corrected Adam over a fixed list of parameter arrays. Moments are
// lazily shaped on the first step and must keep their shapes afterwards.
struct AdamState {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  long step_count = 0;
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
};

// In-place update: params[i] -= lr * m_hat / (sqrt(v_hat) + eps).
// Deterministic; identical inputs and state give bitwise-identical outputs.
void adam_step(const std::vector<Matrix*>& params,
               const std::vector<const Matrix*>& grads, AdamState& state);

}  // namespace mqsa
