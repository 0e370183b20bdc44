#include "mqsa/adam.hpp"

#include <cmath>

namespace mqsa {

void adam_step(const std::vector<Matrix*>& params,
               const std::vector<const Matrix*>& grads, AdamState& state) {
  if (params.size() != grads.size())
    throw DimensionError("adam_step: param/grad count mismatch");
  if (state.first_moment.empty()) {
    state.first_moment.reserve(params.size());
    state.second_moment.reserve(params.size());
    for (const Matrix* p : params) {
      state.first_moment.push_back(Matrix::Zero(p->rows(), p->cols()));
      state.second_moment.push_back(Matrix::Zero(p->rows(), p->cols()));
    }
  }
  if (state.first_moment.size() != params.size())
    throw DimensionError("adam_step: state tracks a different parameter set");
  state.step_count += 1;
  double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
  double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix& p = *params[i];
    const Matrix& g = *grads[i];
    if (p.rows() != g.rows() || p.cols() != g.cols())
      throw DimensionError("adam_step: param " + std::to_string(i) + " is " +
                           shape_str(p) + " but grad is " + shape_str(g));
    Matrix& m = state.first_moment[i];
    Matrix& v = state.second_moment[i];
    m = state.beta1 * m + (1.0 - state.beta1) * g;
    v.array() = state.beta2 * v.array() + (1.0 - state.beta2) * g.array().square();
    Matrix m_hat = m / bc1;
    Matrix v_hat = v / bc2;
    p.array() -= state.learning_rate * m_hat.array() /
                 (v_hat.array().sqrt() + state.epsilon);
  }
}

}  // namespace mqsa
