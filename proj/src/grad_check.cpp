#include "mqsa/grad_check.hpp"

#include <cmath>

namespace mqsa {

namespace {

double eval_at(const GradCheckFn& fn, const std::vector<Matrix>& values) {
  Tape tape;
  auto [root, leaves] = fn(tape, values);
  (void)leaves;
  return root.scalar_value();
}

}  // namespace

GradCheckResult grad_check(const GradCheckFn& fn,
                           const std::vector<Matrix>& values, double h,
                           double floor) {
  std::vector<Matrix> analytic;
  {
    Tape tape;
    auto [root, leaves] = fn(tape, values);
    tape.backward(root);
    analytic.reserve(leaves.size());
    for (const DiffTensor& leaf : leaves) analytic.push_back(leaf.grad());
    if (leaves.size() != values.size())
      throw ContractError("grad_check: builder returned " +
                          std::to_string(leaves.size()) + " leaves for " +
                          std::to_string(values.size()) + " value arrays");
  }
  GradCheckResult result;
  std::vector<Matrix> probe = values;
  for (std::size_t l = 0; l < values.size(); ++l) {
    for (Index i = 0; i < values[l].rows(); ++i) {
      for (Index j = 0; j < values[l].cols(); ++j) {
        double orig = probe[l](i, j);
        probe[l](i, j) = orig + h;
        double f_plus = eval_at(fn, probe);
        probe[l](i, j) = orig - h;
        double f_minus = eval_at(fn, probe);
        probe[l](i, j) = orig;
        double numeric = (f_plus - f_minus) / (2.0 * h);
        double a = analytic[l](i, j);
        double rel = std::abs(a - numeric) /
                     std::max(floor, std::abs(a) + std::abs(numeric));
        if (rel > result.max_rel_err) {
          result.max_rel_err = rel;
          result.worst_leaf = static_cast<int>(l);
          result.worst_row = i;
          result.worst_col = j;
        }
      }
    }
  }
  return result;
}

}  // namespace mqsa
