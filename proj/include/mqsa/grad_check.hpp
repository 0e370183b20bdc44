#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "mqsa/common.hpp"
#include "mqsa/tape.hpp"

namespace mqsa {

// Builds a scalar computation from the given leaf values on the supplied
// tape and returns the root together with the leaf handles whose gradients
// are under test. The builder is called many times and must be a pure
// function of its inputs (seed any RNG it uses internally).
using GradCheckFn = std::function<std::pair<DiffTensor, std::vector<DiffTensor>>(
    Tape&, const std::vector<Matrix>&)>;

struct GradCheckResult {
  double max_rel_err = 0.0;
  int worst_leaf = -1;
  Index worst_row = -1;
  Index worst_col = -1;
};

// Central finite differences against tape gradients, elementwise over every
// leaf. Relative error is |a - n| / max(floor, |a| + |n|).
GradCheckResult grad_check(const GradCheckFn& fn,
                           const std::vector<Matrix>& values, double h = 1e-5,
                           double floor = 1e-8);

}  // namespace mqsa
