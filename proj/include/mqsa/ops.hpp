#pragma once

#include "mqsa/rng.hpp"
#include "mqsa/tape.hpp"

namespace mqsa {

// Differentiable ops over tape tensors. All are free functions that allocate
// one output node and register its backward closure; inputs must share a tape.
// 2-D shapes are checked eagerly and mismatches raise DimensionError.

// c = a * b            [m,k] x [k,n] -> [m,n]
DiffTensor matmul(const DiffTensor& a, const DiffTensor& b);
// c = a * b^T          [m,k] x [n,k] -> [m,n]
DiffTensor matmul_nt(const DiffTensor& a, const DiffTensor& b);

DiffTensor add(const DiffTensor& a, const DiffTensor& b);
// a + alpha * b, elementwise; alpha is a constant, not a tape node.
DiffTensor add_scaled(const DiffTensor& a, const DiffTensor& b, double alpha);
DiffTensor scale(const DiffTensor& a, double alpha);
// x + row (row broadcast across all rows of x).
DiffTensor add_row_broadcast(const DiffTensor& x, const DiffTensor& row);

DiffTensor relu(const DiffTensor& x);

// Row-wise softmax of x / temperature.
DiffTensor softmax_rows(const DiffTensor& x, double temperature = 1.0);

// Row-wise layer norm with learned gain and bias (shape [1, d] each):
// y = gain .* (x - mean) / sqrt(var + eps) + bias, statistics per row.
DiffTensor layer_norm(const DiffTensor& x, const DiffTensor& gain,
                      const DiffTensor& bias, double eps = 1e-8);

// Inverted dropout: zero with probability rate, scale survivors by
// 1/(1-rate). Identity when !training or rate == 0. Consumes one uniform
// per element (row-major order) from rng whenever it would drop, so RNG
// state advances deterministically.
DiffTensor dropout(const DiffTensor& x, double rate, SplitMix64& rng,
                   bool training);

// Rows [begin, begin+count) of x as a new node.
DiffTensor slice_rows(const DiffTensor& x, Index begin, Index count);

// Scalar sum of squared entries.
DiffTensor sum_squares(const DiffTensor& x);

// alpha * a + beta * b, elementwise (shapes must match).
DiffTensor weighted_sum(const DiffTensor& a, double alpha, const DiffTensor& b,
                        double beta);

// Non-tape kernel shared by the ops and plain numeric callers.
Matrix softmax_rows_value(Matrix x, double temperature = 1.0);

}  // namespace mqsa
