#include "mqsa/ops.hpp"

#include <cmath>

namespace mqsa {

namespace {

Tape* shared_tape(const DiffTensor& a, const DiffTensor& b) {
  if (!a.valid() || !b.valid()) throw ContractError("op on empty DiffTensor");
  if (a.tape() != b.tape()) throw ContractError("op across tapes");
  return a.tape();
}

void require_same_shape(const DiffTensor& a, const DiffTensor& b,
                        const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionError(std::string(op) + ": " + shape_str(a.value()) +
                         " vs " + shape_str(b.value()));
}

}  // namespace

Matrix softmax_rows_value(Matrix x, double temperature) {
  if (temperature <= 0.0)
    throw ParameterError("softmax temperature must be positive");
  // Scalar std::exp on purpose: deeply negative (masked) logits must come
  // out exactly zero, and Eigen's vectorized exp clamps instead of
  // underflowing. Rows here are short (attention width or one item set).
  const double inv_t = 1.0 / temperature;
  for (Index i = 0; i < x.rows(); ++i) {
    const double mx = x.row(i).maxCoeff();
    double sum = 0.0;
    for (Index j = 0; j < x.cols(); ++j) {
      const double e = std::exp((x(i, j) - mx) * inv_t);
      x(i, j) = e;
      sum += e;
    }
    x.row(i) /= sum;
  }
  return x;
}

DiffTensor matmul(const DiffTensor& a, const DiffTensor& b) {
  Tape* t = shared_tape(a, b);
  if (a.cols() != b.rows())
    throw DimensionError("matmul: " + shape_str(a.value()) + " x " +
                         shape_str(b.value()));
  DiffTensor out = t->node(a.value() * b.value(), {a.rows(), b.cols()});
  int ida = a.id(), idb = b.id(), ido = out.id();
  t->on_backward(out, [t, ida, idb, ido] {
    const Matrix& g = t->grad(ido);
    t->grad(ida).noalias() += g * t->value(idb).transpose();
    t->grad(idb).noalias() += t->value(ida).transpose() * g;
  });
  return out;
}

DiffTensor matmul_nt(const DiffTensor& a, const DiffTensor& b) {
  Tape* t = shared_tape(a, b);
  if (a.cols() != b.cols())
    throw DimensionError("matmul_nt: " + shape_str(a.value()) + " x " +
                         shape_str(b.value()) + "^T");
  DiffTensor out = t->node(a.value() * b.value().transpose(), {a.rows(), b.rows()});
  int ida = a.id(), idb = b.id(), ido = out.id();
  t->on_backward(out, [t, ida, idb, ido] {
    const Matrix& g = t->grad(ido);
    t->grad(ida).noalias() += g * t->value(idb);
    t->grad(idb).noalias() += g.transpose() * t->value(ida);
  });
  return out;
}

DiffTensor add(const DiffTensor& a, const DiffTensor& b) {
  return add_scaled(a, b, 1.0);
}

DiffTensor add_scaled(const DiffTensor& a, const DiffTensor& b, double alpha) {
  Tape* t = shared_tape(a, b);
  require_same_shape(a, b, "add_scaled");
  DiffTensor out = t->node(a.value() + alpha * b.value(),
                           {a.rows(), a.cols()});
  int ida = a.id(), idb = b.id(), ido = out.id();
  t->on_backward(out, [t, ida, idb, ido, alpha] {
    const Matrix& g = t->grad(ido);
    t->grad(ida) += g;
    t->grad(idb) += alpha * g;
  });
  return out;
}

DiffTensor scale(const DiffTensor& a, double alpha) {
  Tape* t = a.tape();
  if (t == nullptr) throw ContractError("scale on empty DiffTensor");
  DiffTensor out = t->node(alpha * a.value(), {a.rows(), a.cols()});
  int ida = a.id(), ido = out.id();
  t->on_backward(out, [t, ida, ido, alpha] {
    t->grad(ida) += alpha * t->grad(ido);
  });
  return out;
}

DiffTensor add_row_broadcast(const DiffTensor& x, const DiffTensor& row) {
  Tape* t = shared_tape(x, row);
  if (row.rows() != 1 || row.cols() != x.cols())
    throw DimensionError("add_row_broadcast: " + shape_str(x.value()) + " + " +
                         shape_str(row.value()));
  Matrix y = x.value();
  y.rowwise() += row.value().row(0);
  DiffTensor out = t->node(std::move(y), {x.rows(), x.cols()});
  int idx = x.id(), idr = row.id(), ido = out.id();
  t->on_backward(out, [t, idx, idr, ido] {
    const Matrix& g = t->grad(ido);
    t->grad(idx) += g;
    t->grad(idr).row(0) += g.colwise().sum();
  });
  return out;
}

DiffTensor relu(const DiffTensor& x) {
  Tape* t = x.tape();
  if (t == nullptr) throw ContractError("relu on empty DiffTensor");
  DiffTensor out = t->node(x.value().cwiseMax(0.0), {x.rows(), x.cols()});
  int idx = x.id(), ido = out.id();
  t->on_backward(out, [t, idx, ido] {
    const Matrix& xs = t->value(idx);
    t->grad(idx).array() +=
        t->grad(ido).array() * (xs.array() > 0.0).cast<double>();
  });
  return out;
}

DiffTensor softmax_rows(const DiffTensor& x, double temperature) {
  Tape* t = x.tape();
  if (t == nullptr) throw ContractError("softmax_rows on empty DiffTensor");
  DiffTensor out =
      t->node(softmax_rows_value(x.value(), temperature), {x.rows(), x.cols()});
  int idx = x.id(), ido = out.id();
  t->on_backward(out, [t, idx, ido, temperature] {
    const Matrix& y = t->value(ido);
    const Matrix& g = t->grad(ido);
    Vector dot = (g.array() * y.array()).rowwise().sum().matrix();
    Matrix dz = (y.array() * (g.colwise() - dot).array()).matrix();
    t->grad(idx) += dz / temperature;
  });
  return out;
}

DiffTensor layer_norm(const DiffTensor& x, const DiffTensor& gain,
                      const DiffTensor& bias, double eps) {
  Tape* t = shared_tape(x, gain);
  shared_tape(x, bias);
  if (gain.rows() != 1 || gain.cols() != x.cols() || bias.rows() != 1 ||
      bias.cols() != x.cols())
    throw DimensionError("layer_norm: gain/bias must be [1," +
                         std::to_string(x.cols()) + "]");
  const Matrix& xv = x.value();
  Vector mean = xv.rowwise().mean();
  Matrix centered = xv.colwise() - mean;
  Vector var = centered.array().square().rowwise().mean().matrix();
  Vector inv_std = (var.array() + eps).sqrt().inverse().matrix();
  Matrix hat = (centered.array().colwise() * inv_std.array()).matrix();
  Matrix y = (hat.array().rowwise() * gain.value().row(0).array()).matrix();
  y.rowwise() += bias.value().row(0);
  DiffTensor out = t->node(std::move(y), {x.rows(), x.cols()});
  int idx = x.id(), idg = gain.id(), idb = bias.id(), ido = out.id();
  t->on_backward(out, [t, idx, idg, idb, ido, hat, inv_std] {
    const Matrix& g = t->grad(ido);
    t->grad(idg).row(0) += (g.array() * hat.array()).colwise().sum().matrix();
    t->grad(idb).row(0) += g.colwise().sum();
    Matrix dhat = (g.array().rowwise() * t->value(idg).row(0).array()).matrix();
    Vector m1 = dhat.rowwise().mean();
    Vector m2 = (dhat.array() * hat.array()).rowwise().mean().matrix();
    Matrix dx = (((dhat.colwise() - m1).array() -
                  hat.array().colwise() * m2.array())
                     .colwise() *
                 inv_std.array())
                    .matrix();
    t->grad(idx) += dx;
  });
  return out;
}

DiffTensor dropout(const DiffTensor& x, double rate, SplitMix64& rng,
                   bool training) {
  Tape* t = x.tape();
  if (t == nullptr) throw ContractError("dropout on empty DiffTensor");
  if (rate < 0.0 || rate >= 1.0)
    throw ParameterError("dropout rate must be in [0,1)");
  if (!training || rate == 0.0) {
    DiffTensor out = t->node(x.value(), {x.rows(), x.cols()});
    int idx = x.id(), ido = out.id();
    t->on_backward(out, [t, idx, ido] { t->grad(idx) += t->grad(ido); });
    return out;
  }
  MaskMatrix mask(x.rows(), x.cols());
  for (Index i = 0; i < x.rows(); ++i)
    for (Index j = 0; j < x.cols(); ++j)
      mask(i, j) = rng.next_double() >= rate ? 1 : 0;
  double keep = 1.0 - rate;
  Matrix y = ((x.value().array() * mask.cast<double>().array()) / keep).matrix();
  DiffTensor out = t->node(std::move(y), {x.rows(), x.cols()});
  int idx = x.id(), ido = out.id();
  t->on_backward(out, [t, idx, ido, mask, keep] {
    t->grad(idx).array() +=
        t->grad(ido).array() * mask.cast<double>().array() / keep;
  });
  return out;
}

DiffTensor slice_rows(const DiffTensor& x, Index begin, Index count) {
  Tape* t = x.tape();
  if (t == nullptr) throw ContractError("slice_rows on empty DiffTensor");
  if (begin < 0 || count <= 0 || begin + count > x.rows())
    throw DimensionError("slice_rows [" + std::to_string(begin) + "," +
                         std::to_string(begin + count) + ") of " +
                         shape_str(x.value()));
  DiffTensor out = t->node(x.value().middleRows(begin, count), {count, x.cols()});
  int idx = x.id(), ido = out.id();
  t->on_backward(out, [t, idx, ido, begin, count] {
    t->grad(idx).middleRows(begin, count) += t->grad(ido);
  });
  return out;
}

DiffTensor sum_squares(const DiffTensor& x) {
  Tape* t = x.tape();
  if (t == nullptr) throw ContractError("sum_squares on empty DiffTensor");
  DiffTensor out = t->scalar(x.value().squaredNorm());
  int idx = x.id(), ido = out.id();
  t->on_backward(out, [t, idx, ido] {
    t->grad(idx) += 2.0 * t->grad(ido)(0, 0) * t->value(idx);
  });
  return out;
}

DiffTensor weighted_sum(const DiffTensor& a, double alpha, const DiffTensor& b,
                        double beta) {
  Tape* t = shared_tape(a, b);
  require_same_shape(a, b, "weighted_sum");
  DiffTensor out =
      t->node(alpha * a.value() + beta * b.value(), {a.rows(), a.cols()});
  int ida = a.id(), idb = b.id(), ido = out.id();
  t->on_backward(out, [t, ida, idb, ido, alpha, beta] {
    const Matrix& g = t->grad(ido);
    t->grad(ida) += alpha * g;
    t->grad(idb) += beta * g;
  });
  return out;
}

}  // namespace mqsa
