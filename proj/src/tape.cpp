#include "mqsa/tape.hpp"

namespace mqsa {

const std::vector<Index>& DiffTensor::shape() const {
  if (!valid()) throw ContractError("shape() on empty DiffTensor");
  return tape_->dims(id_);
}

const Matrix& DiffTensor::value() const {
  if (!valid()) throw ContractError("value() on empty DiffTensor");
  return tape_->value(id_);
}

const Matrix& DiffTensor::grad() const {
  if (!valid()) throw ContractError("grad() on empty DiffTensor");
  return tape_->grad(id_);
}

double DiffTensor::scalar_value() const {
  const Matrix& v = value();
  if (v.rows() != 1 || v.cols() != 1)
    throw ContractError("scalar_value() on tensor of shape " + shape_str(v));
  return v(0, 0);
}

DiffTensor Tape::leaf(Matrix value) {
  std::vector<Index> dims{value.rows(), value.cols()};
  return leaf(std::move(value), std::move(dims));
}

DiffTensor Tape::leaf(Matrix value, std::vector<Index> dims) {
  return node(std::move(value), std::move(dims));
}

DiffTensor Tape::scalar(double value) {
  Matrix m(1, 1);
  m(0, 0) = value;
  return node(std::move(m), {1, 1});
}

DiffTensor Tape::node(Matrix value, std::vector<Index> dims) {
  if (dims.empty()) throw DimensionError("node needs at least one extent");
  Index expect = 1;
  for (Index d : dims) {
    if (d <= 0) throw DimensionError("non-positive extent in " + shape_str(dims));
    expect *= d;
  }
  if (expect != value.rows() * value.cols())
    throw DimensionError("storage " + shape_str(value) + " does not hold " +
                         shape_str(dims));
  NodeRecord rec;
  rec.value = std::move(value);
  rec.dims = std::move(dims);
  nodes_.push_back(std::move(rec));
  grads_ready_ = false;
  return DiffTensor(this, static_cast<int>(nodes_.size()) - 1);
}

void Tape::on_backward(const DiffTensor& t, std::function<void()> fn) {
  if (t.tape() != this) throw ContractError("on_backward across tapes");
  nodes_.at(static_cast<std::size_t>(t.id())).backward = std::move(fn);
}

Matrix& Tape::grad(int id) {
  if (!grads_ready_)
    throw ContractError("grad() before backward()");
  return nodes_.at(static_cast<std::size_t>(id)).grad;
}

void Tape::backward(const DiffTensor& root) {
  if (root.tape() != this) throw ContractError("backward across tapes");
  const NodeRecord& r = nodes_.at(static_cast<std::size_t>(root.id()));
  if (r.value.rows() != 1 || r.value.cols() != 1)
    throw ContractError("backward root must be scalar, got " +
                        shape_str(r.value));
  for (NodeRecord& n : nodes_) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  grads_ready_ = true;
  nodes_[static_cast<std::size_t>(root.id())].grad(0, 0) = 1.0;
  for (int id = root.id(); id >= 0; --id) {
    const auto& fn = nodes_[static_cast<std::size_t>(id)].backward;
    if (fn) fn();
  }
}

}  // namespace mqsa
