#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "mqsa/common.hpp"

namespace mqsa {

class Tape;

// Handle to one node on a Tape: a dense array with a logical shape, a value,
// and (after backward) a gradient of the same shape. Cheap to copy; all
// storage lives on the tape.
//
// Storage convention: a tensor of shape [d0, ..., dk] is held as a row-major
// matrix with d0*...*d(k-1) rows and dk columns, so the last axis is always
// the contiguous feature axis.
class DiffTensor {
 public:
  DiffTensor() = default;

  bool valid() const { return tape_ != nullptr; }
  Tape* tape() const { return tape_; }
  int id() const { return id_; }

  const std::vector<Index>& shape() const;
  const Matrix& value() const;
  const Matrix& grad() const;

  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  bool is_scalar() const { return rows() == 1 && cols() == 1; }
  double scalar_value() const;

 private:
  friend class Tape;
  DiffTensor(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  int id_ = -1;
};

// Reverse-mode tape. backward() replays node closures in reverse creation
// order, which is a topological order of the DAG because an op's inputs
// always exist before its output. One backward pass at a time per tape.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaves: inputs and parameters. The two-argument form attaches a logical
  // shape whose row/column product must match the storage.
  DiffTensor leaf(Matrix value);
  DiffTensor leaf(Matrix value, std::vector<Index> dims);
  DiffTensor scalar(double value);

  // Op-construction surface: allocate the output node, then register the
  // closure that scatters its gradient into the inputs. Closures read
  // grad(id) of the output and accumulate += into grad(parent).
  DiffTensor node(Matrix value, std::vector<Index> dims);
  void on_backward(const DiffTensor& t, std::function<void()> fn);

  const Matrix& value(int id) const { return nodes_.at(static_cast<std::size_t>(id)).value; }
  const std::vector<Index>& dims(int id) const { return nodes_.at(static_cast<std::size_t>(id)).dims; }
  Matrix& grad(int id);
  bool grads_ready() const { return grads_ready_; }

  // Seeds root (a scalar) with gradient 1 and replays every closure with
  // id <= root in descending order.
  void backward(const DiffTensor& root);

  int size() const { return static_cast<int>(nodes_.size()); }

 private:
  struct NodeRecord {
    Matrix value;
    Matrix grad;
    std::vector<Index> dims;
    std::function<void()> backward;
  };

  std::vector<NodeRecord> nodes_;
  bool grads_ready_ = false;
};

}  // namespace mqsa
