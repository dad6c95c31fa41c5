#pragma once

// Minimal reverse-mode automatic differentiation over dense Eigen matrices.
//
// A Tape records every intermediate value produced during a forward pass
// together with a closure that pushes the node's gradient to its parents.
// Values are float64 throughout so that finite-difference checks are
// meaningful. A Tape is single-use and not thread-safe; separate threads
// use separate tapes.

#include <Eigen/Dense>

#include <deque>
#include <functional>
#include <string>
#include <vector>

namespace zpt::ad {

// Row-major: most ops here are row-wise (softmax, layer norm, gathers).
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

// A named trainable tensor plus its gradient accumulator.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter() = default;
  Parameter(std::string n, Matrix v) : name(std::move(n)), value(std::move(v)) {}

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
  Eigen::Index size() const { return value.size(); }
};

class Tape;

// Handle to a node recorded on a Tape.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  double scalar() const { return value()(0, 0); }

  Tape* tape() const { return tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, int self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaf that never receives gradient.
  Var constant(Matrix value);

  // Leaf bound to a parameter; backward() adds into parameter.grad.
  Var param(Parameter& p);

  // Leaf that receives gradient but is not bound to a parameter; read the
  // result with grad() after backward().
  Var input(Matrix value);

  // Records an interior node. `parents` decides whether the node needs a
  // gradient; `fn` is only invoked when it does.
  Var record(Matrix value, std::initializer_list<Var> parents, BackwardFn fn);
  Var record(Matrix value, const std::vector<Var>& parents, BackwardFn fn);

  // Seeds d(root)/d(root) = 1 and runs the recorded closures in reverse.
  // Root must be 1x1.
  void backward(Var root);

  const Matrix& value(int id) const { return nodes_[id].value; }
  bool needs_grad(int id) const { return nodes_[id].needs_grad; }

  // Gradient of node `id`; zero-sized if nothing flowed into it.
  const Matrix& grad(int id) const { return nodes_[id].grad; }
  const Matrix& grad(Var v) const { return grad(v.id()); }

  // Adds `delta` into the gradient of `id` when the node needs one.
  template <typename Derived>
  void accumulate(int id, const Eigen::MatrixBase<Derived>& delta) {
    Node& n = nodes_[id];
    if (!n.needs_grad) return;
    if (n.grad.size() == 0) {
      n.grad = delta;
    } else {
      n.grad += delta;
    }
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    BackwardFn backward;
    Parameter* param = nullptr;
    bool needs_grad = false;
  };

  // deque keeps references to recorded values stable while recording.
  std::deque<Node> nodes_;
};

}  // namespace zpt::ad
