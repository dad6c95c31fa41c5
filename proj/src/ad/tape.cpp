#include "zpt/ad/tape.hpp"

#include "zpt/errors.hpp"

namespace zpt::ad {

const Matrix& Var::value() const {
  if (tape_ == nullptr) throw StateError("Var::value on an unbound variable");
  return tape_->value(id_);
}

Var Tape::constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, {}, nullptr, false});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::param(Parameter& p) {
  nodes_.push_back(Node{p.value, {}, {}, &p, true});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::input(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, {}, nullptr, true});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::record(Matrix value, std::initializer_list<Var> parents, BackwardFn fn) {
  bool needs = false;
  for (const Var& p : parents) {
    if (p.tape() != this) throw ContractError("Tape::record: parent from another tape");
    needs = needs || nodes_[p.id()].needs_grad;
  }
  nodes_.push_back(Node{std::move(value), {}, needs ? std::move(fn) : BackwardFn{}, nullptr, needs});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::record(Matrix value, const std::vector<Var>& parents, BackwardFn fn) {
  bool needs = false;
  for (const Var& p : parents) {
    if (p.tape() != this) throw ContractError("Tape::record: parent from another tape");
    needs = needs || nodes_[p.id()].needs_grad;
  }
  nodes_.push_back(Node{std::move(value), {}, needs ? std::move(fn) : BackwardFn{}, nullptr, needs});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

void Tape::backward(Var root) {
  if (root.tape() != this) throw ContractError("Tape::backward: root from another tape");
  if (root.rows() != 1 || root.cols() != 1) {
    throw ContractError("Tape::backward: root must be a 1x1 scalar");
  }
  accumulate(root.id(), Matrix::Ones(1, 1));
  for (int id = root.id(); id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.needs_grad || n.grad.size() == 0) continue;
    if (n.backward) n.backward(*this, id);
    if (n.param != nullptr) {
      if (n.param->grad.rows() != n.value.rows() || n.param->grad.cols() != n.value.cols()) {
        n.param->grad = n.grad;
      } else {
        n.param->grad += n.grad;
      }
    }
  }
}

}  // namespace zpt::ad
