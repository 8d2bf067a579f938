#pragma once

#include <deque>
#include <functional>
#include <initializer_list>
#include <string>
#include <utility>
#include <vector>

#include "wattcast/nn/tensor.hpp"

namespace wattcast::nn {

/// Trainable tensor with its gradient accumulator.
struct Param {
  std::string id;
  Tensor value;
  Tensor grad;

  Param(std::string id_, Tensor value_) : id(std::move(id_)), value(std::move(value_)), grad(value.shape()) {}

  void zero_grad() { grad.fill(0.0); }
};

class Tape;

/// Handle to a node recorded on a Tape. Cheap to copy; valid while the tape lives.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
};

/// Linear record of a forward computation. Nodes are appended in evaluation
/// order, which is a topological order, so backward() is one reverse sweep.
class Tape {
 public:
  /// Receives the gradient flowing into a node and adds into its parents'
  /// slots via grad_slot().
  using BackwardFn = std::function<void(Tape&, const Tensor& grad_out)>;

  /// With `record_gradients` false no backward closures are kept, which is
  /// what inference wants.
  explicit Tape(bool record_gradients = true) : record_gradients_(record_gradients) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool records_gradients() const noexcept { return record_gradients_; }
  std::size_t size() const noexcept { return nodes_.size(); }

  /// Leaf that never receives a gradient.
  Var constant(Tensor value) { return push(std::move(value), false, nullptr, {}); }

  /// Leaf whose gradient can be read back after backward().
  Var variable(Tensor value) { return push(std::move(value), record_gradients_, nullptr, {}); }

  /// Leaf bound to a Param; backward() adds into param.grad.
  Var param(Param& p) { return push(p.value, record_gradients_, &p, {}); }

  /// Appends an op result. The closure is dropped when no parent needs a gradient.
  Var record(Tensor value, std::initializer_list<Var> parents, BackwardFn fn) {
    bool needs = false;
    for (const Var& v : parents) needs = needs || nodes_[v.id].requires_grad;
    return push(std::move(value), needs, nullptr, needs ? std::move(fn) : BackwardFn{});
  }
  Var record(Tensor value, const std::vector<Var>& parents, BackwardFn fn) {
    bool needs = false;
    for (const Var& v : parents) needs = needs || nodes_[v.id].requires_grad;
    return push(std::move(value), needs, nullptr, needs ? std::move(fn) : BackwardFn{});
  }

  const Tensor& value(Var v) const { return nodes_.at(v.id).value; }
  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

  /// Gradient of the last backward() loss w.r.t. v (zeros if unreached).
  Tensor grad(Var v) const {
    const Node& n = nodes_.at(v.id);
    return n.grad.empty() ? Tensor(n.value.shape()) : n.grad;
  }

  /// Mutable gradient slot for node `id`, zero-initialised on first use.
  Tensor& grad_slot(std::size_t id) {
    Node& n = nodes_[id];
    if (n.grad.empty()) n.grad = Tensor(n.value.shape());
    return n.grad;
  }

  /// Reverse sweep from a scalar loss. Params reached get their gradient
  /// accumulated; others are untouched.
  void backward(Var loss) {
    if (loss.tape != this) throw ShapeError("backward: loss belongs to a different tape");
    Node& root = nodes_.at(loss.id);
    if (root.value.size() != 1)
      throw ShapeError("backward: loss must be scalar, got shape " + shape_str(root.value.shape()));
    if (!root.requires_grad) return;
    grad_slot(loss.id).fill(1.0);
    for (std::size_t i = loss.id + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (!n.requires_grad || n.grad.empty()) continue;
      if (n.param != nullptr) n.param->grad += n.grad;
      if (n.backward) n.backward(*this, n.grad);
    }
  }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    Param* param = nullptr;
    BackwardFn backward;
  };

  Var push(Tensor value, bool requires_grad, Param* param, BackwardFn fn) {
    nodes_.push_back(Node{std::move(value), Tensor{}, requires_grad, param, std::move(fn)});
    return Var{this, nodes_.size() - 1};
  }

  std::deque<Node> nodes_;
  bool record_gradients_;
};

inline const Tensor& Var::value() const { return tape->value(*this); }

}  // namespace wattcast::nn
