#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "jointnlu/tensor.hpp"

namespace jointnlu {

/// A trainable array with its accumulated gradient.
template <typename Scalar>
struct Parameter {
  std::string name;
  Tensor<Scalar> value;
  Tensor<Scalar> grad;
};

/// Named parameters in a fixed order. Order defines checkpoint layout.
template <typename Scalar>
class ParameterSet {
 public:
  std::size_t add(std::string name, Tensor<Scalar> value) {
    if (find(name) != npos) throw Error("duplicate parameter name '" + name + "'");
    Tensor<Scalar> grad(value.shape());
    items_.push_back({std::move(name), std::move(value), std::move(grad)});
    return items_.size() - 1;
  }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  std::size_t find(std::string_view name) const {
    for (std::size_t i = 0; i < items_.size(); ++i) {
      if (items_[i].name == name) return i;
    }
    return npos;
  }

  Parameter<Scalar>& operator[](std::size_t i) { return items_[i]; }
  const Parameter<Scalar>& operator[](std::size_t i) const { return items_[i]; }
  Parameter<Scalar>& at(std::string_view name) { return items_.at(checked(name)); }
  const Parameter<Scalar>& at(std::string_view name) const {
    return items_.at(checked(name));
  }

  std::size_t size() const { return items_.size(); }
  auto begin() { return items_.begin(); }
  auto end() { return items_.end(); }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

  void zero_grad() {
    for (auto& p : items_) p.grad.data().setZero();
  }

  /// Total number of scalar coordinates.
  std::size_t coordinates() const {
    std::size_t n = 0;
    for (const auto& p : items_) n += static_cast<std::size_t>(p.value.size());
    return n;
  }

 private:
  std::size_t checked(std::string_view name) const {
    const std::size_t i = find(name);
    if (i == npos) throw Error("no parameter named '" + std::string(name) + "'");
    return i;
  }

  std::vector<Parameter<Scalar>> items_;
};

/// Handle to a value recorded on a Tape.
struct Var {
  std::size_t id = static_cast<std::size_t>(-1);
};

/// Ordered record of primitive applications. Nodes are appended after their
/// inputs, so a reverse sweep visits consumers before producers. A tape is
/// confined to one thread; use one tape per forward/backward pass.
template <typename Scalar>
class Tape {
 public:
  using TensorT = Tensor<Scalar>;
  /// Called during backward with this tape and the node's own id; reads the
  /// node's gradient and accumulates into its inputs.
  using BackwardFn = std::function<void(Tape&, std::size_t)>;

  /// Value with no gradient.
  Var constant(TensorT value) {
    nodes_.push_back({std::move(value), {}, false, {}});
    return {nodes_.size() - 1};
  }

  /// Leaf whose gradient is added into `param.grad` by backward().
  Var parameter(Parameter<Scalar>& param) {
    Parameter<Scalar>* target = &param;
    nodes_.push_back({param.value, {}, true, [target](Tape& t, std::size_t self) {
                        target->grad.data() += t.nodes_[self].grad.data();
                      }});
    return {nodes_.size() - 1};
  }

  /// Leaf that requires a gradient but is owned by the tape; read it back
  /// with grad() after backward().
  Var variable(TensorT value) {
    nodes_.push_back({std::move(value), {}, true, {}});
    return {nodes_.size() - 1};
  }

  /// Appends the result of a primitive. The node tracks gradients iff
  /// `requires_grad`; `backward` is dropped otherwise.
  Var record(TensorT value, bool requires_grad, BackwardFn backward) {
    nodes_.push_back({std::move(value), {}, requires_grad,
                      requires_grad ? std::move(backward) : BackwardFn{}});
    return {nodes_.size() - 1};
  }

  const TensorT& value(Var v) const { return nodes_.at(v.id).value; }
  const Shape& shape(Var v) const { return value(v).shape(); }
  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }

  /// Gradient buffer of `v`, zero-initialized on first access.
  TensorT& grad(Var v) { return grad_at(v.id); }
  bool has_grad(Var v) const { return !nodes_.at(v.id).grad.empty(); }

  std::size_t size() const { return nodes_.size(); }

  /// Reverse accumulation from a scalar loss. Nodes with no path to the loss
  /// keep an empty (zero) gradient.
  void backward(Var loss) {
    if (value(loss).size() != 1) {
      throw ShapeError("backward: loss must be a scalar, got shape " +
                       shape(loss).str());
    }
    grad_at(loss.id).data().setConstant(Scalar(1));
    for (std::size_t i = loss.id + 1; i-- > 0;) {
      Node& node = nodes_[i];
      if (!node.requires_grad || node.grad.empty() || !node.backward) continue;
      node.backward(*this, i);
    }
  }

 private:
  struct Node {
    TensorT value;
    TensorT grad;
    bool requires_grad = false;
    BackwardFn backward;
  };

  TensorT& grad_at(std::size_t id) {
    Node& node = nodes_.at(id);
    if (node.grad.empty()) node.grad = TensorT(node.value.shape());
    return node.grad;
  }

  std::vector<Node> nodes_;
};

}  // namespace jointnlu
