#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "cropmap/numeric/tensor.hpp"

namespace cropmap::numeric {

/// Handle to a value recorded on a Tape.
struct Var {
  std::size_t id = 0;
};

enum class OpKind {
  constant,
  parameter,
  matmul,
  add,
  mul,
  sigmoid,
  tanh,
  concat,
  mask_apply,
  bce,
  scale,
};

/// Clamp applied to probabilities inside the BCE primitive.
inline constexpr double kProbabilityEpsilon = 1e-7;

/// Reverse-mode gradient tape over a fixed primitive set.
///
/// Every primitive appends one node; backward() walks the nodes in reverse
/// execution order exactly once. Nodes that cannot reach a parameter leaf are
/// never given a gradient buffer. Not thread-safe: one tape per training step.
class Tape {
 public:
  Var constant(Tensor value);
  /// Leaf whose gradient is reported by backward() under `name`.
  Var parameter(std::string name, Tensor value);

  /// [m,k] x [k,n] -> [m,n]
  Var matmul(Var a, Var b);
  /// Same-shape sum, or [m,n] + [1,n] with the row vector broadcast.
  Var add(Var a, Var b);
  Var mul(Var a, Var b);
  Var sigmoid(Var a);
  Var tanh(Var a);
  /// Column-wise concatenation of two matrices with equal row counts.
  Var concat(Var a, Var b);
  /// Elementwise product with a constant mask (dropout).
  Var mask_apply(Var a, const Tensor& mask);
  /// -(1/denom) * sum_i w_i [y_i log p_i + (1-y_i) log(1-p_i)] with p clamped
  /// to [eps, 1-eps]. `weights` of zero drop a sample from the sum; denom = 0
  /// yields a zero loss.
  Var bce(Var probs, const Tensor& targets, const Tensor& weights, double denom);
  Var scale(Var a, double factor);

  const Tensor& value(Var v) const { return nodes_.at(v.id).value; }
  /// Gradient buffer for v after backward(); empty tensor if v was not reached.
  const Tensor& grad(Var v) const { return nodes_.at(v.id).grad; }
  OpKind kind(Var v) const { return nodes_.at(v.id).kind; }
  std::size_t size() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }

  /// Back-propagates from a scalar loss. Returns one gradient per parameter
  /// leaf; parameters not connected to the loss receive zeros.
  ParameterSet backward(Var loss);

 private:
  struct Node {
    OpKind kind = OpKind::constant;
    Tensor value{};
    Tensor grad{};
    Var lhs{};
    Var rhs{};
    Tensor aux{};   // mask, or BCE targets
    Tensor aux2{};  // BCE weights
    double factor = 0.0;
    bool requires_grad = false;
    std::string name{};
  };

  Var push(Node node);
  const Node& node(Var v) const { return nodes_.at(v.id); }
  Tensor& grad_buffer(Var v);
  void backward_node(std::size_t id);

  std::vector<Node> nodes_;
};

}  // namespace cropmap::numeric
