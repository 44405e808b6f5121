#include "cropmap/numeric/tape.hpp"

#include <algorithm>
#include <cmath>

#include "cropmap/error.hpp"

namespace cropmap::numeric {

namespace {

double stable_sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void require_rank2(const Tensor& t, const char* op) {
  if (t.shape().size() != 2) {
    throw NumericError(std::string(op) + ": expected a matrix, got " +
                       shape_string(t.shape()));
  }
}

void shape_mismatch(const char* op, const Tensor& a, const Tensor& b) {
  throw NumericError(std::string(op) + ": incompatible shapes " + shape_string(a.shape()) +
                     " and " + shape_string(b.shape()));
}

void check_finite(const Tensor& t, const char* op) {
  if (!t.all_finite()) throw NumericError(std::string(op) + ": non-finite output");
}

}  // namespace

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var{nodes_.size() - 1};
}

Var Tape::constant(Tensor value) {
  Node n{.kind = OpKind::constant, .value = std::move(value)};
  return push(std::move(n));
}

Var Tape::parameter(std::string name, Tensor value) {
  Node n{.kind = OpKind::parameter, .value = std::move(value)};
  n.requires_grad = true;
  n.name = std::move(name);
  return push(std::move(n));
}

Var Tape::matmul(Var a, Var b) {
  const Tensor& x = node(a).value;
  const Tensor& y = node(b).value;
  require_rank2(x, "matmul");
  require_rank2(y, "matmul");
  const std::size_t m = x.rows(), k = x.cols(), n = y.cols();
  if (y.rows() != k) shape_mismatch("matmul", x, y);

  Tensor out({m, n});
  const double* xp = x.data();
  const double* yp = y.data();
  double* op = out.data();
  for (std::size_t i = 0; i < m; ++i) {
    double* row = op + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double s = xp[i * k + p];
      const double* yrow = yp + p * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += s * yrow[j];
    }
  }
  check_finite(out, "matmul");
  Node nd{.kind = OpKind::matmul, .value = std::move(out), .lhs = a, .rhs = b};
  nd.requires_grad = node(a).requires_grad || node(b).requires_grad;
  return push(std::move(nd));
}

Var Tape::add(Var a, Var b) {
  const Tensor& x = node(a).value;
  const Tensor& y = node(b).value;
  Tensor out = x;
  if (x.same_shape(y)) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += y[i];
  } else {
    require_rank2(x, "add");
    require_rank2(y, "add");
    if (y.rows() != 1 || y.cols() != x.cols()) shape_mismatch("add", x, y);
    const std::size_t n = x.cols();
    for (std::size_t i = 0; i < x.rows(); ++i)
      for (std::size_t j = 0; j < n; ++j) out[i * n + j] += y[j];
  }
  check_finite(out, "add");
  Node nd{.kind = OpKind::add, .value = std::move(out), .lhs = a, .rhs = b};
  nd.requires_grad = node(a).requires_grad || node(b).requires_grad;
  return push(std::move(nd));
}

Var Tape::mul(Var a, Var b) {
  const Tensor& x = node(a).value;
  const Tensor& y = node(b).value;
  if (!x.same_shape(y)) shape_mismatch("mul", x, y);
  Tensor out = x;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= y[i];
  check_finite(out, "mul");
  Node nd{.kind = OpKind::mul, .value = std::move(out), .lhs = a, .rhs = b};
  nd.requires_grad = node(a).requires_grad || node(b).requires_grad;
  return push(std::move(nd));
}

Var Tape::sigmoid(Var a) {
  Tensor out = node(a).value;
  for (double& v : out.values()) v = stable_sigmoid(v);
  check_finite(out, "sigmoid");
  Node nd{.kind = OpKind::sigmoid, .value = std::move(out), .lhs = a};
  nd.requires_grad = node(a).requires_grad;
  return push(std::move(nd));
}

Var Tape::tanh(Var a) {
  Tensor out = node(a).value;
  for (double& v : out.values()) v = std::tanh(v);
  check_finite(out, "tanh");
  Node nd{.kind = OpKind::tanh, .value = std::move(out), .lhs = a};
  nd.requires_grad = node(a).requires_grad;
  return push(std::move(nd));
}

Var Tape::concat(Var a, Var b) {
  const Tensor& x = node(a).value;
  const Tensor& y = node(b).value;
  require_rank2(x, "concat");
  require_rank2(y, "concat");
  if (x.rows() != y.rows()) shape_mismatch("concat", x, y);
  const std::size_t m = x.rows(), nx = x.cols(), ny = y.cols();
  Tensor out({m, nx + ny});
  for (std::size_t i = 0; i < m; ++i) {
    std::copy_n(x.data() + i * nx, nx, out.data() + i * (nx + ny));
    std::copy_n(y.data() + i * ny, ny, out.data() + i * (nx + ny) + nx);
  }
  Node nd{.kind = OpKind::concat, .value = std::move(out), .lhs = a, .rhs = b};
  nd.requires_grad = node(a).requires_grad || node(b).requires_grad;
  return push(std::move(nd));
}

Var Tape::mask_apply(Var a, const Tensor& mask) {
  const Tensor& x = node(a).value;
  if (!x.same_shape(mask)) shape_mismatch("mask_apply", x, mask);
  Tensor out = x;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
  check_finite(out, "mask_apply");
  Node nd{.kind = OpKind::mask_apply, .value = std::move(out), .lhs = a, .aux = mask};
  nd.requires_grad = node(a).requires_grad;
  return push(std::move(nd));
}

Var Tape::bce(Var probs, const Tensor& targets, const Tensor& weights, double denom) {
  const Tensor& p = node(probs).value;
  if (p.size() != targets.size()) shape_mismatch("bce", p, targets);
  if (p.size() != weights.size()) shape_mismatch("bce", p, weights);
  double total = 0.0;
  if (denom != 0.0) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (weights[i] == 0.0) continue;
      const double q = std::clamp(p[i], kProbabilityEpsilon, 1.0 - kProbabilityEpsilon);
      const double y = targets[i];
      total += weights[i] * (y * std::log(q) + (1.0 - y) * std::log(1.0 - q));
    }
    total = -total / denom;
  }
  Tensor out = Tensor::scalar(total);
  check_finite(out, "bce");
  Node nd{.kind = OpKind::bce, .value = std::move(out), .lhs = probs, .aux = targets,
          .aux2 = weights, .factor = denom};
  nd.requires_grad = node(probs).requires_grad;
  return push(std::move(nd));
}

Var Tape::scale(Var a, double factor) {
  Tensor out = node(a).value;
  for (double& v : out.values()) v *= factor;
  check_finite(out, "scale");
  Node nd{.kind = OpKind::scale, .value = std::move(out), .lhs = a, .factor = factor};
  nd.requires_grad = node(a).requires_grad;
  return push(std::move(nd));
}

Tensor& Tape::grad_buffer(Var v) {
  Node& n = nodes_.at(v.id);
  if (n.grad.size() == 0) n.grad = Tensor::zeros_like(n.value);
  return n.grad;
}

ParameterSet Tape::backward(Var loss) {
  if (nodes_.empty()) throw NumericError("backward: empty tape");
  if (!node(loss).value.is_scalar()) {
    throw NumericError("backward: loss must be scalar, got " +
                       shape_string(node(loss).value.shape()));
  }
  for (Node& n : nodes_) n.grad = Tensor();
  if (node(loss).requires_grad) {
    grad_buffer(loss)[0] = 1.0;
    for (std::size_t id = loss.id + 1; id-- > 0;) {
      if (nodes_[id].requires_grad && nodes_[id].grad.size() != 0) backward_node(id);
    }
  }

  ParameterSet grads;
  for (const Node& n : nodes_) {
    if (n.kind != OpKind::parameter) continue;
    Tensor g = n.grad.size() ? n.grad : Tensor::zeros_like(n.value);
    auto [it, inserted] = grads.try_emplace(n.name, std::move(g));
    if (!inserted) it->second.accumulate(n.grad.size() ? n.grad : Tensor::zeros_like(n.value));
  }
  return grads;
}

void Tape::backward_node(std::size_t id) {
  // Copy the handles; grad_buffer() may touch other nodes but never resizes.
  const Node& n = nodes_[id];
  const Tensor& g = n.grad;
  const bool lhs_grad = nodes_[n.lhs.id].requires_grad;

  switch (n.kind) {
    case OpKind::constant:
    case OpKind::parameter:
      return;

    case OpKind::matmul: {
      const Tensor& x = nodes_[n.lhs.id].value;
      const Tensor& y = nodes_[n.rhs.id].value;
      const std::size_t m = x.rows(), k = x.cols(), cols = y.cols();
      if (lhs_grad) {
        Tensor& gx = grad_buffer(n.lhs);
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t p = 0; p < k; ++p) {
            double s = 0.0;
            for (std::size_t j = 0; j < cols; ++j) s += g[i * cols + j] * y[p * cols + j];
            gx[i * k + p] += s;
          }
      }
      if (nodes_[n.rhs.id].requires_grad) {
        Tensor& gy = grad_buffer(n.rhs);
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t p = 0; p < k; ++p) {
            const double s = x[i * k + p];
            for (std::size_t j = 0; j < cols; ++j) gy[p * cols + j] += s * g[i * cols + j];
          }
      }
      return;
    }

    case OpKind::add: {
      if (lhs_grad) grad_buffer(n.lhs).accumulate(g);
      if (nodes_[n.rhs.id].requires_grad) {
        Tensor& gy = grad_buffer(n.rhs);
        if (gy.size() == g.size()) {
          gy.accumulate(g);
        } else {
          const std::size_t cols = gy.size();
          for (std::size_t i = 0; i < g.size(); ++i) gy[i % cols] += g[i];
        }
      }
      return;
    }

    case OpKind::mul: {
      const Tensor& x = nodes_[n.lhs.id].value;
      const Tensor& y = nodes_[n.rhs.id].value;
      if (lhs_grad) {
        Tensor& gx = grad_buffer(n.lhs);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * y[i];
      }
      if (nodes_[n.rhs.id].requires_grad) {
        Tensor& gy = grad_buffer(n.rhs);
        for (std::size_t i = 0; i < g.size(); ++i) gy[i] += g[i] * x[i];
      }
      return;
    }

    case OpKind::sigmoid: {
      Tensor& gx = grad_buffer(n.lhs);
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double s = n.value[i];
        gx[i] += g[i] * s * (1.0 - s);
      }
      return;
    }

    case OpKind::tanh: {
      Tensor& gx = grad_buffer(n.lhs);
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double t = n.value[i];
        gx[i] += g[i] * (1.0 - t * t);
      }
      return;
    }

    case OpKind::concat: {
      const std::size_t nx = nodes_[n.lhs.id].value.cols();
      const std::size_t ny = nodes_[n.rhs.id].value.cols();
      const std::size_t m = n.value.rows();
      if (lhs_grad) {
        Tensor& gx = grad_buffer(n.lhs);
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < nx; ++j) gx[i * nx + j] += g[i * (nx + ny) + j];
      }
      if (nodes_[n.rhs.id].requires_grad) {
        Tensor& gy = grad_buffer(n.rhs);
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < ny; ++j) gy[i * ny + j] += g[i * (nx + ny) + nx + j];
      }
      return;
    }

    case OpKind::mask_apply: {
      Tensor& gx = grad_buffer(n.lhs);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * n.aux[i];
      return;
    }

    case OpKind::bce: {
      if (n.factor == 0.0) return;
      const Tensor& p = nodes_[n.lhs.id].value;
      Tensor& gp = grad_buffer(n.lhs);
      const double upstream = g[0];
      for (std::size_t i = 0; i < p.size(); ++i) {
        const double w = n.aux2[i];
        // Clamped region has zero slope.
        if (w == 0.0 || p[i] <= kProbabilityEpsilon || p[i] >= 1.0 - kProbabilityEpsilon) continue;
        const double y = n.aux[i];
        gp[i] += upstream * (-w / n.factor) * (y / p[i] - (1.0 - y) / (1.0 - p[i]));
      }
      return;
    }

    case OpKind::scale: {
      Tensor& gx = grad_buffer(n.lhs);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * n.factor;
      return;
    }
  }
}

}  // namespace cropmap::numeric
