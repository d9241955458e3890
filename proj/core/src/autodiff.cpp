#include "competevo/autodiff.hpp"

#include <cmath>
#include <string>

#include "competevo/errors.hpp"

namespace competevo::ad {

namespace {
constexpr double kHalfLog2Pi = 0.91893853320467274178032973640562;

const char* op_name(int op) {
  static const char* names[] = {"leaf",      "affine", "tanh",          "exp",
                                "square",    "add",    "min",           "scale",
                                "add_const", "clamp",  "gauss_logprob", "gauss_entropy"};
  return names[op];
}
}  // namespace

NodeId Tape::push(Node n) {
  nodes_.push_back(n);
  return static_cast<NodeId>(nodes_.size()) - 1;
}

std::span<const double> Tape::node_value(const Node& n) const {
  if (n.op == Op::leaf) return {n.ext_val, static_cast<std::size_t>(n.size)};
  return {values_.data() + n.val_ofs, static_cast<std::size_t>(n.size)};
}

void Tape::check_finite(const Node& n, const char* name) const {
  for (double v : node_value(n)) {
    if (!std::isfinite(v)) {
      throw NumericalError(std::string("non-finite value in op '") + name + "' (node " +
                           std::to_string(nodes_.size()) + ")");
    }
  }
}

// Reserves a fresh value block. Input spans must be (re-)taken afterwards:
// growing values_ may reallocate and invalidate earlier spans.
int Tape::alloc_values(int size) {
  const int ofs = static_cast<int>(values_.size());
  values_.resize(values_.size() + static_cast<std::size_t>(size));
  return ofs;
}

NodeId Tape::leaf(std::span<const double> value, double* grad_sink) {
  Node n;
  n.op = Op::leaf;
  n.size = static_cast<int>(value.size());
  n.ext_val = value.data();
  n.ext_grad = grad_sink;
  check_finite(n, "leaf");
  return push(n);
}

NodeId Tape::affine(NodeId w, NodeId b, NodeId x, int out_dim, int in_dim) {
  if (static_cast<int>(value(w).size()) != out_dim * in_dim ||
      static_cast<int>(value(b).size()) != out_dim ||
      static_cast<int>(value(x).size()) != in_dim) {
    throw DimensionError("affine: inconsistent shapes");
  }
  Node n;
  n.op = Op::affine;
  n.a = w;
  n.b = b;
  n.c = x;
  n.size = out_dim;
  n.in_dim = in_dim;
  n.val_ofs = alloc_values(out_dim);
  const auto wv = value(w);
  const auto bv = value(b);
  const auto xv = value(x);
  for (int i = 0; i < out_dim; ++i) {
    double acc = bv[i];
    const double* row = wv.data() + static_cast<std::size_t>(i) * in_dim;
    for (int j = 0; j < in_dim; ++j) acc += row[j] * xv[j];
    values_[n.val_ofs + i] = acc;
  }
  n.grad_ofs = grad_size_;
  grad_size_ += out_dim;
  check_finite(n, "affine");
  return push(n);
}

NodeId Tape::unary(Op op, NodeId x, double c0, double c1) {
  Node n;
  n.op = op;
  n.a = x;
  n.c0 = c0;
  n.c1 = c1;
  n.size = static_cast<int>(value(x).size());
  n.val_ofs = alloc_values(n.size);
  const auto xv = value(x);
  for (int i = 0; i < n.size; ++i) {
    const double v = xv[i];
    double y = 0.0;
    switch (op) {
      case Op::tanh:
        y = std::tanh(v);
        break;
      case Op::exp:
        y = std::exp(v);
        break;
      case Op::square:
        y = v * v;
        break;
      case Op::scale:
        y = c0 * v;
        break;
      case Op::add_const:
        y = v + c0;
        break;
      case Op::clamp:
        y = std::min(c1, std::max(c0, v));
        break;
      default:
        throw ContractViolation("unary: bad op");
    }
    values_[n.val_ofs + i] = y;
  }
  n.grad_ofs = grad_size_;
  grad_size_ += n.size;
  check_finite(n, op_name(static_cast<int>(op)));
  return push(n);
}

NodeId Tape::tanh_of(NodeId x) { return unary(Op::tanh, x, 0.0, 0.0); }
NodeId Tape::exp_of(NodeId x) { return unary(Op::exp, x, 0.0, 0.0); }
NodeId Tape::square(NodeId x) { return unary(Op::square, x, 0.0, 0.0); }
NodeId Tape::scale(NodeId x, double c) { return unary(Op::scale, x, c, 0.0); }
NodeId Tape::add_const(NodeId x, double c) { return unary(Op::add_const, x, c, 0.0); }
NodeId Tape::clamp_of(NodeId x, double lo, double hi) { return unary(Op::clamp, x, lo, hi); }

NodeId Tape::binary(Op op, NodeId a, NodeId b) {
  if (value(a).size() != value(b).size()) throw DimensionError("binary op: size mismatch");
  Node n;
  n.op = op;
  n.a = a;
  n.b = b;
  n.size = static_cast<int>(value(a).size());
  n.val_ofs = alloc_values(n.size);
  const auto av = value(a);
  const auto bv = value(b);
  for (int i = 0; i < n.size; ++i) {
    values_[n.val_ofs + i] =
        op == Op::add ? av[i] + bv[i] : (av[i] <= bv[i] ? av[i] : bv[i]);
  }
  n.grad_ofs = grad_size_;
  grad_size_ += n.size;
  check_finite(n, op_name(static_cast<int>(op)));
  return push(n);
}

NodeId Tape::add(NodeId a, NodeId b) { return binary(Op::add, a, b); }
NodeId Tape::min_of(NodeId a, NodeId b) { return binary(Op::min, a, b); }

NodeId Tape::gaussian_log_prob(NodeId mean, NodeId log_std, std::span<const double> sample) {
  if (value(mean).size() != value(log_std).size() || value(mean).size() != sample.size()) {
    throw DimensionError("gaussian_log_prob: size mismatch");
  }
  Node n;
  n.op = Op::gauss_logprob;
  n.a = mean;
  n.b = log_std;
  n.size = 1;
  n.ext_val = sample.data();  // kept for the backward pass
  n.in_dim = static_cast<int>(sample.size());
  n.val_ofs = alloc_values(1);
  const auto mv = value(mean);
  const auto lv = value(log_std);
  double lp = 0.0;
  for (std::size_t j = 0; j < mv.size(); ++j) {
    const double sigma = std::exp(lv[j]);
    const double z = (sample[j] - mv[j]) / sigma;
    lp += -0.5 * z * z - lv[j] - kHalfLog2Pi;
  }
  values_[n.val_ofs] = lp;
  n.grad_ofs = grad_size_;
  grad_size_ += 1;
  check_finite(n, "gauss_logprob");
  return push(n);
}

NodeId Tape::gaussian_entropy(NodeId log_std) {
  Node n;
  n.op = Op::gauss_entropy;
  n.a = log_std;
  n.size = 1;
  n.val_ofs = alloc_values(1);
  const auto lv = value(log_std);
  double h = 0.0;
  for (double l : lv) h += 0.5 + kHalfLog2Pi + l;
  values_[n.val_ofs] = h;
  n.grad_ofs = grad_size_;
  grad_size_ += 1;
  check_finite(n, "gauss_entropy");
  return push(n);
}

std::span<const double> Tape::value(NodeId id) const { return node_value(nodes_[id]); }

double Tape::scalar(NodeId id) const {
  const Node& n = nodes_[id];
  if (n.size != 1) throw DimensionError("scalar: node is not dim-1");
  return node_value(n)[0];
}

void Tape::add_grad(NodeId target, int index, double v) {
  Node& t = nodes_[target];
  if (t.op == Op::leaf) {
    if (t.ext_grad != nullptr) t.ext_grad[index] += v;
    return;
  }
  grads_[t.grad_ofs + index] += v;
}

void Tape::backward(NodeId out, double seed) {
  if (nodes_[out].size != 1) throw DimensionError("backward: output must be dim-1");
  grads_.assign(static_cast<std::size_t>(grad_size_), 0.0);
  if (nodes_[out].op == Op::leaf) {
    if (nodes_[out].ext_grad != nullptr) nodes_[out].ext_grad[0] += seed;
    return;
  }
  grads_[nodes_[out].grad_ofs] = seed;

  for (NodeId id = static_cast<NodeId>(nodes_.size()) - 1; id >= 0; --id) {
    const Node& n = nodes_[id];
    if (n.op == Op::leaf) continue;
    const double* g = grads_.data() + n.grad_ofs;
    switch (n.op) {
      case Op::affine: {
        const auto xv = node_value(nodes_[n.c]);
        const auto wv = node_value(nodes_[n.a]);
        Node& wn = nodes_[n.a];
        Node& bn = nodes_[n.b];
        Node& xn = nodes_[n.c];
        double* wg = wn.op == Op::leaf ? wn.ext_grad : grads_.data() + wn.grad_ofs;
        const bool want_b = bn.op != Op::leaf || bn.ext_grad != nullptr;
        const bool want_x = xn.op != Op::leaf || xn.ext_grad != nullptr;
        for (int i = 0; i < n.size; ++i) {
          const double gi = g[i];
          if (gi == 0.0) continue;
          if (wg != nullptr) {
            double* wrow = wg + static_cast<std::size_t>(i) * n.in_dim;
            for (int j = 0; j < n.in_dim; ++j) wrow[j] += gi * xv[j];
          }
          if (want_b) add_grad(n.b, i, gi);
          if (want_x) {
            const double* row = wv.data() + static_cast<std::size_t>(i) * n.in_dim;
            for (int j = 0; j < n.in_dim; ++j) add_grad(n.c, j, gi * row[j]);
          }
        }
        break;
      }
      case Op::tanh: {
        const auto yv = node_value(n);
        for (int i = 0; i < n.size; ++i) add_grad(n.a, i, g[i] * (1.0 - yv[i] * yv[i]));
        break;
      }
      case Op::exp: {
        const auto yv = node_value(n);
        for (int i = 0; i < n.size; ++i) add_grad(n.a, i, g[i] * yv[i]);
        break;
      }
      case Op::square: {
        const auto xv = node_value(nodes_[n.a]);
        for (int i = 0; i < n.size; ++i) add_grad(n.a, i, g[i] * 2.0 * xv[i]);
        break;
      }
      case Op::add: {
        for (int i = 0; i < n.size; ++i) {
          add_grad(n.a, i, g[i]);
          add_grad(n.b, i, g[i]);
        }
        break;
      }
      case Op::min: {
        const auto av = node_value(nodes_[n.a]);
        const auto bv = node_value(nodes_[n.b]);
        for (int i = 0; i < n.size; ++i) {
          if (av[i] <= bv[i]) {
            add_grad(n.a, i, g[i]);
          } else {
            add_grad(n.b, i, g[i]);
          }
        }
        break;
      }
      case Op::scale: {
        for (int i = 0; i < n.size; ++i) add_grad(n.a, i, g[i] * n.c0);
        break;
      }
      case Op::add_const: {
        for (int i = 0; i < n.size; ++i) add_grad(n.a, i, g[i]);
        break;
      }
      case Op::clamp: {
        const auto xv = node_value(nodes_[n.a]);
        for (int i = 0; i < n.size; ++i) {
          if (xv[i] >= n.c0 && xv[i] <= n.c1) add_grad(n.a, i, g[i]);
        }
        break;
      }
      case Op::gauss_logprob: {
        const double g0 = g[0];
        const auto mv = node_value(nodes_[n.a]);
        const auto lv = node_value(nodes_[n.b]);
        for (int j = 0; j < n.in_dim; ++j) {
          const double sigma = std::exp(lv[j]);
          const double d = n.ext_val[j] - mv[j];
          const double z2 = (d * d) / (sigma * sigma);
          add_grad(n.a, j, g0 * d / (sigma * sigma));
          add_grad(n.b, j, g0 * (z2 - 1.0));
        }
        break;
      }
      case Op::gauss_entropy: {
        const double g0 = g[0];
        for (int j = 0; j < static_cast<int>(node_value(nodes_[n.a]).size()); ++j) {
          add_grad(n.a, j, g0);
        }
        break;
      }
      case Op::leaf:
        break;
    }
  }
}

void Tape::reset() {
  nodes_.clear();
  values_.clear();
  grads_.clear();
  grad_size_ = 0;
}

}  // namespace competevo::ad
