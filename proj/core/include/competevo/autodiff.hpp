#pragma once

#include <span>
#include <vector>

namespace competevo::ad {

using NodeId = int;

/// Small reverse-mode tape over vector-valued nodes. Values are computed
/// eagerly at node creation and checked finite (a non-finite intermediate
/// throws NumericalError naming the offending op). Leaves reference external
/// storage and accumulate their gradients straight into an external sink, so
/// one Gradient buffer can collect contributions from many tapes — backward
/// of a sum of losses is exactly the sum of backwards.
///
/// Spans passed to leaf()/gaussian_log_prob() must outlive backward().
class Tape {
 public:
  /// Registers an external vector. grad_sink may be null (constant leaf) or
  /// point at value.size() doubles to accumulate into.
  NodeId leaf(std::span<const double> value, double* grad_sink);

  /// y = W x + b with W a row-major (out_dim x in_dim) leaf.
  NodeId affine(NodeId w, NodeId b, NodeId x, int out_dim, int in_dim);

  NodeId tanh_of(NodeId x);
  NodeId exp_of(NodeId x);
  NodeId square(NodeId x);
  NodeId add(NodeId a, NodeId b);
  NodeId min_of(NodeId a, NodeId b);
  NodeId scale(NodeId x, double c);
  NodeId add_const(NodeId x, double c);
  NodeId clamp_of(NodeId x, double lo, double hi);

  /// Diagonal-Gaussian log density of a fixed sample; dim-1 output.
  NodeId gaussian_log_prob(NodeId mean, NodeId log_std, std::span<const double> sample);

  /// Closed-form diagonal-Gaussian entropy; dim-1 output.
  NodeId gaussian_entropy(NodeId log_std);

  std::span<const double> value(NodeId id) const;
  double scalar(NodeId id) const;  // value of a dim-1 node

  /// Reverse pass from `out` (dim-1), seeding d out = seed. Accumulates leaf
  /// gradients into their sinks. May be called once per built graph.
  void backward(NodeId out, double seed);

  /// Drops all nodes but keeps allocated capacity.
  void reset();

 private:
  enum class Op {
    leaf,
    affine,
    tanh,
    exp,
    square,
    add,
    min,
    scale,
    add_const,
    clamp,
    gauss_logprob,
    gauss_entropy,
  };

  struct Node {
    Op op;
    NodeId a = -1, b = -1, c = -1;
    int val_ofs = -1;   // into values_ (non-leaf) or -1
    int grad_ofs = -1;  // into grads_ (non-leaf) or -1
    int size = 0;
    int in_dim = 0;              // affine only
    double c0 = 0.0, c1 = 0.0;   // scale/add_const/clamp parameters
    const double* ext_val = nullptr;  // leaf value / fixed sample
    double* ext_grad = nullptr;       // leaf gradient sink (may be null)
  };

  NodeId push(Node n);
  int alloc_values(int size);
  NodeId unary(Op op, NodeId x, double c0, double c1);
  NodeId binary(Op op, NodeId a, NodeId b);
  std::span<const double> node_value(const Node& n) const;
  void check_finite(const Node& n, const char* op_name) const;
  void add_grad(NodeId target, int index, double v);

  std::vector<Node> nodes_;
  std::vector<double> values_;
  std::vector<double> grads_;
  int grad_size_ = 0;
};

}  // namespace competevo::ad
