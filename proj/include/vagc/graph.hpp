#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "vagc/tensor.hpp"

namespace vagc {

// The closed primitive set. Param and Input are leaf nodes surfacing
// parameter / input slots; the rest are differentiable ops.
enum class Op : uint8_t {
  kParam,
  kInput,
  kAffine,     // sum_i W_i x_i + b; args = [x_1..x_k, W_1..W_k, b]
  kRelu,
  kEmbed,      // args = [table, index]; index is a shape-[1] node, not differentiated
  kSoftmax,
  kAdd,        // n-ary elementwise; shape-[1] operands broadcast
  kScale,      // out = c * x, c a build-time constant
  kReduceSum,  // sum of all entries -> shape [1]
  kSquare,
};

struct Node {
  Op op;
  std::vector<int> args;  // ids of earlier nodes (acyclic by construction)
  Shape shape;            // inferred output shape
  double c = 1.0;         // kScale factor
  int slot = -1;          // kParam / kInput slot index
  bool needs_grad = false;
};

// Parameter tensors plus a version stamp. Any mutation must bump the version
// so tapes recorded against older values are detected as stale.
struct ParamPack {
  std::vector<Tensor> tensors;
  uint64_t version = 0;
  void bump() { ++version; }
};

// Static computation graph over the primitive set. Nodes are stored in
// topological order; every builder call validates shapes, so a constructed
// graph always evaluates cleanly on well-shaped slots.
class Graph {
 public:
  int param(Shape shape);
  int input(Shape shape);

  // y = sum_i ws[i] * xs[i] + b with ws[i]: [out, in_i], xs[i]: [in_i], b: [out].
  // Multiple inputs are equivalent to an affine map of their concatenation.
  int affine(const std::vector<int>& xs, const std::vector<int>& ws, int b);
  int relu(int x);
  int embed(int table, int index);
  int softmax(int x);
  int add(const std::vector<int>& xs);
  int scale(int x, double c);
  int reduce_sum(int x);
  int square(int x);

  void mark_output(int node);

  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<int>& outputs() const { return outputs_; }
  int num_params() const { return int(param_nodes_.size()); }
  int num_inputs() const { return int(input_nodes_.size()); }
  const Shape& param_shape(int slot) const;
  const Shape& input_shape(int slot) const;
  int param_node(int slot) const { return param_nodes_[size_t(slot)]; }
  const Shape& node_shape(int id) const { return nodes_[size_t(id)].shape; }

  // Fresh zero gradients / zero parameter tensors matching the param slots.
  std::vector<Tensor> zero_params() const;

 private:
  int add_node(Node n);
  const Node& at(int id) const;

  std::vector<Node> nodes_;
  std::vector<int> outputs_;
  std::vector<int> param_nodes_;
  std::vector<int> input_nodes_;
};

// Record of one forward evaluation: per-node values (parameter and input
// nodes are referenced in place, op outputs are owned). Buffers are reused
// across forward_into calls on the same tape.
class Tape {
 public:
  const Graph* graph() const { return graph_; }
  uint64_t param_version() const { return param_version_; }
  const Tensor& value(int node) const { return *vals_[size_t(node)]; }
  Tensor output(int k = 0) const;

 private:
  friend void forward_into(const Graph&, const ParamPack&,
                           std::span<const Tensor>, Tape&);
  friend std::vector<Tensor> backward(const Tape&, const ParamPack&,
                                      const Tensor&);
  friend void backward_into(const Tape&, const ParamPack&, const Tensor&,
                            std::vector<Tensor>&);

  const Graph* graph_ = nullptr;
  uint64_t param_version_ = 0;
  std::vector<Tensor> owned_;             // op-node results
  std::vector<const Tensor*> vals_;       // per-node value pointers
  // backward scratch, lazily sized
  mutable std::vector<Tensor> grad_buf_;
  mutable std::vector<char> active_;
};

// Deterministic evaluation. Throws ConfigError on slot/shape mismatch and
// NumericError (with the node index) on a non-finite intermediate.
void forward_into(const Graph& g, const ParamPack& params,
                  std::span<const Tensor> inputs, Tape& tape);
Tape forward(const Graph& g, const ParamPack& params,
             std::span<const Tensor> inputs);

// Reverse-mode gradients of the first marked output, seeded with out_grad.
// Accumulates into param_grads (must be zero-initialized by the caller,
// e.g. Graph::zero_params); the overload below allocates fresh gradients.
// Throws StaleTapeError if params changed since the tape was recorded.
void backward_into(const Tape& tape, const ParamPack& params,
                   const Tensor& out_grad, std::vector<Tensor>& param_grads);
std::vector<Tensor> backward(const Tape& tape, const ParamPack& params,
                             const Tensor& out_grad);

}  // namespace vagc
