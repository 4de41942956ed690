#include "vagc/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace vagc {

int shape_size(const Shape& shape) {
  if (shape.empty()) throw ConfigError("empty tensor shape");
  long long n = 1;
  for (int d : shape) {
    if (d <= 0) throw ConfigError("non-positive dimension in shape " + shape_str(shape));
    n *= d;
    if (n > (1ll << 31)) throw ConfigError("tensor too large: " + shape_str(shape));
  }
  return int(n);
}

std::string shape_str(const Shape& shape) {
  std::string s = "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

// ---------------------------------------------------------------------------
// Graph construction

const Node& Graph::at(int id) const {
  if (id < 0 || id >= int(nodes_.size()))
    throw ConfigError("node id " + std::to_string(id) + " out of range");
  return nodes_[size_t(id)];
}

int Graph::add_node(Node n) {
  for (int a : n.args) at(a);  // args must precede the node
  nodes_.push_back(std::move(n));
  return int(nodes_.size()) - 1;
}

int Graph::param(Shape shape) {
  shape_size(shape);
  Node n{Op::kParam, {}, std::move(shape)};
  n.slot = int(param_nodes_.size());
  n.needs_grad = true;
  int id = add_node(std::move(n));
  param_nodes_.push_back(id);
  return id;
}

int Graph::input(Shape shape) {
  shape_size(shape);
  Node n{Op::kInput, {}, std::move(shape)};
  n.slot = int(input_nodes_.size());
  int id = add_node(std::move(n));
  input_nodes_.push_back(id);
  return id;
}

int Graph::affine(const std::vector<int>& xs, const std::vector<int>& ws, int b) {
  if (xs.empty() || xs.size() != ws.size())
    throw ConfigError("affine: need one weight per input");
  const Shape& bs = at(b).shape;
  if (bs.size() != 1) throw ConfigError("affine: bias must be rank 1");
  int out = bs[0];
  for (size_t i = 0; i < xs.size(); ++i) {
    const Shape& xsh = at(xs[i]).shape;
    const Shape& wsh = at(ws[i]).shape;
    if (xsh.size() != 1 || wsh.size() != 2 || wsh[0] != out || wsh[1] != xsh[0])
      throw ConfigError("affine: weight " + shape_str(wsh) + " does not map " +
                        shape_str(xsh) + " to [" + std::to_string(out) + "]");
  }
  Node n{Op::kAffine, {}, {out}};
  n.args = xs;
  n.args.insert(n.args.end(), ws.begin(), ws.end());
  n.args.push_back(b);
  for (int a : n.args) n.needs_grad = n.needs_grad || at(a).needs_grad;
  return add_node(std::move(n));
}

int Graph::relu(int x) {
  Node n{Op::kRelu, {x}, at(x).shape};
  n.needs_grad = at(x).needs_grad;
  return add_node(std::move(n));
}

int Graph::embed(int table, int index) {
  const Shape& ts = at(table).shape;
  const Shape& is = at(index).shape;
  if (ts.size() != 2) throw ConfigError("embed: table must be rank 2");
  if (shape_size(is) != 1) throw ConfigError("embed: index must hold one value");
  Node n{Op::kEmbed, {table, index}, {ts[1]}};
  n.needs_grad = at(table).needs_grad;
  return add_node(std::move(n));
}

int Graph::softmax(int x) {
  const Shape& xs = at(x).shape;
  if (xs.size() != 1) throw ConfigError("softmax: rank-1 input required");
  Node n{Op::kSoftmax, {x}, xs};
  n.needs_grad = at(x).needs_grad;
  return add_node(std::move(n));
}

int Graph::add(const std::vector<int>& xs) {
  if (xs.empty()) throw ConfigError("add: no operands");
  Shape out{1};
  for (int x : xs) {
    const Shape& s = at(x).shape;
    if (shape_size(s) == 1) continue;
    if (shape_size(out) == 1)
      out = s;
    else if (s != out)
      throw ConfigError("add: mismatched shapes " + shape_str(out) + " vs " + shape_str(s));
  }
  Node n{Op::kAdd, xs, out};
  for (int a : xs) n.needs_grad = n.needs_grad || at(a).needs_grad;
  return add_node(std::move(n));
}

int Graph::scale(int x, double c) {
  Node n{Op::kScale, {x}, at(x).shape};
  n.c = c;
  n.needs_grad = at(x).needs_grad;
  return add_node(std::move(n));
}

int Graph::reduce_sum(int x) {
  Node n{Op::kReduceSum, {x}, {1}};
  n.needs_grad = at(x).needs_grad;
  return add_node(std::move(n));
}

int Graph::square(int x) {
  Node n{Op::kSquare, {x}, at(x).shape};
  n.needs_grad = at(x).needs_grad;
  return add_node(std::move(n));
}

void Graph::mark_output(int node) {
  at(node);
  outputs_.push_back(node);
}

const Shape& Graph::param_shape(int slot) const {
  return nodes_[size_t(param_nodes_.at(size_t(slot)))].shape;
}

const Shape& Graph::input_shape(int slot) const {
  return nodes_[size_t(input_nodes_.at(size_t(slot)))].shape;
}

std::vector<Tensor> Graph::zero_params() const {
  std::vector<Tensor> out;
  out.reserve(param_nodes_.size());
  for (int id : param_nodes_) out.emplace_back(nodes_[size_t(id)].shape);
  return out;
}

// ---------------------------------------------------------------------------
// Forward evaluation

namespace {

// Dot product with four fixed-order partial sums. The reduction order is a
// compile-time constant, so results stay bit-reproducible run to run.
inline double dot(const double* a, const double* b, int n) {
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  double s = (s0 + s1) + (s2 + s3);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

inline void check_finite(const Tensor& t, int node) {
  if (!t.all_finite())
    throw NumericError("non-finite value at graph node " + std::to_string(node));
}

}  // namespace

void forward_into(const Graph& g, const ParamPack& params,
                  std::span<const Tensor> inputs, Tape& tape) {
  const auto& nodes = g.nodes();
  if (int(params.tensors.size()) != g.num_params())
    throw ConfigError("forward: expected " + std::to_string(g.num_params()) +
                      " parameters, got " + std::to_string(params.tensors.size()));
  if (int(inputs.size()) != g.num_inputs())
    throw ConfigError("forward: expected " + std::to_string(g.num_inputs()) +
                      " inputs, got " + std::to_string(inputs.size()));

  tape.graph_ = &g;
  tape.param_version_ = params.version;
  tape.owned_.resize(nodes.size());
  tape.vals_.assign(nodes.size(), nullptr);

  for (size_t i = 0; i < nodes.size(); ++i) {
    const Node& n = nodes[i];
    if (n.op == Op::kParam) {
      const Tensor& p = params.tensors[size_t(n.slot)];
      if (p.shape() != n.shape)
        throw ConfigError("forward: parameter " + std::to_string(n.slot) +
                          " has shape " + shape_str(p.shape()) + ", expected " +
                          shape_str(n.shape));
      tape.vals_[i] = &p;
      continue;
    }
    if (n.op == Op::kInput) {
      const Tensor& in = inputs[size_t(n.slot)];
      if (in.shape() != n.shape)
        throw ConfigError("forward: input " + std::to_string(n.slot) +
                          " has shape " + shape_str(in.shape()) + ", expected " +
                          shape_str(n.shape));
      tape.vals_[i] = &in;
      continue;
    }

    Tensor& out = tape.owned_[i];
    if (out.shape() != n.shape) out = Tensor(n.shape);
    auto val = [&](int k) -> const Tensor& { return *tape.vals_[size_t(k)]; };

    switch (n.op) {
      case Op::kAffine: {
        int k = int((n.args.size() - 1) / 2);
        const Tensor& b = val(n.args[size_t(2 * k)]);
        int m = out.size();
        for (int o = 0; o < m; ++o) out[o] = b[o];
        for (int j = 0; j < k; ++j) {
          const Tensor& x = val(n.args[size_t(j)]);
          const Tensor& w = val(n.args[size_t(k + j)]);
          int in = x.size();
          const double* wp = w.data();
          for (int o = 0; o < m; ++o) out[o] += dot(wp + size_t(o) * in, x.data(), in);
        }
        break;
      }
      case Op::kRelu: {
        const Tensor& x = val(n.args[0]);
        for (int j = 0; j < out.size(); ++j) out[j] = x[j] > 0.0 ? x[j] : 0.0;
        break;
      }
      case Op::kEmbed: {
        const Tensor& table = val(n.args[0]);
        const Tensor& idx = val(n.args[1]);
        int rows = table.shape()[0], cols = table.shape()[1];
        long long r = std::llround(idx[0]);
        if (r < 0 || r >= rows)
          throw IndexError("embed: row " + std::to_string(r) + " out of [0," +
                           std::to_string(rows) + ") at node " + std::to_string(i));
        std::memcpy(out.data(), table.data() + r * cols, size_t(cols) * sizeof(double));
        break;
      }
      case Op::kSoftmax: {
        const Tensor& x = val(n.args[0]);
        double mx = x[0];
        for (int j = 1; j < x.size(); ++j) mx = std::max(mx, x[j]);
        double z = 0.0;
        for (int j = 0; j < x.size(); ++j) {
          out[j] = std::exp(x[j] - mx);
          z += out[j];
        }
        for (int j = 0; j < out.size(); ++j) out[j] /= z;
        break;
      }
      case Op::kAdd: {
        out.fill(0.0);
        for (int a : n.args) {
          const Tensor& x = val(a);
          if (x.size() == 1) {
            double v = x[0];
            for (int j = 0; j < out.size(); ++j) out[j] += v;
          } else {
            for (int j = 0; j < out.size(); ++j) out[j] += x[j];
          }
        }
        break;
      }
      case Op::kScale: {
        const Tensor& x = val(n.args[0]);
        for (int j = 0; j < out.size(); ++j) out[j] = n.c * x[j];
        break;
      }
      case Op::kReduceSum: {
        const Tensor& x = val(n.args[0]);
        double s = 0.0;
        for (int j = 0; j < x.size(); ++j) s += x[j];
        out[0] = s;
        break;
      }
      case Op::kSquare: {
        const Tensor& x = val(n.args[0]);
        for (int j = 0; j < out.size(); ++j) out[j] = x[j] * x[j];
        break;
      }
      default:
        throw ConfigError("forward: unknown op");
    }
    check_finite(out, int(i));
    tape.vals_[i] = &out;
  }
}

Tape forward(const Graph& g, const ParamPack& params, std::span<const Tensor> inputs) {
  Tape tape;
  forward_into(g, params, inputs, tape);
  return tape;
}

Tensor Tape::output(int k) const {
  if (!graph_ || k < 0 || k >= int(graph_->outputs().size()))
    throw ConfigError("tape: no output " + std::to_string(k));
  return *vals_[size_t(graph_->outputs()[size_t(k)])];
}

// ---------------------------------------------------------------------------
// Reverse pass

void backward_into(const Tape& tape, const ParamPack& params,
                   const Tensor& out_grad, std::vector<Tensor>& param_grads) {
  const Graph* g = tape.graph_;
  if (!g) throw ConfigError("backward: empty tape");
  if (params.version != tape.param_version_)
    throw StaleTapeError("backward: parameters changed since forward (version " +
                         std::to_string(tape.param_version_) + " -> " +
                         std::to_string(params.version) + ")");
  if (g->outputs().empty()) throw ConfigError("backward: graph has no output");
  if (int(param_grads.size()) != g->num_params())
    throw ConfigError("backward: gradient list size mismatch");

  const auto& nodes = g->nodes();
  int out_node = g->outputs()[0];
  if (out_grad.shape() != nodes[size_t(out_node)].shape)
    throw ConfigError("backward: seed shape " + shape_str(out_grad.shape()) +
                      " does not match output " +
                      shape_str(nodes[size_t(out_node)].shape));

  auto& gbuf = tape.grad_buf_;
  auto& active = tape.active_;
  gbuf.resize(nodes.size());
  active.assign(nodes.size(), 0);

  // grad target per node: param slots accumulate straight into param_grads
  auto grad_of = [&](int id) -> Tensor& {
    const Node& n = nodes[size_t(id)];
    if (n.op == Op::kParam) return param_grads[size_t(n.slot)];
    return gbuf[size_t(id)];
  };
  auto activate = [&](int id) {
    if (active[size_t(id)]) return;
    active[size_t(id)] = 1;
    const Node& n = nodes[size_t(id)];
    if (n.op == Op::kParam) {
      if (param_grads[size_t(n.slot)].shape() != n.shape)
        throw ConfigError("backward: gradient " + std::to_string(n.slot) +
                          " has wrong shape");
      return;  // caller-provided accumulator, not cleared here
    }
    Tensor& t = gbuf[size_t(id)];
    if (t.shape() != n.shape)
      t = Tensor(n.shape);
    else
      t.fill(0.0);
  };

  activate(out_node);
  {
    Tensor& seed = grad_of(out_node);
    for (int j = 0; j < seed.size(); ++j) seed[j] += out_grad[j];
  }

  for (int i = int(nodes.size()) - 1; i >= 0; --i) {
    const Node& n = nodes[size_t(i)];
    if (!active[size_t(i)] || !n.needs_grad) continue;
    if (n.op == Op::kParam || n.op == Op::kInput) continue;

    const Tensor& gy = grad_of(i);
    auto val = [&](int k) -> const Tensor& { return *tape.vals_[size_t(k)]; };
    auto want = [&](int arg) {
      return nodes[size_t(arg)].needs_grad;
    };
    auto arm = [&](int arg) -> Tensor& {
      activate(arg);
      return grad_of(arg);
    };

    switch (n.op) {
      case Op::kAffine: {
        int k = int((n.args.size() - 1) / 2);
        int m = gy.size();
        int bid = n.args[size_t(2 * k)];
        if (want(bid)) {
          Tensor& gb = arm(bid);
          for (int o = 0; o < m; ++o) gb[o] += gy[o];
        }
        for (int j = 0; j < k; ++j) {
          int xid = n.args[size_t(j)], wid = n.args[size_t(k + j)];
          const Tensor& x = val(xid);
          const Tensor& w = val(wid);
          int in = x.size();
          if (want(wid)) {
            Tensor& gw = arm(wid);
            for (int o = 0; o < m; ++o) {
              double go = gy[o];
              double* row = gw.data() + size_t(o) * in;
              const double* xp = x.data();
              for (int c = 0; c < in; ++c) row[c] += go * xp[c];
            }
          }
          if (want(xid)) {
            Tensor& gx = arm(xid);
            for (int o = 0; o < m; ++o) {
              double go = gy[o];
              const double* row = w.data() + size_t(o) * in;
              double* gp = gx.data();
              for (int c = 0; c < in; ++c) gp[c] += go * row[c];
            }
          }
        }
        break;
      }
      case Op::kRelu: {
        if (!want(n.args[0])) break;
        const Tensor& x = val(n.args[0]);
        Tensor& gx = arm(n.args[0]);
        // subgradient at exactly 0 is defined as 0
        for (int j = 0; j < gy.size(); ++j)
          if (x[j] > 0.0) gx[j] += gy[j];
        break;
      }
      case Op::kEmbed: {
        if (!want(n.args[0])) break;
        const Tensor& table = val(n.args[0]);
        const Tensor& idx = val(n.args[1]);
        int cols = table.shape()[1];
        long long r = std::llround(idx[0]);
        Tensor& gt = arm(n.args[0]);
        double* row = gt.data() + r * cols;
        for (int j = 0; j < cols; ++j) row[j] += gy[j];
        break;
      }
      case Op::kSoftmax: {
        if (!want(n.args[0])) break;
        const Tensor& p = *tape.vals_[size_t(i)];
        Tensor& gx = arm(n.args[0]);
        double s = 0.0;
        for (int j = 0; j < p.size(); ++j) s += gy[j] * p[j];
        for (int j = 0; j < p.size(); ++j) gx[j] += p[j] * (gy[j] - s);
        break;
      }
      case Op::kAdd: {
        for (int a : n.args) {
          if (!want(a)) continue;
          Tensor& gx = arm(a);
          if (gx.size() == 1 && gy.size() > 1) {
            double s = 0.0;
            for (int j = 0; j < gy.size(); ++j) s += gy[j];
            gx[0] += s;
          } else {
            for (int j = 0; j < gy.size(); ++j) gx[j] += gy[j];
          }
        }
        break;
      }
      case Op::kScale: {
        if (!want(n.args[0])) break;
        Tensor& gx = arm(n.args[0]);
        for (int j = 0; j < gy.size(); ++j) gx[j] += n.c * gy[j];
        break;
      }
      case Op::kReduceSum: {
        if (!want(n.args[0])) break;
        Tensor& gx = arm(n.args[0]);
        double s = gy[0];
        for (int j = 0; j < gx.size(); ++j) gx[j] += s;
        break;
      }
      case Op::kSquare: {
        if (!want(n.args[0])) break;
        const Tensor& x = val(n.args[0]);
        Tensor& gx = arm(n.args[0]);
        for (int j = 0; j < gy.size(); ++j) gx[j] += 2.0 * x[j] * gy[j];
        break;
      }
      default:
        break;
    }
  }
}

std::vector<Tensor> backward(const Tape& tape, const ParamPack& params,
                             const Tensor& out_grad) {
  if (!tape.graph_) throw ConfigError("backward: empty tape");
  std::vector<Tensor> grads = tape.graph_->zero_params();
  backward_into(tape, params, out_grad, grads);
  return grads;
}

}  // namespace vagc
