#include "fusionette/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>

#include "fusionette/error.hpp"
#include "fusionette/kernels.hpp"

namespace fusionette {

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;
  bool requires_grad = false;
  std::uint64_t seq = 0;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> inputs;
  // Reads this node's grad and accumulates into inputs' grads.
  std::function<void(Node&)> backward;

  std::vector<double>& grad_buffer() {
    if (grad.empty()) grad.assign(value.size(), 0.0);
    return grad;
  }
};

struct TensorAccess {
  static const std::shared_ptr<Node>& node(const Tensor& t) { return t.node_; }
  static Tensor wrap(std::shared_ptr<Node> n) { return Tensor(std::move(n)); }
};

}  // namespace detail

using detail::Node;
using detail::TensorAccess;

namespace {

std::atomic<std::uint64_t> g_sequence{0};
thread_local bool t_grad_enabled = true;

std::uint64_t next_sequence() {
  return g_sequence.fetch_add(1, std::memory_order_relaxed);
}

Node& node_of(const Tensor& t) {
  if (!t.defined()) throw InvalidArgument("operation on an undefined tensor");
  return *TensorAccess::node(t);
}

Tensor make_leaf(Shape shape, std::vector<double> values, bool requires_grad) {
  if (shape_numel(shape) != values.size()) {
    throw DimensionError("tensor of shape " + shape_to_string(shape) +
                         " cannot hold " + std::to_string(values.size()) +
                         " values");
  }
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->value = std::move(values);
  n->requires_grad = requires_grad;
  n->seq = next_sequence();
  return TensorAccess::wrap(std::move(n));
}

// Builds an op result. Backward information is kept only when grad mode is on
// and at least one input needs a gradient.
Tensor make_result(const char* op, Shape shape, std::vector<double> values,
                   std::initializer_list<const Tensor*> inputs,
                   std::function<void(Node&)> backward_fn) {
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->value = std::move(values);
  n->op = op;
  n->seq = next_sequence();
  if (t_grad_enabled) {
    bool any = false;
    for (const Tensor* in : inputs) any = any || node_of(*in).requires_grad;
    if (any) {
      n->requires_grad = true;
      for (const Tensor* in : inputs) n->inputs.push_back(TensorAccess::node(*in));
      n->backward = std::move(backward_fn);
    }
  }
  return TensorAccess::wrap(std::move(n));
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " +
                         shape_to_string(a.shape()) + " vs " +
                         shape_to_string(b.shape()));
  }
}

void accumulate(std::vector<double>& dst, std::span<const double> src) {
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] += src[i];
}

std::size_t last_dim(const Shape& s) { return s.empty() ? 1 : s.back(); }

struct BatchedDims {
  std::size_t batch;
  std::size_t rows;
  std::size_t cols;
};

BatchedDims batched_dims(const char* op, const Tensor& t) {
  const auto& s = t.shape();
  if (s.size() == 2) return {1, s[0], s[1]};
  if (s.size() == 3) return {s[0], s[1], s[2]};
  throw DimensionError(std::string(op) + ": expected rank 2 or 3, got " +
                       shape_to_string(s));
}

Shape batched_shape(bool rank3, std::size_t batch, std::size_t r, std::size_t c) {
  return rank3 ? Shape{batch, r, c} : Shape{r, c};
}

template <typename Fwd, typename Deriv>
Tensor unary_elementwise(const char* op, const Tensor& x, Fwd fwd, Deriv deriv) {
  const auto in = x.values();
  std::vector<double> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = fwd(in[i]);
  return make_result(op, x.shape(), std::move(out), {&x}, [deriv](Node& self) {
    Node& xi = *self.inputs[0];
    if (!xi.requires_grad) return;
    auto& g = xi.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) {
      g[i] += self.grad[i] * deriv(xi.value[i], self.value[i]);
    }
  });
}

}  // namespace

// ---- shapes ---------------------------------------------------------------

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

// ---- Tensor ---------------------------------------------------------------

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  const auto n = shape_numel(shape);
  return make_leaf(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::from_values(Shape shape, std::vector<double> values,
                           bool requires_grad) {
  return make_leaf(std::move(shape), std::move(values), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return make_leaf({}, {value}, requires_grad);
}

const Shape& Tensor::shape() const { return node_of(*this).shape; }

std::size_t Tensor::dim(std::size_t axis) const {
  const auto& s = shape();
  if (axis >= s.size()) {
    throw DimensionError("axis " + std::to_string(axis) + " out of range for " +
                         shape_to_string(s));
  }
  return s[axis];
}

std::size_t Tensor::numel() const { return node_of(*this).value.size(); }

std::span<const double> Tensor::values() const { return node_of(*this).value; }

std::span<double> Tensor::mutable_values() const { return node_of(*this).value; }

double Tensor::item() const {
  const auto& v = node_of(*this).value;
  if (v.size() != 1) {
    throw DimensionError("item() on tensor of shape " + shape_to_string(shape()));
  }
  return v[0];
}

bool Tensor::requires_grad() const { return node_of(*this).requires_grad; }

bool Tensor::has_grad() const { return !node_of(*this).grad.empty(); }

std::span<const double> Tensor::grad() const { return node_of(*this).grad; }

void Tensor::clear_grad() const {
  auto& g = node_of(*this).grad;
  g.clear();
  g.shrink_to_fit();
}

Tensor Tensor::detach(bool requires_grad) const {
  const Node& n = node_of(*this);
  return make_leaf(n.shape, n.value, requires_grad);
}

std::string_view Tensor::op_name() const { return node_of(*this).op; }

std::uint64_t Tensor::sequence() const { return node_of(*this).seq; }

// ---- tape -----------------------------------------------------------------

Tape Tape::record(const Tensor& root) {
  Tape tape;
  std::vector<std::shared_ptr<Node>> stack{TensorAccess::node(root)};
  std::vector<std::shared_ptr<Node>> seen;
  // Small graphs (tens to a few hundred nodes): a sorted vector of raw
  // pointers is cheaper than a hash set here.
  std::vector<const Node*> marks;
  while (!stack.empty()) {
    auto n = std::move(stack.back());
    stack.pop_back();
    if (!n || !n->requires_grad) continue;
    auto it = std::lower_bound(marks.begin(), marks.end(), n.get());
    if (it != marks.end() && *it == n.get()) continue;
    marks.insert(it, n.get());
    for (const auto& in : n->inputs) stack.push_back(in);
    seen.push_back(std::move(n));
  }
  std::sort(seen.begin(), seen.end(),
            [](const auto& a, const auto& b) { return a->seq < b->seq; });
  tape.nodes_ = std::move(seen);
  return tape;
}

TapeEntry Tape::entry(std::size_t i) const {
  const Node& n = *nodes_.at(i);
  TapeEntry e;
  e.op = n.op;
  e.sequence = n.seq;
  for (const auto& in : n.inputs) e.input_sequences.push_back(in->seq);
  return e;
}

void Tape::backward() {
  visited_.clear();
  if (nodes_.empty()) return;
  Node& root = *nodes_.back();
  auto& seed = root.grad_buffer();
  for (auto& g : seed) g += 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    Node& n = **it;
    if (!n.backward || n.grad.empty()) continue;
    n.backward(n);
    visited_.push_back(n.seq);
  }
}

void backward(const Tensor& loss) {
  if (loss.numel() != 1) {
    throw DimensionError("backward: loss must be a scalar, got shape " +
                         shape_to_string(loss.shape()));
  }
  if (!loss.requires_grad()) {
    throw InvalidArgument("backward: loss does not depend on any tensor requiring grad");
  }
  Tape::record(loss).backward();
}

void sgd_step(const std::vector<Tensor>& params, double lr) {
  for (const auto& p : params) {
    if (!p.has_grad()) {
      throw InvalidArgument("sgd_step: parameter of shape " +
                            shape_to_string(p.shape()) + " has no gradient");
    }
  }
  for (const auto& p : params) {
    Node& n = node_of(p);
    for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] -= lr * n.grad[i];
    p.clear_grad();
  }
}

NoGradGuard::NoGradGuard() : previous_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }

bool grad_enabled() { return t_grad_enabled; }

// ---- matrix products ------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw DimensionError("matmul: cannot multiply " + shape_to_string(a.shape()) +
                         " by " + shape_to_string(b.shape()));
  }
  return bmm(a, b);
}

Tensor bmm(const Tensor& a, const Tensor& b) {
  const auto da = batched_dims("bmm", a);
  const auto db = batched_dims("bmm", b);
  if (a.rank() != b.rank() || da.batch != db.batch || da.cols != db.rows) {
    throw DimensionError("bmm: cannot multiply " + shape_to_string(a.shape()) +
                         " by " + shape_to_string(b.shape()));
  }
  const std::size_t batch = da.batch, m = da.rows, k = da.cols, n = db.cols;
  std::vector<double> out(batch * m * n);
  kernels::gemm_nn(batch, m, k, n, a.values(), b.values(), out);
  return make_result(
      "matmul", batched_shape(a.rank() == 3, batch, m, n), std::move(out), {&a, &b},
      [batch, m, k, n](Node& self) {
        Node& an = *self.inputs[0];
        Node& bn = *self.inputs[1];
        std::vector<double> tmp;
        if (an.requires_grad) {
          tmp.resize(batch * m * k);
          kernels::gemm_nt(batch, m, n, k, self.grad, bn.value, tmp);
          accumulate(an.grad_buffer(), tmp);
        }
        if (bn.requires_grad) {
          tmp.resize(batch * k * n);
          kernels::gemm_tn(batch, k, m, n, an.value, self.grad, tmp);
          accumulate(bn.grad_buffer(), tmp);
        }
      });
}

Tensor bmm_nt(const Tensor& a, const Tensor& b) {
  const auto da = batched_dims("bmm_nt", a);
  const auto db = batched_dims("bmm_nt", b);
  if (a.rank() != b.rank() || da.batch != db.batch || da.cols != db.cols) {
    throw DimensionError("bmm_nt: cannot multiply " + shape_to_string(a.shape()) +
                         " by the transpose of " + shape_to_string(b.shape()));
  }
  const std::size_t batch = da.batch, m = da.rows, k = da.cols, n = db.rows;
  std::vector<double> out(batch * m * n);
  kernels::gemm_nt(batch, m, k, n, a.values(), b.values(), out);
  return make_result(
      "matmul_nt", batched_shape(a.rank() == 3, batch, m, n), std::move(out),
      {&a, &b}, [batch, m, k, n](Node& self) {
        Node& an = *self.inputs[0];
        Node& bn = *self.inputs[1];
        std::vector<double> tmp;
        if (an.requires_grad) {
          tmp.resize(batch * m * k);
          kernels::gemm_nn(batch, m, n, k, self.grad, bn.value, tmp);
          accumulate(an.grad_buffer(), tmp);
        }
        if (bn.requires_grad) {
          tmp.resize(batch * n * k);
          kernels::gemm_tn(batch, n, m, k, self.grad, an.value, tmp);
          accumulate(bn.grad_buffer(), tmp);
        }
      });
}

// ---- elementwise ----------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape("add", a, b);
  const auto av = a.values(), bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  return make_result("add", a.shape(), std::move(out), {&a, &b}, [](Node& self) {
    for (auto& in : self.inputs) {
      if (in->requires_grad) accumulate(in->grad_buffer(), self.grad);
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape("sub", a, b);
  const auto av = a.values(), bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  return make_result("sub", a.shape(), std::move(out), {&a, &b}, [](Node& self) {
    if (self.inputs[0]->requires_grad) {
      accumulate(self.inputs[0]->grad_buffer(), self.grad);
    }
    if (self.inputs[1]->requires_grad) {
      auto& g = self.inputs[1]->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape("mul", a, b);
  const auto av = a.values(), bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return make_result("mul", a.shape(), std::move(out), {&a, &b}, [](Node& self) {
    Node& an = *self.inputs[0];
    Node& bn = *self.inputs[1];
    if (an.requires_grad) {
      auto& g = an.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * bn.value[i];
    }
    if (bn.requires_grad) {
      auto& g = bn.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * an.value[i];
    }
  });
}

Tensor scale(const Tensor& x, double factor) {
  const auto xv = x.values();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] * factor;
  return make_result("scale", x.shape(), std::move(out), {&x}, [factor](Node& self) {
    auto& g = self.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * factor;
  });
}

Tensor scale_by(const Tensor& s, const Tensor& x) {
  if (s.numel() != 1) {
    throw DimensionError("scale_by: factor must have one element, got " +
                         shape_to_string(s.shape()));
  }
  const double sv = s.values()[0];
  const auto xv = x.values();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = sv * xv[i];
  return make_result("scale_by", x.shape(), std::move(out), {&s, &x}, [](Node& self) {
    Node& sn = *self.inputs[0];
    Node& xn = *self.inputs[1];
    if (sn.requires_grad) {
      double acc = 0.0;
      for (std::size_t i = 0; i < xn.value.size(); ++i) acc += self.grad[i] * xn.value[i];
      sn.grad_buffer()[0] += acc;
    }
    if (xn.requires_grad) {
      auto& g = xn.grad_buffer();
      const double factor = sn.value[0];
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += factor * self.grad[i];
    }
  });
}

Tensor add_bias(const Tensor& x, const Tensor& bias) {
  const std::size_t n = last_dim(x.shape());
  if (bias.rank() != 1 || bias.dim(0) != n || x.rank() == 0) {
    throw DimensionError("add_bias: bias " + shape_to_string(bias.shape()) +
                         " does not match " + shape_to_string(x.shape()));
  }
  const auto xv = x.values(), bv = bias.values();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] + bv[i % n];
  return make_result("add_bias", x.shape(), std::move(out), {&x, &bias},
                     [n](Node& self) {
                       Node& xn = *self.inputs[0];
                       Node& bn = *self.inputs[1];
                       if (xn.requires_grad) accumulate(xn.grad_buffer(), self.grad);
                       if (bn.requires_grad) {
                         auto& g = bn.grad_buffer();
                         // Column sums in row order.
                         for (std::size_t i = 0; i < self.grad.size(); ++i) {
                           g[i % n] += self.grad[i];
                         }
                       }
                     });
}

Tensor sigmoid(const Tensor& x) {
  return unary_elementwise(
      "sigmoid", x,
      [](double v) {
        if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor relu(const Tensor& x) {
  return unary_elementwise(
      "relu", x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor tanh(const Tensor& x) {
  return unary_elementwise(
      "tanh", x, [](double v) { return std::tanh(v); },
      [](double, double y) { return 1.0 - y * y; });
}

Tensor softmax_rows(const Tensor& x) {
  const std::size_t n = last_dim(x.shape());
  const auto xv = x.values();
  std::vector<double> out(xv.size());
  for (std::size_t r = 0; r < xv.size(); r += n) {
    double mx = xv[r];
    for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, xv[r + j]);
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      out[r + j] = std::exp(xv[r + j] - mx);
      total += out[r + j];
    }
    for (std::size_t j = 0; j < n; ++j) out[r + j] /= total;
  }
  return make_result("softmax", x.shape(), std::move(out), {&x}, [n](Node& self) {
    auto& g = self.inputs[0]->grad_buffer();
    const auto& y = self.value;
    for (std::size_t r = 0; r < y.size(); r += n) {
      double dot = 0.0;
      for (std::size_t j = 0; j < n; ++j) dot += self.grad[r + j] * y[r + j];
      for (std::size_t j = 0; j < n; ++j) {
        g[r + j] += y[r + j] * (self.grad[r + j] - dot);
      }
    }
  });
}

// ---- layout ---------------------------------------------------------------

Tensor concat_last(const Tensor& a, const Tensor& b) {
  const auto& sa = a.shape();
  const auto& sb = b.shape();
  const bool compatible = sa.size() == sb.size() && !sa.empty() &&
                          std::equal(sa.begin(), sa.end() - 1, sb.begin());
  if (!compatible) {
    throw DimensionError("concat_last: incompatible shapes " + shape_to_string(sa) +
                         " and " + shape_to_string(sb));
  }
  const std::size_t na = sa.back(), nb = sb.back(), rows = a.numel() / na;
  Shape out_shape = sa;
  out_shape.back() = na + nb;
  std::vector<double> out(rows * (na + nb));
  const auto av = a.values(), bv = b.values();
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(av.data() + r * na, na, out.data() + r * (na + nb));
    std::copy_n(bv.data() + r * nb, nb, out.data() + r * (na + nb) + na);
  }
  return make_result("concat", std::move(out_shape), std::move(out), {&a, &b},
                     [na, nb, rows](Node& self) {
                       Node& an = *self.inputs[0];
                       Node& bn = *self.inputs[1];
                       const std::size_t w = na + nb;
                       if (an.requires_grad) {
                         auto& g = an.grad_buffer();
                         for (std::size_t r = 0; r < rows; ++r)
                           for (std::size_t j = 0; j < na; ++j)
                             g[r * na + j] += self.grad[r * w + j];
                       }
                       if (bn.requires_grad) {
                         auto& g = bn.grad_buffer();
                         for (std::size_t r = 0; r < rows; ++r)
                           for (std::size_t j = 0; j < nb; ++j)
                             g[r * nb + j] += self.grad[r * w + na + j];
                       }
                     });
}

Tensor slice_last(const Tensor& x, std::size_t begin, std::size_t length) {
  const auto& s = x.shape();
  if (s.empty() || length == 0 || begin + length > s.back()) {
    throw DimensionError("slice_last: range [" + std::to_string(begin) + ", " +
                         std::to_string(begin + length) + ") out of bounds for " +
                         shape_to_string(s));
  }
  const std::size_t w = s.back(), rows = x.numel() / w;
  Shape out_shape = s;
  out_shape.back() = length;
  std::vector<double> out(rows * length);
  const auto xv = x.values();
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(xv.data() + r * w + begin, length, out.data() + r * length);
  }
  return make_result("slice", std::move(out_shape), std::move(out), {&x},
                     [w, rows, begin, length](Node& self) {
                       auto& g = self.inputs[0]->grad_buffer();
                       for (std::size_t r = 0; r < rows; ++r)
                         for (std::size_t j = 0; j < length; ++j)
                           g[r * w + begin + j] += self.grad[r * length + j];
                     });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw DimensionError("reshape: cannot view " + shape_to_string(x.shape()) +
                         " as " + shape_to_string(shape));
  }
  const auto xv = x.values();
  return make_result("reshape", std::move(shape),
                     std::vector<double>(xv.begin(), xv.end()), {&x}, [](Node& self) {
                       accumulate(self.inputs[0]->grad_buffer(), self.grad);
                     });
}

// ---- losses and reductions -----------------------------------------------

Tensor cross_entropy(const Tensor& logits, std::span<const std::size_t> labels) {
  if (logits.rank() != 1 && logits.rank() != 2) {
    throw DimensionError("cross_entropy: logits must be [B, C] or [C], got " +
                         shape_to_string(logits.shape()));
  }
  const std::size_t c = logits.shape().back();
  const std::size_t b = logits.numel() / c;
  if (labels.size() != b) {
    throw DimensionError("cross_entropy: " + std::to_string(labels.size()) +
                         " labels for a batch of " + std::to_string(b));
  }
  for (auto y : labels) {
    if (y >= c) {
      throw InvalidArgument("cross_entropy: label " + std::to_string(y) +
                            " outside [0, " + std::to_string(c) + ")");
    }
  }
  const auto lv = logits.values();
  // Softmax probabilities are kept for the backward pass.
  std::vector<double> probs(lv.size());
  double total = 0.0;
  for (std::size_t r = 0; r < b; ++r) {
    const double* row = lv.data() + r * c;
    const double mx = *std::max_element(row, row + c);
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) z += std::exp(row[j] - mx);
    const double log_z = mx + std::log(z);
    total += log_z - row[labels[r]];
    for (std::size_t j = 0; j < c; ++j) probs[r * c + j] = std::exp(row[j] - log_z);
  }
  std::vector<std::size_t> ys(labels.begin(), labels.end());
  return make_result("cross_entropy", {}, {total / static_cast<double>(b)}, {&logits},
                     [probs = std::move(probs), ys = std::move(ys), b, c](Node& self) {
                       auto& g = self.inputs[0]->grad_buffer();
                       const double up = self.grad[0] / static_cast<double>(b);
                       for (std::size_t r = 0; r < b; ++r) {
                         for (std::size_t j = 0; j < c; ++j) {
                           const double onehot = j == ys[r] ? 1.0 : 0.0;
                           g[r * c + j] += up * (probs[r * c + j] - onehot);
                         }
                       }
                     });
}

Tensor sum(const Tensor& x) {
  double total = 0.0;
  for (double v : x.values()) total += v;
  return make_result("sum", {}, {total}, {&x}, [](Node& self) {
    auto& g = self.inputs[0]->grad_buffer();
    for (auto& v : g) v += self.grad[0];
  });
}

}  // namespace fusionette
