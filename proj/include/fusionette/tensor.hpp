#pragma once

// Dense float64 tensors with a dynamic reverse-mode gradient tape.
//
// A Tensor is a cheap shared handle to a graph node. Every op that has at
// least one input requiring a gradient records itself by keeping references to
// its inputs and a backward closure; the graph rooted at a loss *is* the tape.
// Nodes carry a global creation sequence number, so sorting reachable nodes by
// sequence yields a valid topological order without a separate DFS.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fusionette {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_to_string(const Shape& shape);

namespace detail {
struct Node;
struct TensorAccess;
}  // namespace detail

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from_values(Shape shape, std::vector<double> values,
                            bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const;

  std::span<const double> values() const;
  /// Direct write access, meant for leaves (parameters, test fixtures).
  /// Mutating an interior node after backward has run is undefined.
  std::span<double> mutable_values() const;
  double item() const;
  double at(std::size_t i) const { return values()[i]; }

  bool requires_grad() const;
  bool has_grad() const;
  /// Empty span when no gradient has been accumulated.
  std::span<const double> grad() const;
  void clear_grad() const;

  /// Leaf copy of the current values, detached from any graph.
  Tensor detach(bool requires_grad = false) const;

  std::string_view op_name() const;
  std::uint64_t sequence() const;

  /// True when both handles refer to the same graph node.
  bool same_node(const Tensor& other) const { return node_ == other.node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

  std::shared_ptr<detail::Node> node_;

  friend struct detail::TensorAccess;
};

/// One recorded operation as seen by tests and diagnostics.
struct TapeEntry {
  std::string_view op;
  std::uint64_t sequence = 0;
  std::vector<std::uint64_t> input_sequences;
};

/// The operations reachable from a root that participate in differentiation,
/// in topological (creation) order.
class Tape {
 public:
  static Tape record(const Tensor& root);

  std::size_t size() const { return nodes_.size(); }
  TapeEntry entry(std::size_t i) const;

  /// Seeds d(root)/d(root) = 1 and runs every backward closure once, in
  /// reverse order. Gradients accumulate into existing buffers.
  void backward();

  /// Ops visited by the last backward() call, in visit order.
  const std::vector<std::uint64_t>& visited() const { return visited_; }

 private:
  std::vector<std::shared_ptr<detail::Node>> nodes_;
  std::vector<std::uint64_t> visited_;
};

/// Populates grad on every requires_grad tensor reachable from `loss`.
/// Throws DimensionError for a non-scalar loss and InvalidArgument when the
/// loss does not depend on anything that requires a gradient.
void backward(const Tensor& loss);

/// p <- p - lr * grad, then clears the gradient. Plain SGD.
void sgd_step(const std::vector<Tensor>& params, double lr);

/// While alive, ops on this thread do not record backward information.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

// ---- operations -----------------------------------------------------------

/// a: m x k, b: k x n.
Tensor matmul(const Tensor& a, const Tensor& b);
/// Batched a * b: [B, n, k] x [B, k, m]; rank-2 operands act as B = 1.
Tensor bmm(const Tensor& a, const Tensor& b);
/// Batched a * b^T: [B, n, k] x [B, m, k] -> [B, n, m].
Tensor bmm_nt(const Tensor& a, const Tensor& b);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
/// Elementwise (Hadamard) product.
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double factor);
/// s * x for a single-element tensor s; the gradient reaches s.
Tensor scale_by(const Tensor& s, const Tensor& x);
/// x[..., j] + bias[j].
Tensor add_bias(const Tensor& x, const Tensor& bias);

Tensor sigmoid(const Tensor& x);
Tensor relu(const Tensor& x);
Tensor tanh(const Tensor& x);

/// Softmax over the last axis, max-subtracted.
Tensor softmax_rows(const Tensor& x);

Tensor concat_last(const Tensor& a, const Tensor& b);
/// x[..., begin : begin + length].
Tensor slice_last(const Tensor& x, std::size_t begin, std::size_t length);
Tensor reshape(const Tensor& x, Shape shape);

/// Mean over the batch of -log softmax(logits)[label]. logits: [B, C] or [C].
Tensor cross_entropy(const Tensor& logits, std::span<const std::size_t> labels);

Tensor sum(const Tensor& x);

}  // namespace fusionette
