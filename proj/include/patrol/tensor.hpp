#pragma once

#include <array>
#include <functional>
#include <memory>
#include <stdexcept>
#include <vector>

namespace patrol::ad {

struct AdError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ShapeMismatch : AdError {
  using AdError::AdError;
};
struct NonScalarLoss : AdError {
  using AdError::AdError;
};
struct AllMasked : AdError {
  using AdError::AdError;
};

struct Node {
  std::vector<int> shape;
  std::vector<double> value;
  std::vector<double> grad;  // sized lazily, matches value
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // scatters this node's grad into its parents' grads
  std::function<void(Node&)> backward;
};

// Toggle for graph recording. Episode collection runs inference under
// NoGradGuard so sampled forwards do not retain graphs.
bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

// Handle to a value + provenance node. Copies alias the same storage.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}
  Tensor(std::vector<int> shape, double fill = 0.0, bool requires_grad = false);
  Tensor(std::vector<int> shape, std::vector<double> data, bool requires_grad = false);
  static Tensor scalar(double v, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const std::vector<int>& shape() const { return node_->shape; }
  int size() const { return static_cast<int>(node_->value.size()); }
  double item() const;

  std::vector<double>& data() { return node_->value; }
  const std::vector<double>& data() const { return node_->value; }
  std::vector<double>& grad();
  bool requires_grad() const { return node_->requires_grad; }
  void zero_grad();

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

int shape_numel(const std::vector<int>& shape);

// ---- elementwise / reductions -------------------------------------------

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
Tensor add_const(const Tensor& a, double c);
Tensor tanh_op(const Tensor& a);
Tensor log_op(const Tensor& a);
Tensor clamp(const Tensor& a, double lo, double hi);
Tensor min2(const Tensor& a, const Tensor& b);
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
Tensor sum_list(const std::vector<Tensor>& scalars);
Tensor select(const Tensor& a, int index);
Tensor concat(const Tensor& a, const Tensor& b);
Tensor flatten(const Tensor& a);
Tensor softmax(const Tensor& a);  // 1-D
Tensor div_by_scalar(const Tensor& v, const Tensor& s);

// ---- network primitives ---------------------------------------------------

// x: [in], w: [out, in], b: [out]
Tensor dense(const Tensor& x, const Tensor& w, const Tensor& b);
// x: [IC, H, W], w: [OC, IC, KH, KW], b: [OC]
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int padding);

// ---- invalid-action masking ------------------------------------------------

// Zeroes masked entries of a probability vector and renormalizes the rest.
// Differentiable through the valid entries. Throws AllMasked.
Tensor masked_renormalize(const Tensor& probs, const std::vector<double>& mask);
// softmax over all logits followed by masked renormalization
Tensor masked_softmax(const Tensor& logits, const std::vector<double>& mask);
Tensor masked_softmax(const Tensor& logits, const std::array<int, 4>& mask);

// Populates grad buffers with d(loss)/d(param) for everything reachable from
// `loss`. Throws NonScalarLoss.
void backward(const Tensor& loss);

}  // namespace patrol::ad
