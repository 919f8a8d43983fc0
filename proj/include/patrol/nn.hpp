#pragma once

#include <variant>

#include "patrol/rng.hpp"
#include "patrol/tensor.hpp"

namespace patrol::ad {

struct Conv2dSpec {
  int in_channels = 1;
  int out_channels = 1;
  int kernel_h = 3;
  int kernel_w = 3;
  int stride = 1;
  int padding = 0;
};
struct DenseSpec {
  int in = 1;
  int out = 1;
};
struct TanhSpec {};
struct FlattenSpec {};
struct SoftmaxSpec {};

using LayerSpec = std::variant<Conv2dSpec, DenseSpec, TanhSpec, FlattenSpec, SoftmaxSpec>;

struct Layer {
  LayerSpec spec;
  Tensor weight;  // defined for Conv2d/Dense only
  Tensor bias;
};

// Orthogonal rows (or columns when out < in) scaled by `gain`.
void orthogonal_init(Tensor& w, double gain, Rng& rng);

// Parameters: orthogonal weights with gain sqrt(2), zero biases.
std::vector<Layer> make_layers(const std::vector<LayerSpec>& specs, Rng& rng);

Tensor forward(const std::vector<Layer>& layers, Tensor input);

std::vector<Tensor> parameters(const std::vector<Layer>& layers);

// output shape propagation without running the net
std::vector<int> output_shape(const std::vector<LayerSpec>& specs, std::vector<int> input);

// Adaptive-moment optimizer over a fixed parameter set.
class Adam {
 public:
  explicit Adam(std::vector<Tensor> params, double lr = 2e-4, double beta1 = 0.9,
                double beta2 = 0.999, double eps = 1e-8);

  void set_lr(double lr) { lr_ = lr; }
  double lr() const { return lr_; }
  void zero_grad();
  void step();

 private:
  std::vector<Tensor> params_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  long t_ = 0;
  double lr_, beta1_, beta2_, eps_;
};

}  // namespace patrol::ad
