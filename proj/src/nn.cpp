#include "patrol/nn.hpp"

#include <cmath>

namespace patrol::ad {

void orthogonal_init(Tensor& w, double gain, Rng& rng) {
  // treat conv kernels as [out, in*kh*kw]
  int rows = w.shape()[0];
  int cols = w.size() / rows;
  bool transpose = rows > cols;
  int n = transpose ? cols : rows;   // vectors to orthonormalize
  int m = transpose ? rows : cols;   // their length
  std::vector<std::vector<double>> basis(n, std::vector<double>(m));
  for (auto& vec : basis)
    for (double& x : vec) x = rng.normal();
  // modified Gram-Schmidt
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < i; ++j) {
      double dot = 0.0;
      for (int k = 0; k < m; ++k) dot += basis[i][k] * basis[j][k];
      for (int k = 0; k < m; ++k) basis[i][k] -= dot * basis[j][k];
    }
    double norm = 0.0;
    for (double x : basis[i]) norm += x * x;
    norm = std::sqrt(norm);
    if (norm < 1e-12) norm = 1.0;
    for (double& x : basis[i]) x = x / norm;
  }
  auto& data = w.data();
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      data[r * cols + c] = gain * (transpose ? basis[c][r] : basis[r][c]);
}

std::vector<Layer> make_layers(const std::vector<LayerSpec>& specs, Rng& rng) {
  std::vector<Layer> layers;
  layers.reserve(specs.size());
  double gain = std::sqrt(2.0);
  for (const LayerSpec& spec : specs) {
    Layer layer;
    layer.spec = spec;
    if (const auto* conv = std::get_if<Conv2dSpec>(&spec)) {
      layer.weight = Tensor({conv->out_channels, conv->in_channels, conv->kernel_h,
                             conv->kernel_w},
                            0.0, true);
      layer.bias = Tensor({conv->out_channels}, 0.0, true);
      orthogonal_init(layer.weight, gain, rng);
    } else if (const auto* d = std::get_if<DenseSpec>(&spec)) {
      layer.weight = Tensor({d->out, d->in}, 0.0, true);
      layer.bias = Tensor({d->out}, 0.0, true);
      orthogonal_init(layer.weight, gain, rng);
    }
    layers.push_back(std::move(layer));
  }
  return layers;
}

Tensor forward(const std::vector<Layer>& layers, Tensor x) {
  for (const Layer& layer : layers) {
    if (const auto* conv = std::get_if<Conv2dSpec>(&layer.spec)) {
      x = conv2d(x, layer.weight, layer.bias, conv->stride, conv->padding);
    } else if (std::holds_alternative<DenseSpec>(layer.spec)) {
      x = dense(x, layer.weight, layer.bias);
    } else if (std::holds_alternative<TanhSpec>(layer.spec)) {
      x = tanh_op(x);
    } else if (std::holds_alternative<FlattenSpec>(layer.spec)) {
      x = flatten(x);
    } else {
      x = softmax(x);
    }
  }
  return x;
}

std::vector<Tensor> parameters(const std::vector<Layer>& layers) {
  std::vector<Tensor> params;
  for (const Layer& layer : layers) {
    if (layer.weight.defined()) {
      params.push_back(layer.weight);
      params.push_back(layer.bias);
    }
  }
  return params;
}

std::vector<int> output_shape(const std::vector<LayerSpec>& specs, std::vector<int> shape) {
  for (const LayerSpec& spec : specs) {
    if (const auto* conv = std::get_if<Conv2dSpec>(&spec)) {
      if (shape.size() != 3 || shape[0] != conv->in_channels)
        throw ShapeMismatch("conv input shape mismatch");
      int oh = (shape[1] + 2 * conv->padding - conv->kernel_h) / conv->stride + 1;
      int ow = (shape[2] + 2 * conv->padding - conv->kernel_w) / conv->stride + 1;
      if (oh <= 0 || ow <= 0) throw ShapeMismatch("conv output would be empty");
      shape = {conv->out_channels, oh, ow};
    } else if (const auto* d = std::get_if<DenseSpec>(&spec)) {
      if (shape_numel(shape) != d->in) throw ShapeMismatch("dense input width mismatch");
      shape = {d->out};
    } else if (std::holds_alternative<FlattenSpec>(spec)) {
      shape = {shape_numel(shape)};
    }
  }
  return shape;
}

Adam::Adam(std::vector<Tensor> params, double lr, double beta1, double beta2, double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const Tensor& p : params_) {
    m_.emplace_back(p.size(), 0.0);
    v_.emplace_back(p.size(), 0.0);
  }
}

void Adam::zero_grad() {
  for (Tensor& p : params_) p.zero_grad();
}

void Adam::step() {
  ++t_;
  double bc1 = 1.0 - std::pow(beta1_, t_);
  double bc2 = 1.0 - std::pow(beta2_, t_);
  for (size_t i = 0; i < params_.size(); ++i) {
    Tensor& p = params_[i];
    const auto& g = p.grad();
    auto& data = p.data();
    for (size_t k = 0; k < data.size(); ++k) {
      m_[i][k] = beta1_ * m_[i][k] + (1.0 - beta1_) * g[k];
      v_[i][k] = beta2_ * v_[i][k] + (1.0 - beta2_) * g[k] * g[k];
      double mhat = m_[i][k] / bc1;
      double vhat = v_[i][k] / bc2;
      data[k] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

}  // namespace patrol::ad
