#include "patrol/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace patrol::ad {

namespace {
thread_local bool g_grad_enabled = true;
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

int shape_numel(const std::vector<int>& shape) {
  int n = 1;
  for (int d : shape) n *= d;
  return n;
}

Tensor::Tensor(std::vector<int> shape, double fill, bool requires_grad) {
  node_ = std::make_shared<Node>();
  node_->shape = std::move(shape);
  node_->value.assign(shape_numel(node_->shape), fill);
  node_->requires_grad = requires_grad;
}

Tensor::Tensor(std::vector<int> shape, std::vector<double> data, bool requires_grad) {
  if (shape_numel(shape) != static_cast<int>(data.size()))
    throw ShapeMismatch("data length does not match shape");
  node_ = std::make_shared<Node>();
  node_->shape = std::move(shape);
  node_->value = std::move(data);
  node_->requires_grad = requires_grad;
}

Tensor Tensor::scalar(double v, bool requires_grad) {
  return Tensor({1}, std::vector<double>{v}, requires_grad);
}

double Tensor::item() const {
  if (size() != 1) throw NonScalarLoss("item() on non-scalar tensor");
  return node_->value[0];
}

std::vector<double>& Tensor::grad() {
  if (node_->grad.size() != node_->value.size()) node_->grad.assign(node_->value.size(), 0.0);
  return node_->grad;
}

void Tensor::zero_grad() { node_->grad.assign(node_->value.size(), 0.0); }

namespace {

std::vector<double>& ensure_grad(Node& n) {
  if (n.grad.size() != n.value.size()) n.grad.assign(n.value.size(), 0.0);
  return n.grad;
}

// Builds the result node; parents/backward are only recorded when grads are
// both enabled and needed.
Tensor make_result(std::vector<int> shape, std::vector<double> value,
                   std::vector<Tensor> parents, std::function<void(Node&)> bw) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  bool needs = false;
  if (g_grad_enabled) {
    for (const Tensor& p : parents)
      if (p.node()->requires_grad) needs = true;
  }
  if (needs) {
    node->requires_grad = true;
    node->parents.reserve(parents.size());
    for (const Tensor& p : parents) node->parents.push_back(p.node());
    node->backward = std::move(bw);
  }
  return Tensor(node);
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) throw ShapeMismatch(std::string(op) + ": shape mismatch");
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  std::vector<double> out(a.size());
  for (int i = 0; i < a.size(); ++i) out[i] = a.data()[i] + b.data()[i];
  return make_result(a.shape(), std::move(out), {a, b}, [](Node& n) {
    for (auto& parent : n.parents) {
      if (!parent->requires_grad) continue;
      auto& g = ensure_grad(*parent);
      for (size_t i = 0; i < n.grad.size(); ++i) g[i] += n.grad[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "sub");
  std::vector<double> out(a.size());
  for (int i = 0; i < a.size(); ++i) out[i] = a.data()[i] - b.data()[i];
  return make_result(a.shape(), std::move(out), {a, b}, [](Node& n) {
    if (n.parents[0]->requires_grad) {
      auto& g = ensure_grad(*n.parents[0]);
      for (size_t i = 0; i < n.grad.size(); ++i) g[i] += n.grad[i];
    }
    if (n.parents[1]->requires_grad) {
      auto& g = ensure_grad(*n.parents[1]);
      for (size_t i = 0; i < n.grad.size(); ++i) g[i] -= n.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  std::vector<double> out(a.size());
  for (int i = 0; i < a.size(); ++i) out[i] = a.data()[i] * b.data()[i];
  return make_result(a.shape(), std::move(out), {a, b}, [](Node& n) {
    Node& pa = *n.parents[0];
    Node& pb = *n.parents[1];
    if (pa.requires_grad) {
      auto& g = ensure_grad(pa);
      for (size_t i = 0; i < n.grad.size(); ++i) g[i] += n.grad[i] * pb.value[i];
    }
    if (pb.requires_grad) {
      auto& g = ensure_grad(pb);
      for (size_t i = 0; i < n.grad.size(); ++i) g[i] += n.grad[i] * pa.value[i];
    }
  });
}

Tensor scale(const Tensor& a, double c) {
  std::vector<double> out(a.size());
  for (int i = 0; i < a.size(); ++i) out[i] = a.data()[i] * c;
  return make_result(a.shape(), std::move(out), {a}, [c](Node& n) {
    if (!n.parents[0]->requires_grad) return;
    auto& g = ensure_grad(*n.parents[0]);
    for (size_t i = 0; i < n.grad.size(); ++i) g[i] += n.grad[i] * c;
  });
}

Tensor add_const(const Tensor& a, double c) {
  std::vector<double> out(a.size());
  for (int i = 0; i < a.size(); ++i) out[i] = a.data()[i] + c;
  return make_result(a.shape(), std::move(out), {a}, [](Node& n) {
    if (!n.parents[0]->requires_grad) return;
    auto& g = ensure_grad(*n.parents[0]);
    for (size_t i = 0; i < n.grad.size(); ++i) g[i] += n.grad[i];
  });
}

Tensor tanh_op(const Tensor& a) {
  std::vector<double> out(a.size());
  for (int i = 0; i < a.size(); ++i) out[i] = std::tanh(a.data()[i]);
  return make_result(a.shape(), std::move(out), {a}, [](Node& n) {
    if (!n.parents[0]->requires_grad) return;
    auto& g = ensure_grad(*n.parents[0]);
    for (size_t i = 0; i < n.grad.size(); ++i) g[i] += n.grad[i] * (1.0 - n.value[i] * n.value[i]);
  });
}

Tensor log_op(const Tensor& a) {
  std::vector<double> out(a.size());
  for (int i = 0; i < a.size(); ++i) out[i] = std::log(a.data()[i]);
  return make_result(a.shape(), std::move(out), {a}, [](Node& n) {
    if (!n.parents[0]->requires_grad) return;
    Node& p = *n.parents[0];
    auto& g = ensure_grad(p);
    for (size_t i = 0; i < n.grad.size(); ++i) g[i] += n.grad[i] / p.value[i];
  });
}

Tensor clamp(const Tensor& a, double lo, double hi) {
  std::vector<double> out(a.size());
  for (int i = 0; i < a.size(); ++i) out[i] = std::clamp(a.data()[i], lo, hi);
  return make_result(a.shape(), std::move(out), {a}, [lo, hi](Node& n) {
    if (!n.parents[0]->requires_grad) return;
    Node& p = *n.parents[0];
    auto& g = ensure_grad(p);
    for (size_t i = 0; i < n.grad.size(); ++i)
      if (p.value[i] > lo && p.value[i] < hi) g[i] += n.grad[i];
  });
}

Tensor min2(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "min2");
  std::vector<double> out(a.size());
  for (int i = 0; i < a.size(); ++i) out[i] = std::min(a.data()[i], b.data()[i]);
  return make_result(a.shape(), std::move(out), {a, b}, [](Node& n) {
    Node& pa = *n.parents[0];
    Node& pb = *n.parents[1];
    for (size_t i = 0; i < n.grad.size(); ++i) {
      // subgradient: route to the smaller side, ties to the first argument
      if (pa.value[i] <= pb.value[i]) {
        if (pa.requires_grad) ensure_grad(pa)[i] += n.grad[i];
      } else {
        if (pb.requires_grad) ensure_grad(pb)[i] += n.grad[i];
      }
    }
  });
}

Tensor sum(const Tensor& a) {
  double total = 0.0;
  for (double v : a.data()) total += v;
  return make_result({1}, {total}, {a}, [](Node& n) {
    if (!n.parents[0]->requires_grad) return;
    auto& g = ensure_grad(*n.parents[0]);
    for (size_t i = 0; i < g.size(); ++i) g[i] += n.grad[0];
  });
}

Tensor mean(const Tensor& a) {
  double total = 0.0;
  for (double v : a.data()) total += v;
  double inv = 1.0 / a.size();
  return make_result({1}, {total * inv}, {a}, [inv](Node& n) {
    if (!n.parents[0]->requires_grad) return;
    auto& g = ensure_grad(*n.parents[0]);
    for (size_t i = 0; i < g.size(); ++i) g[i] += n.grad[0] * inv;
  });
}

Tensor sum_list(const std::vector<Tensor>& scalars) {
  if (scalars.empty()) return Tensor::scalar(0.0);
  double total = 0.0;
  for (const Tensor& t : scalars) {
    if (t.size() != 1) throw ShapeMismatch("sum_list expects scalars");
    total += t.data()[0];
  }
  return make_result({1}, {total}, scalars, [](Node& n) {
    for (auto& parent : n.parents) {
      if (!parent->requires_grad) continue;
      ensure_grad(*parent)[0] += n.grad[0];
    }
  });
}

Tensor select(const Tensor& a, int index) {
  if (index < 0 || index >= a.size()) throw ShapeMismatch("select index out of range");
  return make_result({1}, {a.data()[index]}, {a}, [index](Node& n) {
    if (!n.parents[0]->requires_grad) return;
    ensure_grad(*n.parents[0])[index] += n.grad[0];
  });
}

Tensor concat(const Tensor& a, const Tensor& b) {
  std::vector<double> out;
  out.reserve(a.size() + b.size());
  out.insert(out.end(), a.data().begin(), a.data().end());
  out.insert(out.end(), b.data().begin(), b.data().end());
  int na = a.size();
  return make_result({a.size() + b.size()}, std::move(out), {a, b}, [na](Node& n) {
    Node& pa = *n.parents[0];
    Node& pb = *n.parents[1];
    if (pa.requires_grad) {
      auto& g = ensure_grad(pa);
      for (int i = 0; i < na; ++i) g[i] += n.grad[i];
    }
    if (pb.requires_grad) {
      auto& g = ensure_grad(pb);
      for (size_t i = na; i < n.grad.size(); ++i) g[i - na] += n.grad[i];
    }
  });
}

Tensor flatten(const Tensor& a) {
  return make_result({a.size()}, a.data(), {a}, [](Node& n) {
    if (!n.parents[0]->requires_grad) return;
    auto& g = ensure_grad(*n.parents[0]);
    for (size_t i = 0; i < n.grad.size(); ++i) g[i] += n.grad[i];
  });
}

Tensor softmax(const Tensor& a) {
  double hi = *std::max_element(a.data().begin(), a.data().end());
  std::vector<double> out(a.size());
  double z = 0.0;
  for (int i = 0; i < a.size(); ++i) {
    out[i] = std::exp(a.data()[i] - hi);
    z += out[i];
  }
  for (double& v : out) v /= z;
  return make_result(a.shape(), std::move(out), {a}, [](Node& n) {
    if (!n.parents[0]->requires_grad) return;
    auto& g = ensure_grad(*n.parents[0]);
    double dot = 0.0;
    for (size_t i = 0; i < n.grad.size(); ++i) dot += n.grad[i] * n.value[i];
    for (size_t i = 0; i < n.grad.size(); ++i) g[i] += n.value[i] * (n.grad[i] - dot);
  });
}

Tensor div_by_scalar(const Tensor& v, const Tensor& s) {
  if (s.size() != 1) throw ShapeMismatch("div_by_scalar divisor must be scalar");
  double d = s.data()[0];
  std::vector<double> out(v.size());
  for (int i = 0; i < v.size(); ++i) out[i] = v.data()[i] / d;
  return make_result(v.shape(), std::move(out), {v, s}, [](Node& n) {
    Node& pv = *n.parents[0];
    Node& ps = *n.parents[1];
    double d = ps.value[0];
    if (pv.requires_grad) {
      auto& g = ensure_grad(pv);
      for (size_t i = 0; i < n.grad.size(); ++i) g[i] += n.grad[i] / d;
    }
    if (ps.requires_grad) {
      auto& g = ensure_grad(ps);
      double acc = 0.0;
      for (size_t i = 0; i < n.grad.size(); ++i) acc += n.grad[i] * pv.value[i];
      g[0] -= acc / (d * d);
    }
  });
}

Tensor dense(const Tensor& x, const Tensor& w, const Tensor& b) {
  if (w.shape().size() != 2) throw ShapeMismatch("dense weight must be 2-D");
  int out_dim = w.shape()[0];
  int in_dim = w.shape()[1];
  if (x.size() != in_dim || b.size() != out_dim)
    throw ShapeMismatch("dense input/bias size mismatch");
  std::vector<double> out(out_dim);
  const double* xv = x.data().data();
  const double* wv = w.data().data();
  for (int o = 0; o < out_dim; ++o) {
    double acc = b.data()[o];
    const double* row = wv + o * in_dim;
    for (int i = 0; i < in_dim; ++i) acc += row[i] * xv[i];
    out[o] = acc;
  }
  return make_result({out_dim}, std::move(out), {x, w, b}, [out_dim, in_dim](Node& n) {
    Node& px = *n.parents[0];
    Node& pw = *n.parents[1];
    Node& pb = *n.parents[2];
    if (px.requires_grad) {
      auto& gx = ensure_grad(px);
      for (int o = 0; o < out_dim; ++o) {
        double go = n.grad[o];
        const double* row = pw.value.data() + o * in_dim;
        for (int i = 0; i < in_dim; ++i) gx[i] += go * row[i];
      }
    }
    if (pw.requires_grad) {
      auto& gw = ensure_grad(pw);
      for (int o = 0; o < out_dim; ++o) {
        double go = n.grad[o];
        double* row = gw.data() + o * in_dim;
        for (int i = 0; i < in_dim; ++i) row[i] += go * px.value[i];
      }
    }
    if (pb.requires_grad) {
      auto& gb = ensure_grad(pb);
      for (int o = 0; o < out_dim; ++o) gb[o] += n.grad[o];
    }
  });
}

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int padding) {
  if (x.shape().size() != 3 || w.shape().size() != 4)
    throw ShapeMismatch("conv2d expects x[C,H,W], w[OC,IC,KH,KW]");
  int ic = x.shape()[0], h = x.shape()[1], wd = x.shape()[2];
  int oc = w.shape()[0], kic = w.shape()[1], kh = w.shape()[2], kw = w.shape()[3];
  if (ic != kic) throw ShapeMismatch("conv2d channel mismatch");
  if (b.size() != oc) throw ShapeMismatch("conv2d bias size mismatch");
  int oh = (h + 2 * padding - kh) / stride + 1;
  int ow = (wd + 2 * padding - kw) / stride + 1;
  if (oh <= 0 || ow <= 0) throw ShapeMismatch("conv2d output would be empty");

  std::vector<double> out(oc * oh * ow, 0.0);
  const auto& xv = x.data();
  const auto& wv = w.data();
  for (int o = 0; o < oc; ++o) {
    for (int y = 0; y < oh; ++y) {
      for (int xo = 0; xo < ow; ++xo) {
        double acc = b.data()[o];
        for (int c = 0; c < ic; ++c) {
          for (int ky = 0; ky < kh; ++ky) {
            int iy = y * stride + ky - padding;
            if (iy < 0 || iy >= h) continue;
            for (int kx = 0; kx < kw; ++kx) {
              int ix = xo * stride + kx - padding;
              if (ix < 0 || ix >= wd) continue;
              acc += wv[((o * ic + c) * kh + ky) * kw + kx] * xv[(c * h + iy) * wd + ix];
            }
          }
        }
        out[(o * oh + y) * ow + xo] = acc;
      }
    }
  }
  auto bw = [=](Node& n) {
    Node& px = *n.parents[0];
    Node& pw = *n.parents[1];
    Node& pb = *n.parents[2];
    std::vector<double>* gx = px.requires_grad ? &ensure_grad(px) : nullptr;
    std::vector<double>* gw = pw.requires_grad ? &ensure_grad(pw) : nullptr;
    std::vector<double>* gb = pb.requires_grad ? &ensure_grad(pb) : nullptr;
    for (int o = 0; o < oc; ++o) {
      for (int y = 0; y < oh; ++y) {
        for (int xo = 0; xo < ow; ++xo) {
          double go = n.grad[(o * oh + y) * ow + xo];
          if (go == 0.0) continue;
          if (gb) (*gb)[o] += go;
          for (int c = 0; c < ic; ++c) {
            for (int ky = 0; ky < kh; ++ky) {
              int iy = y * stride + ky - padding;
              if (iy < 0 || iy >= h) continue;
              for (int kx = 0; kx < kw; ++kx) {
                int ix = xo * stride + kx - padding;
                if (ix < 0 || ix >= wd) continue;
                int wi = ((o * ic + c) * kh + ky) * kw + kx;
                int xi = (c * h + iy) * wd + ix;
                if (gx) (*gx)[xi] += go * pw.value[wi];
                if (gw) (*gw)[wi] += go * px.value[xi];
              }
            }
          }
        }
      }
    }
  };
  return make_result({oc, oh, ow}, std::move(out), {x, w, b}, std::move(bw));
}

Tensor masked_renormalize(const Tensor& probs, const std::vector<double>& mask) {
  if (static_cast<int>(mask.size()) != probs.size())
    throw ShapeMismatch("mask length mismatch");
  bool any = false;
  for (double m : mask)
    if (m != 0.0) any = true;
  if (!any) throw AllMasked("mask has no valid entries");
  Tensor mask_t(probs.shape(), std::vector<double>(mask));
  Tensor kept = mul(probs, mask_t);
  Tensor z = sum(kept);
  if (z.data()[0] <= 0.0) throw AllMasked("no probability mass on valid entries");
  return div_by_scalar(kept, z);
}

Tensor masked_softmax(const Tensor& logits, const std::vector<double>& mask) {
  return masked_renormalize(softmax(logits), mask);
}

Tensor masked_softmax(const Tensor& logits, const std::array<int, 4>& mask) {
  return masked_softmax(logits, std::vector<double>(mask.begin(), mask.end()));
}

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1) throw NonScalarLoss("loss must be a scalar");
  // iterative topological order over the recorded graph
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, size_t>> stack;
  stack.emplace_back(loss.node().get(), 0);
  visited.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (parent->requires_grad && !visited.count(parent)) {
        visited.insert(parent);
        stack.emplace_back(parent, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  ensure_grad(*loss.node())[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backward && !node->grad.empty()) node->backward(*node);
  }
}

}  // namespace patrol::ad
