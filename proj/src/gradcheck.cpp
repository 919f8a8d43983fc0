#include "patrol/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>

#include "patrol/nn.hpp"
#include "patrol/policy.hpp"
#include "patrol/rng.hpp"

namespace patrol::ad {

GradCheckResult finite_diff_check(const std::string& name,
                                  const std::function<Tensor()>& loss_fn,
                                  std::vector<Tensor> params, double h, int sample,
                                  uint64_t seed) {
  GradCheckResult result;
  result.name = name;
  for (Tensor& p : params) p.zero_grad();
  Tensor loss = loss_fn();
  backward(loss);
  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (Tensor& p : params) analytic.push_back(p.grad());

  Rng pick(derive_seed(seed, 0x6fd1));
  NoGradGuard no_grad;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    Tensor& p = params[pi];
    std::vector<int> indices;
    if (sample > 0 && p.size() > sample) {
      for (int k = 0; k < sample; ++k) indices.push_back(pick.uniform_int(0, p.size() - 1));
    } else {
      indices.resize(p.size());
      for (int k = 0; k < p.size(); ++k) indices[k] = k;
    }
    for (int idx : indices) {
      double orig = p.data()[idx];
      p.data()[idx] = orig + h;
      double up = loss_fn().item();
      p.data()[idx] = orig - h;
      double down = loss_fn().item();
      p.data()[idx] = orig;
      double numeric = (up - down) / (2.0 * h);
      double a = analytic[pi][idx];
      double rel = std::abs(a - numeric) / std::max({1e-6, std::abs(a), std::abs(numeric)});
      result.max_rel_error = std::max(result.max_rel_error, rel);
      ++result.checked;
    }
  }
  return result;
}

namespace {

Tensor random_tensor(std::vector<int> shape, Rng& rng, bool requires_grad = true) {
  Tensor t(std::move(shape), 0.0, requires_grad);
  for (double& v : t.data()) v = rng.normal() * 0.5;
  return t;
}

GradCheckResult merge(GradCheckResult into, const GradCheckResult& other) {
  into.max_rel_error = std::max(into.max_rel_error, other.max_rel_error);
  into.checked += other.checked;
  return into;
}

}  // namespace

std::vector<GradCheckResult> run_gradcheck_suite(std::ostream& out, int seeds) {
  std::vector<GradCheckResult> results;
  auto run = [&](const std::string& name,
                 const std::function<GradCheckResult(uint64_t)>& make) {
    GradCheckResult total;
    total.name = name;
    for (int s = 0; s < seeds; ++s) total = merge(total, make(s));
    total.name = name;
    out << std::left << std::setw(24) << name << " max rel err " << std::scientific
        << std::setprecision(3) << total.max_rel_error << "  (" << total.checked
        << " coords)  " << (total.passed() ? "ok" : "FAIL") << "\n";
    results.push_back(total);
  };

  run("dense", [](uint64_t seed) {
    Rng rng(derive_seed(seed, 1));
    Tensor x = random_tensor({6}, rng);
    Tensor w = random_tensor({4, 6}, rng);
    Tensor b = random_tensor({4}, rng);
    auto loss = [&] { return mean(mul(dense(x, w, b), dense(x, w, b))); };
    return finite_diff_check("dense", loss, {x, w, b}, 1e-4, 0, seed);
  });

  run("conv2d", [](uint64_t seed) {
    Rng rng(derive_seed(seed, 2));
    Tensor x = random_tensor({2, 6, 6}, rng);
    Tensor w = random_tensor({3, 2, 3, 3}, rng);
    Tensor b = random_tensor({3}, rng);
    auto loss = [&] {
      Tensor y = conv2d(x, w, b, 1, 0);
      return mean(mul(y, y));
    };
    return finite_diff_check("conv2d", loss, {x, w, b}, 1e-4, 0, seed);
  });

  run("conv2d_stride_pad", [](uint64_t seed) {
    Rng rng(derive_seed(seed, 3));
    Tensor x = random_tensor({1, 7, 7}, rng);
    Tensor w = random_tensor({2, 1, 3, 3}, rng);
    Tensor b = random_tensor({2}, rng);
    auto loss = [&] {
      Tensor y = conv2d(x, w, b, 2, 1);
      return mean(mul(y, y));
    };
    return finite_diff_check("conv2d_stride_pad", loss, {x, w, b}, 1e-4, 0, seed);
  });

  run("tanh", [](uint64_t seed) {
    Rng rng(derive_seed(seed, 4));
    Tensor x = random_tensor({8}, rng);
    auto loss = [&] { return mean(mul(tanh_op(x), tanh_op(x))); };
    return finite_diff_check("tanh", loss, {x}, 1e-4, 0, seed);
  });

  run("flatten", [](uint64_t seed) {
    Rng rng(derive_seed(seed, 5));
    Tensor x = random_tensor({2, 3, 3}, rng);
    Tensor w = random_tensor({2, 18}, rng);
    Tensor b = random_tensor({2}, rng);
    auto loss = [&] { return sum(tanh_op(dense(flatten(x), w, b))); };
    return finite_diff_check("flatten", loss, {x, w, b}, 1e-4, 0, seed);
  });

  run("softmax", [](uint64_t seed) {
    Rng rng(derive_seed(seed, 6));
    Tensor x = random_tensor({5}, rng);
    Tensor w = random_tensor({5}, rng);
    auto loss = [&] { return sum(mul(softmax(x), w)); };
    return finite_diff_check("softmax", loss, {x, w}, 1e-4, 0, seed);
  });

  run("masked_softmax", [](uint64_t seed) {
    Rng rng(derive_seed(seed, 7));
    Tensor x = random_tensor({4}, rng);
    std::vector<double> mask{1, 1, 0, 1};
    auto loss = [&] {
      Tensor p = masked_softmax(x, mask);
      return sum_list({select(p, 0), scale(select(p, 3), 0.5)});
    };
    return finite_diff_check("masked_softmax", loss, {x}, 1e-4, 0, seed);
  });

  // reference stacks at reduced spatial size, sampled coordinates
  NetConfig cfg;
  cfg.rows = 6;
  cfg.cols = 6;
  cfg.max_agents = 5;

  run("actor_stack", [cfg](uint64_t seed) {
    Rng rng(derive_seed(seed, 8));
    TwoStageNet net = make_actor_net(cfg, rng);
    Tensor grid = random_tensor({2, cfg.rows, cfg.cols}, rng, false);
    Tensor extras = random_tensor({cfg.actor_extras()}, rng, false);
    std::vector<double> mask{1, 0, 1, 1};
    auto loss = [&] {
      Tensor p = masked_renormalize(softmax(net.forward(grid, extras)), mask);
      return sum_list({select(p, 0), scale(select(p, 2), -0.7), scale(select(p, 3), 0.3)});
    };
    return finite_diff_check("actor_stack", loss, net.parameters(), 1e-4, 6, seed);
  });

  run("critic_stack", [cfg](uint64_t seed) {
    Rng rng(derive_seed(seed, 9));
    TwoStageNet net = make_critic_net(cfg, rng);
    Tensor grid = random_tensor({2, cfg.rows, cfg.cols}, rng, false);
    Tensor extras = random_tensor({cfg.critic_extras()}, rng, false);
    auto loss = [&] { return net.forward(grid, extras); };
    return finite_diff_check("critic_stack", loss, net.parameters(), 1e-4, 6, seed);
  });

  return results;
}

}  // namespace patrol::ad
