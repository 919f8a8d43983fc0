#include "patrol/policy.hpp"

#include <cmath>

#include "patrol/checkpoint.hpp"

namespace patrol {

using ad::Tensor;

Tensor TwoStageNet::forward(const Tensor& grid, const Tensor& extras) const {
  Tensor x = ad::forward(conv, grid);
  x = ad::concat(ad::flatten(x), extras);
  return ad::forward(dense, x);
}

std::vector<Tensor> TwoStageNet::parameters() const {
  std::vector<Tensor> params = ad::parameters(conv);
  std::vector<Tensor> rest = ad::parameters(dense);
  params.insert(params.end(), rest.begin(), rest.end());
  return params;
}

namespace {

std::vector<ad::LayerSpec> conv_specs(const NetConfig& cfg) {
  return {
      ad::Conv2dSpec{2, cfg.conv1_out, cfg.kernel, cfg.kernel, 1, 0},
      ad::TanhSpec{},
      ad::Conv2dSpec{cfg.conv1_out, cfg.conv2_out, cfg.kernel, cfg.kernel, 1, 0},
      ad::TanhSpec{},
  };
}

std::vector<ad::LayerSpec> dense_specs(const NetConfig& cfg, int extras, int head) {
  std::vector<ad::LayerSpec> specs;
  int width = cfg.conv_flat() + extras;
  for (int h : cfg.hidden) {
    specs.push_back(ad::DenseSpec{width, h});
    specs.push_back(ad::TanhSpec{});
    width = h;
  }
  specs.push_back(ad::DenseSpec{width, head});
  return specs;
}

// hidden layers keep the sqrt(2) gain; output heads are rescaled so a fresh
// actor starts near-uniform and a fresh critic near zero
void rescale_head(std::vector<ad::Layer>& dense, double gain) {
  double factor = gain / std::sqrt(2.0);
  for (double& v : dense.back().weight.data()) v *= factor;
}

}  // namespace

TwoStageNet make_actor_net(const NetConfig& cfg, Rng& rng) {
  TwoStageNet net;
  net.conv = ad::make_layers(conv_specs(cfg), rng);
  net.dense = ad::make_layers(dense_specs(cfg, cfg.actor_extras(), 4), rng);
  rescale_head(net.dense, 0.01);
  return net;
}

TwoStageNet make_critic_net(const NetConfig& cfg, Rng& rng) {
  TwoStageNet net;
  net.conv = ad::make_layers(conv_specs(cfg), rng);
  net.dense = ad::make_layers(dense_specs(cfg, cfg.critic_extras(), 1), rng);
  rescale_head(net.dense, 1.0);
  return net;
}

PolicySet PolicySet::init(const NetConfig& cfg, uint64_t seed, int n_actors) {
  PolicySet policy;
  policy.net = cfg;
  policy.homogeneous = n_actors <= 1;
  Rng rng(derive_seed(seed, 0x9011));
  for (int i = 0; i < std::max(1, n_actors); ++i)
    policy.actors.push_back(make_actor_net(cfg, rng));
  policy.critic = make_critic_net(cfg, rng);
  return policy;
}

namespace {

void collect_named(const std::string& prefix, const TwoStageNet& net,
                   std::vector<std::pair<std::string, Tensor>>& out) {
  int i = 0;
  for (const ad::Layer& layer : net.conv) {
    if (!layer.weight.defined()) continue;
    out.emplace_back(prefix + ".conv" + std::to_string(i) + ".w", layer.weight);
    out.emplace_back(prefix + ".conv" + std::to_string(i) + ".b", layer.bias);
    ++i;
  }
  i = 0;
  for (const ad::Layer& layer : net.dense) {
    if (!layer.weight.defined()) continue;
    out.emplace_back(prefix + ".dense" + std::to_string(i) + ".w", layer.weight);
    out.emplace_back(prefix + ".dense" + std::to_string(i) + ".b", layer.bias);
    ++i;
  }
}

void restore_named(const std::string& prefix, TwoStageNet& net,
                   const std::vector<std::pair<std::string, Tensor>>& tensors) {
  auto lookup = [&](const std::string& name) -> const Tensor& {
    for (const auto& [n, t] : tensors)
      if (n == name) return t;
    throw ad::CheckpointError("checkpoint missing tensor: " + name);
  };
  int i = 0;
  for (ad::Layer& layer : net.conv) {
    if (!layer.weight.defined()) continue;
    std::string base = prefix + ".conv" + std::to_string(i);
    layer.weight.data() = lookup(base + ".w").data();
    layer.bias.data() = lookup(base + ".b").data();
    ++i;
  }
  i = 0;
  for (ad::Layer& layer : net.dense) {
    if (!layer.weight.defined()) continue;
    std::string base = prefix + ".dense" + std::to_string(i);
    layer.weight.data() = lookup(base + ".w").data();
    layer.bias.data() = lookup(base + ".b").data();
    ++i;
  }
}

}  // namespace

void PolicySet::save(const std::string& path) const {
  std::vector<std::pair<std::string, Tensor>> tensors;
  Tensor meta({6},
              std::vector<double>{static_cast<double>(net.rows), static_cast<double>(net.cols),
                                  static_cast<double>(net.max_agents),
                                  static_cast<double>(actors.size()),
                                  homogeneous ? 1.0 : 0.0, 1.0});
  tensors.emplace_back("meta", meta);
  for (size_t i = 0; i < actors.size(); ++i)
    collect_named("actor" + std::to_string(i), actors[i], tensors);
  collect_named("critic", critic, tensors);
  ad::save_checkpoint(path, tensors);
}

PolicySet PolicySet::load(const std::string& path) {
  auto tensors = ad::load_checkpoint(path);
  const Tensor* meta = nullptr;
  for (const auto& [name, t] : tensors)
    if (name == "meta") meta = &t;
  if (!meta || meta->size() != 6) throw ad::CheckpointError("checkpoint has no meta record");
  NetConfig cfg;
  cfg.rows = static_cast<int>(meta->data()[0]);
  cfg.cols = static_cast<int>(meta->data()[1]);
  cfg.max_agents = static_cast<int>(meta->data()[2]);
  int n_actors = static_cast<int>(meta->data()[3]);
  PolicySet policy = init(cfg, 0, n_actors);
  policy.homogeneous = meta->data()[4] != 0.0;
  for (size_t i = 0; i < policy.actors.size(); ++i)
    restore_named("actor" + std::to_string(i), policy.actors[i], tensors);
  restore_named("critic", policy.critic, tensors);
  return policy;
}

std::pair<Tensor, Tensor> encode_actor(const ActorObservation& obs) {
  std::vector<double> grid;
  grid.reserve(2 * obs.map_channel.size());
  grid.insert(grid.end(), obs.map_channel.begin(), obs.map_channel.end());
  grid.insert(grid.end(), obs.idleness_channel.begin(), obs.idleness_channel.end());
  Tensor grid_t({2, obs.rows, obs.cols}, std::move(grid));
  std::vector<double> extras{obs.loc_row, obs.loc_col, obs.battery};
  for (int m : obs.mask) extras.push_back(m);
  return {grid_t, Tensor({7}, std::move(extras))};
}

std::pair<Tensor, Tensor> encode_critic(const CriticObservation& obs) {
  std::vector<double> grid;
  grid.reserve(2 * obs.map_channel.size());
  grid.insert(grid.end(), obs.map_channel.begin(), obs.map_channel.end());
  grid.insert(grid.end(), obs.idleness_channel.begin(), obs.idleness_channel.end());
  Tensor grid_t({2, obs.rows, obs.cols}, std::move(grid));
  std::vector<double> extras = obs.batteries;
  extras.insert(extras.end(), obs.locations.begin(), obs.locations.end());
  int width = static_cast<int>(extras.size());
  return {grid_t, Tensor({width}, std::move(extras))};
}

Tensor actor_forward(const TwoStageNet& net, const ActorObservation& obs) {
  auto [grid, extras] = encode_actor(obs);
  Tensor logits = net.forward(grid, extras);
  return ad::masked_softmax(logits, obs.mask);
}

Tensor critic_forward(const TwoStageNet& net, const CriticObservation& obs) {
  auto [grid, extras] = encode_critic(obs);
  return net.forward(grid, extras);
}

std::pair<Action, double> sample_action(const std::vector<double>& probs, Rng& rng) {
  double draw = rng.next_double();
  double cum = 0.0;
  int last_valid = 0;
  for (int i = 0; i < static_cast<int>(probs.size()); ++i) {
    if (probs[i] <= 0.0) continue;
    last_valid = i;
    cum += probs[i];
    if (draw < cum) return {static_cast<Action>(i), probs[i]};
  }
  // rounding left draw >= cum; fall back to the last entry with mass
  return {static_cast<Action>(last_valid), probs[last_valid]};
}

}  // namespace patrol
