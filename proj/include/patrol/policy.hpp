#pragma once

#include <string>

#include "patrol/environment.hpp"
#include "patrol/nn.hpp"

namespace patrol {

// Network dimensions; dense input widths are computed from the actual map
// size rather than hard-coded.
struct NetConfig {
  int rows = 12;
  int cols = 12;
  int max_agents = 5;
  int conv1_out = 4;
  int conv2_out = 8;
  int kernel = 3;
  std::vector<int> hidden = {512, 341, 227};

  int conv_rows() const { return rows - 2 * (kernel - 1); }
  int conv_cols() const { return cols - 2 * (kernel - 1); }
  int conv_flat() const { return conv2_out * conv_rows() * conv_cols(); }
  int actor_extras() const { return 7; }  // loc (2) + battery (1) + mask (4)
  int critic_extras() const { return 3 * max_agents; }
};

// Conv stack, then dense stack over [flattened conv output ++ extras].
struct TwoStageNet {
  std::vector<ad::Layer> conv;
  std::vector<ad::Layer> dense;

  ad::Tensor forward(const ad::Tensor& grid, const ad::Tensor& extras) const;
  std::vector<ad::Tensor> parameters() const;
};

TwoStageNet make_actor_net(const NetConfig& cfg, Rng& rng);
TwoStageNet make_critic_net(const NetConfig& cfg, Rng& rng);

// Actor parameters are shared by every agent (homogeneous architecture);
// the individual-learner baseline instead keeps one actor per agent.
struct PolicySet {
  NetConfig net;
  bool homogeneous = true;
  std::vector<TwoStageNet> actors;
  TwoStageNet critic;

  static PolicySet init(const NetConfig& cfg, uint64_t seed, int n_actors = 1);

  int actor_index(int agent_id) const {
    return homogeneous ? 0 : agent_id % static_cast<int>(actors.size());
  }
  const TwoStageNet& actor_for(int agent_id) const { return actors[actor_index(agent_id)]; }

  void save(const std::string& path) const;
  static PolicySet load(const std::string& path);
};

// 2-channel grid tensor (map codes, idleness) plus the appended extras.
std::pair<ad::Tensor, ad::Tensor> encode_actor(const ActorObservation& obs);
std::pair<ad::Tensor, ad::Tensor> encode_critic(const CriticObservation& obs);

// Masked action distribution; invalid actions have probability exactly 0.
ad::Tensor actor_forward(const TwoStageNet& net, const ActorObservation& obs);
ad::Tensor critic_forward(const TwoStageNet& net, const CriticObservation& obs);

// Categorical draw; returns the action and its probability under the
// distribution (stored in the trajectory for the update ratio).
std::pair<Action, double> sample_action(const std::vector<double>& probs, Rng& rng);

}  // namespace patrol
