#include "patrol/mappo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace patrol::mappo {

using ad::Tensor;

double lr_schedule(const TrainConfig& cfg, int round) {
  int decreases = cfg.lr_every > 0 ? round / cfg.lr_every : 0;
  return std::max(cfg.lr_start - cfg.lr_step * decreases, 0.0);
}

double entropy_schedule(const TrainConfig& cfg, int round) {
  int decreases = cfg.entropy_every > 0 ? round / cfg.entropy_every : 0;
  return std::max(cfg.entropy_start - cfg.entropy_step * decreases, cfg.entropy_min);
}

EpisodeResult collect_episode(const PolicySet& policy,
                              std::shared_ptr<const GridMap> map, const EnvConfig& env_cfg,
                              const rewards::RewardParams& reward_params, int n_agents,
                              int horizon, uint64_t seed) {
  ad::NoGradGuard no_grad;
  Env env = Env::reset(map, env_cfg, n_agents, derive_seed(seed, 0));
  Rng action_rng(derive_seed(seed, 1));

  EpisodeResult result;
  result.n_agents = n_agents;
  result.trajectories.resize(n_agents);
  result.cumulative_rewards.assign(n_agents, 0.0);
  for (int i = 0; i < n_agents; ++i) result.trajectories[i].agent_id = i;

  for (int step = 0; step < horizon; ++step) {
    std::vector<int> acting = env.patrolling_ids();
    if (acting.empty()) {
      env.step({});
      result.length = step + 1;
      continue;
    }
    CriticObservation critic_obs = env.observe_critic(reward_params.c_norm);
    double value = critic_forward(policy.critic, critic_obs).item();

    std::map<int, Action> actions;
    std::vector<std::pair<ActorObservation, std::pair<Action, double>>> staged(n_agents);
    for (int id : acting) {
      ActorObservation obs = env.observe_actor(id, reward_params.c_norm);
      Tensor dist = actor_forward(policy.actor_for(id), obs);
      auto [action, prob] = sample_action(dist.data(), action_rng);
      actions[id] = action;
      staged[id] = {std::move(obs), {action, prob}};
    }

    StepOutcome outcome = env.step(actions);

    for (const MoveRecord& move : outcome.moves) {
      const AgentState* agent = env.find_agent(move.id);
      rewards::AgentStepContext ctx;
      ctx.prev = move.from;
      ctx.next = move.to;
      ctx.pre_reset_next = move.pre_reset_idleness;
      ctx.next_co_occupied = move.co_occupied;
      ctx.ran_out = std::count(outcome.battery_failures.begin(),
                               outcome.battery_failures.end(), move.id) > 0;
      ctx.recharged = std::count(outcome.intentional_recharges.begin(),
                                 outcome.intentional_recharges.end(), move.id) > 0;
      ctx.battery = agent->battery;
      rewards::RewardBreakdown breakdown =
          rewards::total_reward(env.idleness(), env.map(), ctx, reward_params);

      TransitionRecord record;
      record.critic_obs = critic_obs;
      record.actor_obs = staged[move.id].first;
      record.action = staged[move.id].second.first;
      record.prob = staged[move.id].second.second;
      record.reward = breakdown.total;
      record.value = value;
      record.step = step;
      result.trajectories[move.id].records.push_back(std::move(record));
      result.cumulative_rewards[move.id] += breakdown.total;
    }
    for (int id : outcome.intentional_recharges)
      result.recharge_batteries.push_back(env.find_agent(id)->battery);

    result.length = step + 1;
    if (!outcome.battery_failures.empty()) {
      result.battery_failure = true;
      break;
    }
  }
  return result;
}

std::vector<EpisodeResult> collect_round(const PolicySet& policy,
                                         std::shared_ptr<const GridMap> map,
                                         const EnvConfig& env_cfg,
                                         const rewards::RewardParams& reward_params,
                                         const TrainConfig& cfg, uint64_t master_seed,
                                         int round) {
  std::vector<EpisodeResult> episodes;
  episodes.reserve(cfg.episode_agents.size());
  for (size_t e = 0; e < cfg.episode_agents.size(); ++e) {
    uint64_t seed = derive_seed(master_seed, static_cast<uint64_t>(round), e);
    episodes.push_back(collect_episode(policy, map, env_cfg, reward_params,
                                       cfg.episode_agents[e], cfg.horizon, seed));
  }
  return episodes;
}

void reconstruct_swap_gaps(std::vector<Trajectory>& trajectories, int episode_len) {
  // index own records by step per trajectory
  std::vector<std::vector<const TransitionRecord*>> by_step(trajectories.size());
  for (size_t i = 0; i < trajectories.size(); ++i) {
    by_step[i].assign(episode_len, nullptr);
    for (const TransitionRecord& r : trajectories[i].records)
      if (r.step < episode_len) by_step[i][r.step] = &r;
  }
  std::vector<size_t> order(trajectories.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return trajectories[a].agent_id < trajectories[b].agent_id;
  });

  std::vector<std::vector<TransitionRecord>> fills(trajectories.size());
  for (int step = 0; step < episode_len; ++step) {
    const TransitionRecord* donor = nullptr;
    for (size_t idx : order) {
      if (by_step[idx][step]) {
        donor = by_step[idx][step];
        break;
      }
    }
    if (!donor) continue;  // no agent was active; nothing to share
    for (size_t i = 0; i < trajectories.size(); ++i) {
      if (by_step[i][step]) continue;
      TransitionRecord copy = *donor;
      copy.swap_filled = true;
      fills[i].push_back(std::move(copy));
    }
  }
  for (size_t i = 0; i < trajectories.size(); ++i) {
    if (fills[i].empty()) continue;
    auto& records = trajectories[i].records;
    records.insert(records.end(), fills[i].begin(), fills[i].end());
    std::sort(records.begin(), records.end(),
              [](const TransitionRecord& a, const TransitionRecord& b) { return a.step < b.step; });
  }
}

std::vector<double> compute_gae(const std::vector<double>& rewards,
                                const std::vector<double>& values, double bootstrap,
                                double gamma, double lambda) {
  if (rewards.size() != values.size())
    throw LengthMismatch("rewards/values length mismatch");
  std::vector<double> advantages(rewards.size());
  double carry = 0.0;
  for (int t = static_cast<int>(rewards.size()) - 1; t >= 0; --t) {
    double next_value = t + 1 < static_cast<int>(values.size()) ? values[t + 1] : bootstrap;
    double delta = rewards[t] + gamma * next_value - values[t];
    carry = delta + gamma * lambda * carry;
    advantages[t] = carry;
  }
  return advantages;
}

std::vector<double> discounted_to_go(const std::vector<std::pair<int, double>>& series,
                                     int len, double gamma) {
  std::vector<double> out(len, 0.0);
  double carry = 0.0;
  int carry_step = len;  // step index the carry refers to
  int i = static_cast<int>(series.size()) - 1;
  for (int t = len - 1; t >= 0; --t) {
    carry *= carry_step > t ? std::pow(gamma, carry_step - t) : 1.0;
    carry_step = t;
    if (i >= 0 && series[i].first == t) {
      carry += series[i].second;
      --i;
    }
    out[t] = carry;
  }
  return out;
}

std::vector<double> compute_v_targ_prime(const std::vector<Trajectory>& trajectories,
                                         int len, double gamma) {
  std::vector<double> target(len, 0.0);
  if (trajectories.empty()) return target;
  for (const Trajectory& traj : trajectories) {
    std::vector<std::pair<int, double>> series;
    series.reserve(traj.records.size());
    for (const TransitionRecord& r : traj.records) series.emplace_back(r.step, r.reward);
    std::vector<double> togo = discounted_to_go(series, len, gamma);
    for (int t = 0; t < len; ++t) target[t] += togo[t];
  }
  for (double& v : target) v /= static_cast<double>(trajectories.size());
  return target;
}

ad::Tensor clipped_surrogate(const ad::Tensor& ratio, double advantage, double clip) {
  return ad::min2(ad::scale(ratio, advantage),
                  ad::scale(ad::clamp(ratio, 1.0 - clip, 1.0 + clip), advantage));
}

namespace {

struct ActorSample {
  const TransitionRecord* record = nullptr;
  double advantage = 0.0;
  int policy_index = 0;
};

struct CriticSample {
  const CriticObservation* obs = nullptr;
  double target = 0.0;
};

// masked-distribution entropy over valid entries only
Tensor masked_entropy(const Tensor& probs, const std::array<int, 4>& mask) {
  std::vector<Tensor> terms;
  for (int i = 0; i < 4; ++i) {
    if (!mask[i]) continue;
    Tensor p = ad::select(probs, i);
    terms.push_back(ad::mul(p, ad::log_op(p)));
  }
  return ad::scale(ad::sum_list(terms), -1.0);
}

std::vector<std::vector<int>> make_batches(int n, int batches, Rng& rng) {
  std::vector<int> indices(n);
  std::iota(indices.begin(), indices.end(), 0);
  // Fisher-Yates with the project rng for reproducibility
  for (int i = n - 1; i > 0; --i) {
    int j = rng.uniform_int(0, i);
    std::swap(indices[i], indices[j]);
  }
  int chunks = std::min(batches, n);
  std::vector<std::vector<int>> out(chunks);
  for (int i = 0; i < n; ++i) out[i % chunks].push_back(indices[i]);
  return out;
}

}  // namespace

Trainer::Trainer(std::shared_ptr<const GridMap> map, EnvConfig env_cfg,
                 rewards::RewardParams reward_params, TrainConfig cfg, uint64_t seed)
    : map_(std::move(map)),
      env_cfg_(env_cfg),
      reward_params_(reward_params),
      cfg_(cfg),
      seed_(seed),
      policy_(PolicySet::init(
          NetConfig{map_->rows(), map_->cols(), env_cfg.max_agents, 4, 8, 3, {512, 341, 227}},
          seed, cfg.individual ? env_cfg.max_agents : 1)),
      critic_opt_(policy_.critic.parameters(), cfg.lr_start) {
  for (TwoStageNet& actor : policy_.actors)
    actor_opts_.emplace_back(actor.parameters(), cfg_.lr_start);
}

LossReport Trainer::update(std::vector<EpisodeResult>& episodes, int round) {
  double entropy_coef = entropy_schedule(cfg_, round);
  double lr = lr_schedule(cfg_, round);
  for (ad::Adam& opt : actor_opts_) opt.set_lr(lr);
  critic_opt_.set_lr(lr);

  std::vector<ActorSample> actor_samples;
  std::vector<CriticSample> critic_samples;
  for (EpisodeResult& episode : episodes) {
    reconstruct_swap_gaps(episode.trajectories, episode.length);
    std::vector<double> vtarg =
        compute_v_targ_prime(episode.trajectories, episode.length, cfg_.gamma);

    std::vector<const TransitionRecord*> step_record(episode.length, nullptr);
    for (Trajectory& traj : episode.trajectories) {
      std::vector<double> rewards_seq, values_seq;
      rewards_seq.reserve(traj.records.size());
      for (const TransitionRecord& r : traj.records) {
        rewards_seq.push_back(r.reward);
        values_seq.push_back(r.value);
      }
      std::vector<double> adv = compute_gae(rewards_seq, values_seq, 0.0, cfg_.gamma, cfg_.lambda);
      for (size_t i = 0; i < traj.records.size(); ++i) {
        const TransitionRecord& r = traj.records[i];
        if (!r.swap_filled) {
          actor_samples.push_back({&r, adv[i], policy_.actor_index(traj.agent_id)});
          if (!step_record[r.step]) step_record[r.step] = &r;
        }
      }
    }
    for (int t = 0; t < episode.length; ++t)
      if (step_record[t]) critic_samples.push_back({&step_record[t]->critic_obs, vtarg[t]});
  }
  if (actor_samples.empty()) throw EmptyBatch("no actor samples in round");

  if (cfg_.adv_norm) {
    double mean = 0.0;
    for (const ActorSample& s : actor_samples) mean += s.advantage;
    mean /= actor_samples.size();
    double var = 0.0;
    for (const ActorSample& s : actor_samples) var += (s.advantage - mean) * (s.advantage - mean);
    double sd = std::sqrt(var / actor_samples.size());
    for (ActorSample& s : actor_samples) s.advantage = (s.advantage - mean) / (sd + 1e-8);
  }

  Rng shuffle_rng(derive_seed(seed_, 0xba7c, static_cast<uint64_t>(round)));
  LossReport report;
  report.actor_samples = static_cast<int>(actor_samples.size());
  report.critic_samples = static_cast<int>(critic_samples.size());
  int actor_batches_done = 0, critic_batches_done = 0;

  for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
    auto batches = make_batches(static_cast<int>(actor_samples.size()), cfg_.batches, shuffle_rng);
    for (const std::vector<int>& batch : batches) {
      // group by owning policy; homogeneous runs put everything in actor 0
      std::vector<std::vector<int>> by_policy(policy_.actors.size());
      for (int idx : batch) by_policy[actor_samples[idx].policy_index].push_back(idx);
      for (size_t pi = 0; pi < by_policy.size(); ++pi) {
        if (by_policy[pi].empty()) continue;
        std::vector<Tensor> objectives, entropies;
        for (int idx : by_policy[pi]) {
          const ActorSample& s = actor_samples[idx];
          Tensor probs = actor_forward(policy_.actors[pi], s.record->actor_obs);
          Tensor chosen = ad::select(probs, static_cast<int>(s.record->action));
          Tensor ratio = ad::scale(chosen, 1.0 / s.record->prob);
          objectives.push_back(clipped_surrogate(ratio, s.advantage, cfg_.clip));
          entropies.push_back(masked_entropy(probs, s.record->actor_obs.mask));
        }
        double inv = 1.0 / by_policy[pi].size();
        Tensor objective = ad::scale(ad::sum_list(objectives), inv);
        Tensor entropy = ad::scale(ad::sum_list(entropies), inv);
        Tensor loss = ad::sub(ad::scale(objective, -1.0), ad::scale(entropy, entropy_coef));
        actor_opts_[pi].zero_grad();
        ad::backward(loss);
        actor_opts_[pi].step();
        report.actor_loss += loss.item();
        report.entropy += entropy.item();
        ++actor_batches_done;
      }
    }
    auto cbatches =
        make_batches(static_cast<int>(critic_samples.size()), cfg_.batches, shuffle_rng);
    for (const std::vector<int>& batch : cbatches) {
      if (batch.empty()) continue;
      std::vector<Tensor> losses;
      for (int idx : batch) {
        const CriticSample& s = critic_samples[idx];
        Tensor v = critic_forward(policy_.critic, *s.obs);
        Tensor err = ad::add_const(v, -s.target);
        losses.push_back(ad::mul(err, err));
      }
      Tensor loss = ad::scale(ad::sum_list(losses), 1.0 / batch.size());
      critic_opt_.zero_grad();
      ad::backward(loss);
      critic_opt_.step();
      report.critic_loss += loss.item();
      ++critic_batches_done;
    }
  }
  if (actor_batches_done > 0) {
    report.actor_loss /= actor_batches_done;
    report.entropy /= actor_batches_done;
  }
  if (critic_batches_done > 0) report.critic_loss /= critic_batches_done;
  return report;
}

std::vector<RoundLog> Trainer::run(int rounds,
                                   const std::function<void(int, const PolicySet&)>& on_checkpoint) {
  std::vector<RoundLog> logs;
  for (int round = 0; round < rounds; ++round) {
    std::vector<EpisodeResult> episodes =
        collect_round(policy_, map_, env_cfg_, reward_params_, cfg_, seed_, round);
    LossReport report = update(episodes, round);
    for (size_t e = 0; e < episodes.size(); ++e) {
      const EpisodeResult& ep = episodes[e];
      RoundLog log;
      log.round = round;
      log.episode = static_cast<int>(e);
      log.n_agents = ep.n_agents;
      log.length = ep.length;
      log.cumulative_rewards = ep.cumulative_rewards;
      log.recharge_batteries = ep.recharge_batteries;
      if (!ep.recharge_batteries.empty()) {
        log.mean_recharge_battery =
            std::accumulate(ep.recharge_batteries.begin(), ep.recharge_batteries.end(), 0.0) /
            ep.recharge_batteries.size();
      }
      log.actor_loss = report.actor_loss;
      log.critic_loss = report.critic_loss;
      log.entropy = report.entropy;
      logs.push_back(std::move(log));
    }
    if (on_checkpoint && cfg_.checkpoint_every > 0 &&
        ((round + 1) % cfg_.checkpoint_every == 0 || round + 1 == rounds)) {
      on_checkpoint(round, policy_);
    }
  }
  return logs;
}

}  // namespace patrol::mappo
