#include "patrol/harness.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "patrol/gradcheck.hpp"

namespace patrol::harness {

namespace fs = std::filesystem;

std::map<int, Action> MarlProvider::act(const Env& env) {
  ad::NoGradGuard no_grad;
  std::map<int, Action> actions;
  for (int id : env.patrolling_ids()) {
    ActorObservation obs = env.observe_actor(id, c_norm_);
    ad::Tensor dist = actor_forward(policy_.actor_for(id), obs);
    actions[id] = sample_action(dist.data(), rng_).first;
  }
  return actions;
}

std::map<int, Action> CrProvider::act(const Env& env) {
  std::map<int, Action> actions;
  const IdlenessState& idle = env.idleness();
  for (int id : env.patrolling_ids()) {
    const AgentState* agent = env.find_agent(id);
    IdlenessState shared = idle;
    for (const AgentState& other : env.agents()) {
      if (other.id == id || other.status == AgentStatus::Failed) continue;
      if (env.map().cell(other.loc) == CellKind::Vertex) shared.at(other.loc) = 0.0;
    }
    actions[id] = baselines::cr_action(env.map(), shared, agent->loc, agent->battery,
                                       states_[id], params_, rng_);
  }
  return actions;
}

std::unique_ptr<ActionProvider> make_provider(const ExperimentConfig& cfg,
                                              const PolicySet* policy, uint64_t seed) {
  if (cfg.strategy == "cr") {
    baselines::CrParams params;
    params.b_l = cfg.env.b_l;
    params.b_max = cfg.env.b_max;
    params.margin = cfg.eval.cr_margin;
    return std::make_unique<CrProvider>(params, seed);
  }
  if (!policy) throw ConfigError("strategy " + cfg.strategy + " needs a checkpoint");
  return std::make_unique<MarlProvider>(*policy, cfg.reward.c_norm, seed);
}

metrics::EpisodeTrace run_eval_episode(std::shared_ptr<const GridMap> map,
                                       const EnvConfig& env_cfg, ActionProvider& provider,
                                       int n_agents, int horizon, uint64_t seed) {
  Env env = Env::reset(std::move(map), env_cfg, n_agents, seed);
  metrics::EpisodeTrace trace;
  for (int step = 0; step < horizon; ++step) {
    StepOutcome outcome = env.step(provider.act(env));
    trace.record_step(env, outcome);
  }
  return trace;
}

uint64_t fnv1a64(const std::string& bytes) {
  uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::string file_checksum(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot hash missing file: " + path);
  std::ostringstream buffer;
  buffer << file.rdbuf();
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(fnv1a64(buffer.str())));
  return std::string("fnv1a:") + hex;
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::shared_ptr<const GridMap> load_map_shared(const ExperimentConfig& cfg) {
  if (cfg.map_path.empty()) throw ConfigError("run.map is not set");
  return std::make_shared<const GridMap>(GridMap::load_file(cfg.map_path));
}

EnvConfig eval_env_config(const ExperimentConfig& cfg) {
  EnvConfig env = cfg.env;
  int peak = env.max_agents;
  for (int n : cfg.eval.agent_counts) peak = std::max(peak, n);
  env.max_agents = std::max(peak, 8);  // evaluation runs up to 8 agents
  return env;
}

struct ScriptedFault {
  int initial = 0;
  std::vector<metrics::FaultEvent> events;
};

ScriptedFault parse_fault_events(const std::string& text) {
  ScriptedFault out;
  std::stringstream ss(text);
  std::string item;
  std::map<int, metrics::FaultEvent> by_day;
  while (std::getline(ss, item, ',')) {
    size_t a = item.find(':');
    size_t b = item.rfind(':');
    if (a == std::string::npos || b == a)
      throw ConfigError("bad fault event (want day:fail|add:n): " + item);
    int day = std::stoi(item.substr(0, a));
    std::string kind = item.substr(a + 1, b - a - 1);
    int count = std::stoi(item.substr(b + 1));
    // trim spaces around kind
    while (!kind.empty() && kind.front() == ' ') kind.erase(kind.begin());
    while (!kind.empty() && kind.back() == ' ') kind.pop_back();
    auto& event = by_day[day];
    event.day = day;
    if (kind == "fail")
      event.fail_count += count;
    else if (kind == "add")
      event.add_count += count;
    else
      throw ConfigError("bad fault event kind: " + kind);
  }
  for (auto& [day, event] : by_day) out.events.push_back(event);
  return out;
}

PolicySet load_policy(const std::string& checkpoint) {
  if (checkpoint.empty()) throw ConfigError("missing --checkpoint");
  return PolicySet::load(checkpoint);
}

}  // namespace

void write_manifest(const ExperimentConfig& cfg, const std::string& command,
                    const std::vector<std::string>& outputs) {
  nlohmann::json manifest;
  manifest["command"] = command;
  manifest["version"] = kVersion;
  manifest["seed"] = cfg.seed;
  nlohmann::json config_json;
  for (const auto& [key, value] : config_entries(cfg)) config_json[key] = value;
  manifest["config"] = config_json;
  nlohmann::json files;
  for (const std::string& name : outputs)
    files[name] = file_checksum((fs::path(cfg.out_dir) / name).string());
  manifest["outputs"] = files;
  std::ofstream out(fs::path(cfg.out_dir) / ("manifest-" + command + ".json"));
  out << manifest.dump(2) << "\n";
}

int cmd_train(const ExperimentConfig& cfg) {
  if (cfg.strategy == "cr") throw ConfigError("cr strategy is not trainable");
  auto map = load_map_shared(cfg);
  fs::create_directories(cfg.out_dir);

  mappo::TrainConfig train_cfg = cfg.train;
  if (cfg.strategy == "individual")
    train_cfg = baselines::individual_learner_config(train_cfg);
  mappo::Trainer trainer(map, cfg.env, cfg.reward, train_cfg, cfg.seed);

  std::vector<std::string> outputs;
  auto checkpoint_name = [](int round) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "checkpoint_round_%05d.bin", round);
    return std::string(buf);
  };
  auto on_checkpoint = [&](int round, const PolicySet& policy) {
    if (policy.homogeneous) {
      std::string name = checkpoint_name(round);
      policy.save((fs::path(cfg.out_dir) / name).string());
      outputs.push_back(name);
    } else {
      // one file per individual learner, each loadable on its own
      for (size_t i = 0; i < policy.actors.size(); ++i) {
        PolicySet single;
        single.net = policy.net;
        single.homogeneous = true;
        single.actors = {policy.actors[i]};
        single.critic = policy.critic;
        std::string name = checkpoint_name(round);
        name.insert(name.size() - 4, "_policy" + std::to_string(i));
        single.save((fs::path(cfg.out_dir) / name).string());
        outputs.push_back(name);
      }
    }
  };

  std::vector<mappo::RoundLog> logs = trainer.run(train_cfg.rounds, on_checkpoint);

  std::ofstream log_file(fs::path(cfg.out_dir) / "training_log.csv");
  log_file << "round,episode,agents,length,cum_reward_mean,cum_rewards,"
              "battery_at_recharge,actor_loss,critic_loss,entropy\n";
  for (const mappo::RoundLog& log : logs) {
    double mean = 0.0;
    std::string joined;
    for (size_t i = 0; i < log.cumulative_rewards.size(); ++i) {
      mean += log.cumulative_rewards[i];
      joined += (i ? ";" : "") + fmt(log.cumulative_rewards[i]);
    }
    if (!log.cumulative_rewards.empty()) mean /= log.cumulative_rewards.size();
    log_file << log.round << ',' << log.episode << ',' << log.n_agents << ',' << log.length
             << ',' << fmt(mean) << ',' << joined << ',' << fmt(log.mean_recharge_battery)
             << ',' << fmt(log.actor_loss) << ',' << fmt(log.critic_loss) << ','
             << fmt(log.entropy) << "\n";
  }
  log_file.close();
  outputs.push_back("training_log.csv");

  // final checkpoint under a stable name
  trainer.policy().save((fs::path(cfg.out_dir) / "checkpoint_final.bin").string());
  outputs.push_back("checkpoint_final.bin");

  write_manifest(cfg, "train", outputs);
  return 0;
}

int cmd_eval_battery(const ExperimentConfig& cfg, const std::string& checkpoint) {
  auto map = load_map_shared(cfg);
  fs::create_directories(cfg.out_dir);
  EnvConfig env_cfg = eval_env_config(cfg);
  std::optional<PolicySet> policy;
  if (cfg.strategy != "cr") policy = load_policy(checkpoint);

  std::ofstream csv(fs::path(cfg.out_dir) / "battery.csv");
  csv << "n,b_c,d_bc,F,d_F\n";
  for (int n : cfg.eval.agent_counts) {
    std::vector<std::vector<metrics::EpisodeTrace>> tests;
    for (int test = 0; test < cfg.eval.tests; ++test) {
      std::vector<metrics::EpisodeTrace> episodes;
      for (int ep = 0; ep < cfg.eval.episodes; ++ep) {
        uint64_t seed = derive_seed(cfg.seed, static_cast<uint64_t>(n), test, ep);
        auto provider = make_provider(cfg, policy ? &*policy : nullptr, derive_seed(seed, 1));
        episodes.push_back(
            run_eval_episode(map, env_cfg, *provider, n, cfg.eval.horizon, derive_seed(seed, 0)));
      }
      tests.push_back(std::move(episodes));
    }
    metrics::BatteryStats stats = metrics::battery_stats(tests);
    csv << n << ',';
    if (stats.recharge_events > 0)
      csv << fmt(stats.mean_battery) << ',' << fmt(stats.std_battery) << ',';
    else
      csv << "NAN,NAN,";
    if (stats.rate_available)
      csv << fmt(stats.fail_rate) << ',' << fmt(stats.fail_rate_std) << "\n";
    else
      csv << "NAN,NAN\n";
  }
  csv.close();
  write_manifest(cfg, "eval-battery", {"battery.csv"});
  return 0;
}

int cmd_eval_patrol(const ExperimentConfig& cfg, const std::string& checkpoint) {
  auto map = load_map_shared(cfg);
  fs::create_directories(cfg.out_dir);
  EnvConfig env_cfg = eval_env_config(cfg);
  std::optional<PolicySet> policy;
  if (cfg.strategy != "cr") policy = load_policy(checkpoint);

  std::ofstream csv(fs::path(cfg.out_dir) / "patrol.csv");
  csv << "n,avg_h,d_avg,maxbar_h,d_maxbar,max_h\n";
  for (int n : cfg.eval.agent_counts) {
    std::vector<metrics::PatrolSummary> summaries;
    long attempt = 0;
    long budget = static_cast<long>(cfg.eval.retry_bound) * cfg.eval.episodes;
    while (static_cast<int>(summaries.size()) < cfg.eval.episodes) {
      if (attempt >= budget)
        throw QuotaUnreachable("could not collect clean episodes for n=" + std::to_string(n));
      uint64_t seed = derive_seed(cfg.seed, 0xeaa1, static_cast<uint64_t>(n), attempt);
      ++attempt;
      auto provider = make_provider(cfg, policy ? &*policy : nullptr, derive_seed(seed, 1));
      metrics::EpisodeTrace trace =
          run_eval_episode(map, env_cfg, *provider, n, cfg.eval.horizon, derive_seed(seed, 0));
      if (!trace.failures.empty()) continue;  // rerun with a fresh seed
      summaries.push_back(metrics::summarize_patrol(trace, cfg.eval.warmup));
    }
    double avg = 0.0, maxbar = 0.0, max_h = 0.0;
    for (const auto& s : summaries) {
      avg += s.avg_h;
      maxbar += s.maxbar_h;
      max_h = std::max(max_h, s.max_h);
    }
    avg /= summaries.size();
    maxbar /= summaries.size();
    double d_avg = 0.0, d_maxbar = 0.0;
    for (const auto& s : summaries) {
      d_avg += (s.avg_h - avg) * (s.avg_h - avg);
      d_maxbar += (s.maxbar_h - maxbar) * (s.maxbar_h - maxbar);
    }
    d_avg = std::sqrt(d_avg / summaries.size());
    d_maxbar = std::sqrt(d_maxbar / summaries.size());
    csv << n << ',' << fmt(avg) << ',' << fmt(d_avg) << ',' << fmt(maxbar) << ','
        << fmt(d_maxbar) << ',' << fmt(max_h) << "\n";
  }
  csv.close();
  write_manifest(cfg, "eval-patrol", {"patrol.csv"});
  return 0;
}

int cmd_eval_fault(const ExperimentConfig& cfg, const std::string& checkpoint) {
  auto map = load_map_shared(cfg);
  fs::create_directories(cfg.out_dir);
  EnvConfig env_cfg = eval_env_config(cfg);
  std::optional<PolicySet> policy;
  if (cfg.strategy != "cr") policy = load_policy(checkpoint);

  Rng schedule_rng(derive_seed(cfg.seed, 0xfa17));
  int initial = cfg.eval.fault_initial;
  std::vector<metrics::FaultEvent> events;
  if (!cfg.eval.fault_events.empty()) {
    if (initial < 1) throw ConfigError("scripted fault runs need eval.fault_initial >= 1");
    events = parse_fault_events(cfg.eval.fault_events).events;
  } else {
    metrics::FaultSchedule schedule =
        metrics::fault_tolerance_schedule(cfg.eval.days, schedule_rng);
    if (initial < 1) initial = schedule.initial_agents;
    events = schedule.events;
  }

  Env env = Env::reset(map, env_cfg, initial, derive_seed(cfg.seed, 0xfa18));
  auto provider = make_provider(cfg, policy ? &*policy : nullptr, derive_seed(cfg.seed, 0xfa19));

  std::ofstream csv(fs::path(cfg.out_dir) / "fault.csv");
  csv << "day,agent_count,avg,maxbar,mean_recharge_battery\n";
  Rng victim_rng(derive_seed(cfg.seed, 0xfa20));
  for (int day = 1; day <= cfg.eval.days; ++day) {
    for (const metrics::FaultEvent& event : events) {
      if (event.day != day) continue;
      for (int k = 0; k < event.fail_count; ++k) {
        std::vector<int> alive;
        for (const AgentState& a : env.agents())
          if (a.status != AgentStatus::Failed) alive.push_back(a.id);
        if (alive.size() <= 1) break;  // always leave one active agent
        env.fail_agent(alive[victim_rng.uniform_int(0, static_cast<int>(alive.size()) - 1)]);
      }
      for (int k = 0; k < event.add_count; ++k) {
        if (env.active_count() >= 8) break;
        env.add_agent();
      }
    }
    int count = env.active_count();
    double avg = 0.0, maxbar = 0.0, recharge_sum = 0.0;
    int measured = 0;
    long recharge_count = 0;
    for (int step = 0; step < cfg.eval.day_steps; ++step) {
      StepOutcome outcome = env.step(provider->act(env));
      // the opening steps of the first day still carry reset idleness
      if (day == 1 && step < cfg.eval.warmup) continue;
      const GridMap& m = env.map();
      double sum = 0.0, peak = 0.0;
      int vertices = 0;
      for (int r = 0; r < m.rows(); ++r) {
        for (int c = 0; c < m.cols(); ++c) {
          if (m.cell({r, c}) != CellKind::Vertex) continue;
          double v = env.idleness().at({r, c});
          sum += v;
          peak = std::max(peak, v);
          ++vertices;
        }
      }
      avg += sum / vertices;
      maxbar += peak;
      ++measured;
      for (int id : outcome.intentional_recharges) {
        recharge_sum += env.find_agent(id)->battery;
        ++recharge_count;
      }
    }
    csv << day << ',' << count << ',' << fmt(measured > 0 ? avg / measured : 0.0) << ','
        << fmt(measured > 0 ? maxbar / measured : 0.0) << ','
        << fmt(recharge_count > 0 ? recharge_sum / recharge_count : 1.0) << "\n";
  }
  csv.close();
  write_manifest(cfg, "eval-fault", {"fault.csv"});
  return 0;
}

int cmd_gradcheck(std::ostream& out) {
  std::vector<ad::GradCheckResult> results = ad::run_gradcheck_suite(out, 20);
  bool ok = true;
  for (const auto& r : results) ok = ok && r.passed();
  out << (ok ? "gradcheck: PASS" : "gradcheck: FAIL") << "\n";
  return ok ? 0 : 1;
}

int run_command(const std::string& command, const std::string& config_path,
                const std::string& checkpoint, std::optional<uint64_t> seed_override,
                const std::string& out_override) {
  try {
    if (command == "gradcheck") return cmd_gradcheck(std::cout);
    ExperimentConfig cfg = load_config(config_path);
    if (seed_override) cfg.seed = *seed_override;
    if (!out_override.empty()) cfg.out_dir = out_override;
    if (command == "train") return cmd_train(cfg);
    if (command == "eval-battery") return cmd_eval_battery(cfg, checkpoint);
    if (command == "eval-patrol") return cmd_eval_patrol(cfg, checkpoint);
    if (command == "eval-fault") return cmd_eval_fault(cfg, checkpoint);
    std::cerr << "unknown command: " << command << "\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace patrol::harness
