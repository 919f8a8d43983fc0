#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "patrol/baselines.hpp"
#include "patrol/docs.hpp"
#include "patrol/harness.hpp"

namespace py = pybind11;
using namespace patrol;

namespace {

std::map<int, Action> to_actions(const std::map<int, int>& raw) {
  std::map<int, Action> actions;
  for (auto [id, a] : raw) actions[id] = static_cast<Action>(a);
  return actions;
}

std::vector<double> masked_probs(const std::vector<double>& values,
                                 const std::vector<double>& mask, bool through_softmax) {
  ad::Tensor input({static_cast<int>(values.size())}, std::vector<double>(values));
  ad::Tensor out = through_softmax ? ad::masked_softmax(input, mask)
                                   : ad::masked_renormalize(input, mask);
  return out.data();
}

std::vector<mappo::Trajectory> series_to_trajectories(
    const std::vector<std::vector<std::pair<int, double>>>& series) {
  std::vector<mappo::Trajectory> trajs;
  int id = 0;
  for (const auto& agent_series : series) {
    mappo::Trajectory traj;
    traj.agent_id = id++;
    for (auto [step, reward] : agent_series) {
      mappo::TransitionRecord rec;
      rec.step = step;
      rec.reward = reward;
      traj.records.push_back(rec);
    }
    trajs.push_back(std::move(traj));
  }
  return trajs;
}

}  // namespace

PYBIND11_MODULE(patrolcore, m) {
  m.doc() = "energy-aware multi-agent patrolling core";
  m.attr("ACTIONS") = py::make_tuple("up", "down", "left", "right");

  py::register_exception<harness::ConfigError>(m, "ConfigError");

  py::class_<Loc>(m, "Loc")
      .def(py::init<int, int>(), py::arg("row"), py::arg("col"))
      .def_readwrite("row", &Loc::row)
      .def_readwrite("col", &Loc::col)
      .def("__repr__", [](const Loc& loc) {
        return "Loc(" + std::to_string(loc.row) + ", " + std::to_string(loc.col) + ")";
      })
      .def("__eq__", [](const Loc& a, const Loc& b) { return a == b; });

  py::class_<GridMap, std::shared_ptr<GridMap>>(m, "GridMap")
      .def_static("parse", &GridMap::parse)
      .def_static("load_file", &GridMap::load_file)
      .def_property_readonly("rows", &GridMap::rows)
      .def_property_readonly("cols", &GridMap::cols)
      .def_property_readonly("stations", &GridMap::stations)
      .def_property_readonly("vertex_count", &GridMap::vertex_count)
      .def("cell_code", [](const GridMap& map, int r, int c) {
        return cell_code(map.cell({r, c}));
      })
      .def("valid_actions",
           [](const GridMap& map, int r, int c) { return map.valid_actions({r, c}); })
      .def("shortest_path",
           [](const GridMap& map, const Loc& from, const Loc& to) {
             std::vector<int> out;
             for (Action a : map.shortest_path(from, to)) out.push_back(static_cast<int>(a));
             return out;
           })
      .def("nearest_station", [](const GridMap& map, const Loc& loc) {
        auto [station, path] = map.nearest_station(loc);
        std::vector<int> actions;
        for (Action a : path) actions.push_back(static_cast<int>(a));
        return py::make_tuple(station, actions);
      });

  py::class_<EnvConfig>(m, "EnvConfig")
      .def(py::init<>())
      .def_readwrite("b_max", &EnvConfig::b_max)
      .def_readwrite("b_swap_min", &EnvConfig::b_swap_min)
      .def_readwrite("b_swap_max", &EnvConfig::b_swap_max)
      .def_readwrite("p_dyn_min", &EnvConfig::p_dyn_min)
      .def_readwrite("p_dyn_max", &EnvConfig::p_dyn_max)
      .def_readwrite("drain_extra_max", &EnvConfig::drain_extra_max)
      .def_readwrite("idle_jitter", &EnvConfig::idle_jitter)
      .def_readwrite("b_l", &EnvConfig::b_l)
      .def_readwrite("max_agents", &EnvConfig::max_agents)
      .def_readwrite("idle_cap", &EnvConfig::idle_cap);

  py::enum_<AgentStatus>(m, "AgentStatus")
      .value("patrolling", AgentStatus::Patrolling)
      .value("swapping", AgentStatus::Swapping)
      .value("failed", AgentStatus::Failed);

  py::class_<AgentState>(m, "AgentState")
      .def_readonly("id", &AgentState::id)
      .def_readonly("loc", &AgentState::loc)
      .def_readonly("battery", &AgentState::battery)
      .def_readonly("status", &AgentState::status)
      .def_readonly("swap_remaining", &AgentState::swap_remaining);

  py::class_<StepOutcome>(m, "StepOutcome")
      .def_readonly("duration", &StepOutcome::duration)
      .def_readonly("intentional_recharges", &StepOutcome::intentional_recharges)
      .def_readonly("battery_failures", &StepOutcome::battery_failures)
      .def_readonly("perturbed", &StepOutcome::perturbed);

  py::class_<ActorObservation>(m, "ActorObservation")
      .def_readonly("rows", &ActorObservation::rows)
      .def_readonly("cols", &ActorObservation::cols)
      .def_readonly("map_channel", &ActorObservation::map_channel)
      .def_readonly("idleness_channel", &ActorObservation::idleness_channel)
      .def_readonly("loc_row", &ActorObservation::loc_row)
      .def_readonly("loc_col", &ActorObservation::loc_col)
      .def_readonly("battery", &ActorObservation::battery)
      .def_readonly("mask", &ActorObservation::mask);

  py::class_<CriticObservation>(m, "CriticObservation")
      .def_readonly("map_channel", &CriticObservation::map_channel)
      .def_readonly("idleness_channel", &CriticObservation::idleness_channel)
      .def_readonly("batteries", &CriticObservation::batteries)
      .def_readonly("locations", &CriticObservation::locations);

  py::class_<Env>(m, "Env")
      .def_static(
          "reset",
          [](std::shared_ptr<GridMap> map, const EnvConfig& cfg, int n_agents, uint64_t seed) {
            return Env::reset(std::move(map), cfg, n_agents, seed);
          },
          py::arg("map"), py::arg("config"), py::arg("n_agents"), py::arg("seed"))
      .def("step",
           [](Env& env, const std::map<int, int>& actions) {
             return env.step(to_actions(actions));
           })
      .def("fail_agent", &Env::fail_agent)
      .def("add_agent", &Env::add_agent)
      .def("observe_actor", &Env::observe_actor, py::arg("agent_id"), py::arg("c_norm"))
      .def("observe_critic", &Env::observe_critic, py::arg("c_norm"))
      .def("idleness", [](const Env& env) { return env.idleness().values; })
      .def("agents", [](const Env& env) { return env.agents(); })
      .def("patrolling_ids", &Env::patrolling_ids)
      .def("active_count", &Env::active_count)
      .def("time", &Env::time);

  m.def("normalize_idleness", &rewards::normalize_idleness, py::arg("idleness"),
        py::arg("c_norm"));
  m.def("battery_recharge_term", &rewards::battery_recharge_term);
  m.def("battery_patrol_term", &rewards::battery_patrol_term);
  m.def("battery_failure_penalty", &rewards::battery_failure_penalty);
  m.def("battery_threshold_penalty", &rewards::battery_threshold_penalty,
        py::arg("battery"), py::arg("b_l"), py::arg("recharged"), py::arg("c_recharge"),
        py::arg("c_patrol"));
  m.def(
      "patrol_reward_base",
      [](const std::vector<double>& values, std::shared_ptr<GridMap> map, double c_norm) {
        IdlenessState idle;
        idle.rows = map->rows();
        idle.cols = map->cols();
        idle.values = values;
        return rewards::patrol_reward_base(idle, *map, c_norm);
      },
      py::arg("idleness"), py::arg("map"), py::arg("c_norm"));

  m.def(
      "masked_renormalize",
      [](const std::vector<double>& probs, const std::vector<double>& mask) {
        return masked_probs(probs, mask, false);
      },
      py::arg("probs"), py::arg("mask"));
  m.def(
      "masked_softmax",
      [](const std::vector<double>& logits, const std::vector<double>& mask) {
        return masked_probs(logits, mask, true);
      },
      py::arg("logits"), py::arg("mask"));

  m.def("compute_gae", &mappo::compute_gae, py::arg("rewards"), py::arg("values"),
        py::arg("bootstrap"), py::arg("gamma"), py::arg("lambda_"));
  m.def("discounted_to_go", &mappo::discounted_to_go, py::arg("series"), py::arg("length"),
        py::arg("gamma"));
  m.def(
      "v_targ_prime",
      [](const std::vector<std::vector<std::pair<int, double>>>& series, int length,
         double gamma) {
        auto trajs = series_to_trajectories(series);
        return mappo::compute_v_targ_prime(trajs, length, gamma);
      },
      py::arg("series"), py::arg("length"), py::arg("gamma"));
  m.def(
      "reconstruct_swap_gaps",
      [](const std::vector<std::vector<std::pair<int, double>>>& series, int length) {
        auto trajs = series_to_trajectories(series);
        mappo::reconstruct_swap_gaps(trajs, length);
        std::vector<std::vector<std::pair<int, double>>> out;
        for (const auto& traj : trajs) {
          std::vector<std::pair<int, double>> agent_series;
          for (const auto& rec : traj.records) agent_series.emplace_back(rec.step, rec.reward);
          out.push_back(std::move(agent_series));
        }
        return out;
      },
      py::arg("series"), py::arg("length"));

  m.def(
      "cr_critical_point",
      [](std::shared_ptr<GridMap> map, const Loc& loc, double b_l, int b_max, int margin) {
        baselines::CrParams params;
        params.b_l = b_l;
        params.b_max = b_max;
        params.margin = margin;
        return baselines::cr_critical_point(*map, loc, params);
      },
      py::arg("map"), py::arg("loc"), py::arg("b_l"), py::arg("b_max"), py::arg("margin") = 5);

  m.def(
      "run_command",
      [](const std::string& command, const std::string& config, const std::string& checkpoint,
         std::optional<uint64_t> seed, const std::string& out) {
        return harness::run_command(command, config, checkpoint, seed, out);
      },
      py::arg("command"), py::arg("config"), py::arg("checkpoint") = "",
      py::arg("seed") = std::nullopt, py::arg("out") = "",
      "Run a CLI command (train, eval-battery, eval-patrol, eval-fault, gradcheck); "
      "returns the exit code.");
  m.def("generate_repro_index", &docs::generate_repro_index, py::arg("manifest_dir"));
}
