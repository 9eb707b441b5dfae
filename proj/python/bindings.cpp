#include <filesystem>
#include <string>

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "fogperc/config.hpp"
#include "fogperc/cpufreq.hpp"
#include "fogperc/error.hpp"
#include "fogperc/harness.hpp"
#include "fogperc/marl.hpp"
#include "fogperc/world.hpp"

namespace py = pybind11;
using namespace fogperc;

namespace {

// JSON crosses the boundary as text; the Python wrapper decodes it.
std::string dump(const nlohmann::json& j) { return j.dump(); }

std::string run_baseline(const ExperimentConfig& cfg, const std::string& name, int episodes) {
  const auto seeds = evaluation_seeds(cfg.seed, episodes > 0 ? episodes : cfg.eval_episodes);
  if (name == "distance-full") return dump(run_baseline_distance_full(cfg, seeds).to_json());
  if (name == "max-sum-rate") return dump(run_baseline_maxsumrate(cfg, seeds).to_json());
  if (name == "random") return dump(run_random_policy(cfg, seeds).to_json());
  throw py::value_error("unknown baseline: " + name);
}

}  // namespace

PYBIND11_MODULE(_fogperc, m) {
  m.doc() = "Native core of the fogperc package";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::class_<ExperimentConfig>(m, "Config")
      .def(py::init<>())
      .def_readwrite("seed", &ExperimentConfig::seed)
      .def_readwrite("run_id", &ExperimentConfig::run_id)
      .def_readwrite("eval_episodes", &ExperimentConfig::eval_episodes)
      .def_property(
          "num_vues", [](const ExperimentConfig& c) { return c.scenario.num_vues; },
          [](ExperimentConfig& c, int k) { c.scenario.num_vues = k; })
      .def_property(
          "steps_per_episode", [](const ExperimentConfig& c) { return c.scenario.steps_per_episode; },
          [](ExperimentConfig& c, int t) { c.scenario.steps_per_episode = t; })
      .def_property(
          "training_episodes", [](const ExperimentConfig& c) { return c.training.episodes; },
          [](ExperimentConfig& c, int e) { c.training.episodes = e; })
      .def("validate", &ExperimentConfig::validate)
      .def("to_json", [](const ExperimentConfig& c) { return dump(to_json(c)); });

  m.def("load_config", [](const std::filesystem::path& p) { return load_config(p); }, py::arg("path"));
  m.def("parse_config", &parse_config, py::arg("text"));

  py::class_<FreqSolution>(m, "FreqSolution")
      .def_readonly("f", &FreqSolution::f)
      .def_readonly("pinned", &FreqSolution::pinned)
      .def_readonly("feasible", &FreqSolution::feasible);

  m.def(
      "allocate_frequencies",
      [](std::vector<double> loads, double budget, std::optional<std::vector<double>> caps) {
        FreqProblem p = FreqProblem::uncapped(std::move(loads), budget);
        if (caps) p.caps = *caps;
        p.validate();
        return allocate_frequencies(p);
      },
      py::arg("loads"), py::arg("budget"), py::arg("caps") = py::none());
  m.def(
      "computation_objective",
      [](std::vector<double> loads, double budget, const std::vector<double>& f) {
        return computation_objective(FreqProblem::uncapped(std::move(loads), budget), f);
      },
      py::arg("loads"), py::arg("budget"), py::arg("f"));
  m.def(
      "grid_search_oracle",
      [](std::vector<double> loads, double budget, std::optional<std::vector<double>> caps, double resolution) {
        FreqProblem p = FreqProblem::uncapped(std::move(loads), budget);
        if (caps) p.caps = *caps;
        p.validate();
        return grid_search_oracle(p, resolution);
      },
      py::arg("loads"), py::arg("budget"), py::arg("caps") = py::none(), py::arg("resolution") = 0.01);

  m.def("temporal_value_linear", &temporal_value_linear, py::arg("q0"), py::arg("t0"), py::arg("t"),
        py::arg("tau_dll"));

  m.def("run_baseline", &run_baseline, py::arg("config"), py::arg("name"), py::arg("episodes") = 0,
        py::call_guard<py::gil_scoped_release>());
  m.def("run_oracles", [](const ExperimentConfig& cfg) { return dump(run_oracles(cfg).to_json()); },
        py::arg("config"), py::call_guard<py::gil_scoped_release>());

  py::class_<Trainer>(m, "Trainer")
      .def(py::init<const ExperimentConfig&>(), py::arg("config"))
      .def_property_readonly("episodes_done", &Trainer::episodes_done)
      .def("run_episode",
           [](Trainer& t) {
             const EpisodeLog log = t.run_episode();
             return py::dict(py::arg("episode") = log.episode, py::arg("reward") = log.reward,
                            py::arg("sum_satisfaction") = log.sum_satisfaction,
                            py::arg("latency_violations") = log.latency_violations,
                            py::arg("other_violations") = log.other_violations, py::arg("noise") = log.noise);
           })
      .def("train", [](Trainer& t) { t.train(); }, py::call_guard<py::gil_scoped_release>())
      .def(
          "evaluate",
          [](const Trainer& t, int episodes) {
            const auto& cfg = t.config();
            return dump(run_trained_policy(t, evaluation_seeds(cfg.seed, episodes > 0 ? episodes : cfg.eval_episodes))
                            .to_json());
          },
          py::arg("episodes") = 0, py::call_guard<py::gil_scoped_release>())
      .def("learning_curve",
           [](const Trainer& t) {
             std::vector<double> v;
             for (const auto& log : t.history()) v.push_back(log.sum_satisfaction);
             return v;
           })
      .def("save_checkpoint", &Trainer::save_checkpoint, py::arg("path"))
      .def("load_checkpoint", &Trainer::load_checkpoint, py::arg("path"));
}
