// Command-line driver: train, eval, sweep, oracle-check, baseline.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fogperc/config.hpp"
#include "fogperc/error.hpp"
#include "fogperc/harness.hpp"
#include "fogperc/marl.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fogperc;

namespace {

enum ExitCode { kOk = 0, kUsage = 2, kConfig = 3, kIo = 4, kRuntime = 5 };

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string baseline;
  std::string checkpoint;
  bool resume = false;
  int checkpoint_every = 10;
};

int fail(int code, const std::string& type, const std::string& message, const std::string& field = {}) {
  json err{{"status", "error"}, {"error", {{"type", type}, {"message", message}}}};
  if (!field.empty()) err["error"]["field"] = field;
  std::cerr << err.dump() << std::endl;
  return code;
}

ExperimentConfig resolve(const Options& opt) {
  ExperimentConfig cfg = opt.config.empty() ? ExperimentConfig{} : load_config(opt.config);
  if (opt.seed) cfg.seed = *opt.seed;
  if (!opt.baseline.empty()) cfg.baseline = opt.baseline;
  cfg.validate();
  return cfg;
}

fs::path out_dir(const Options& opt, const ExperimentConfig& cfg) {
  const fs::path dir = opt.out.empty() ? fs::path("out") / cfg.run_id : fs::path(opt.out);
  fs::create_directories(dir);
  return dir;
}

json final_window(const std::vector<EpisodeLog>& history) {
  const std::size_t n = history.size();
  const std::size_t window = std::max<std::size_t>(1, n / 10);
  std::vector<double> sat;
  for (std::size_t i = n - std::min(n, window); i < n; ++i) sat.push_back(history[i].sum_satisfaction);
  return {{"episodes", sat.size()}, {"mean_sum_satisfaction", mean(sat)}, {"std_sum_satisfaction", stddev(sat)}};
}

int cmd_train(const Options& opt) {
  const ExperimentConfig cfg = resolve(opt);
  const fs::path dir = out_dir(opt, cfg);
  const fs::path ckpt = opt.checkpoint.empty() ? dir / "checkpoint.bin" : fs::path(opt.checkpoint);
  Trainer trainer(cfg);
  if (opt.resume && fs::exists(ckpt)) trainer.load_checkpoint(ckpt);
  write_json(dir / "manifest.json", run_manifest(cfg, "train"));
  MetricsWriter writer(dir, cfg.run_id);
  run_proposed(trainer, &writer, [&](const EpisodeLog& log) {
    if (opt.checkpoint_every > 0 && (log.episode + 1) % opt.checkpoint_every == 0) trainer.save_checkpoint(ckpt);
  });
  trainer.save_checkpoint(ckpt);
  write_learning_curve(dir / "learning_curve.csv", trainer.history());
  json summary{{"schema_version", kMetricsSchemaVersion},
               {"run_id", cfg.run_id},
               {"episodes", trainer.episodes_done()},
               {"final_window", final_window(trainer.history())},
               {"evaluation", run_trained_policy(trainer, evaluation_seeds(cfg.seed, cfg.eval_episodes)).to_json()}};
  write_json(dir / "summary.json", summary);
  return kOk;
}

int cmd_eval(const Options& opt) {
  const ExperimentConfig cfg = resolve(opt);
  const fs::path dir = out_dir(opt, cfg);
  const fs::path ckpt = opt.checkpoint.empty() ? dir / "checkpoint.bin" : fs::path(opt.checkpoint);
  if (!fs::exists(ckpt)) return fail(kIo, "missing_checkpoint", "checkpoint not found: " + ckpt.string());
  Trainer trainer(cfg);
  trainer.load_checkpoint(ckpt);
  write_json(dir / "manifest.json", run_manifest(cfg, "eval"));
  MetricsWriter writer(dir, cfg.run_id);
  const auto s = run_trained_policy(trainer, evaluation_seeds(cfg.seed, cfg.eval_episodes), &writer);
  write_json(dir / "summary.json", {{"schema_version", kMetricsSchemaVersion}, {"evaluation", s.to_json()}});
  return kOk;
}

int cmd_baseline(const Options& opt) {
  const ExperimentConfig cfg = resolve(opt);
  const fs::path dir = out_dir(opt, cfg);
  write_json(dir / "manifest.json", run_manifest(cfg, "baseline"));
  MetricsWriter writer(dir, cfg.run_id);
  const auto seeds = evaluation_seeds(cfg.seed, cfg.eval_episodes);
  const RunSummary s = cfg.baseline == "max-sum-rate" ? run_baseline_maxsumrate(cfg, seeds, &writer)
                                                      : run_baseline_distance_full(cfg, seeds, &writer);
  write_json(dir / "summary.json", {{"schema_version", kMetricsSchemaVersion}, {"evaluation", s.to_json()}});
  return kOk;
}

int cmd_sweep(const Options& opt) {
  const ExperimentConfig cfg = resolve(opt);
  const fs::path dir = out_dir(opt, cfg);
  write_json(dir / "manifest.json", run_manifest(cfg, "sweep"));
  write_sweep_tables(dir, sweep(cfg));
  return kOk;
}

int cmd_oracle(const Options& opt) {
  const ExperimentConfig cfg = resolve(opt);
  const fs::path dir = out_dir(opt, cfg);
  write_json(dir / "manifest.json", run_manifest(cfg, "oracle-check"));
  const json report = run_oracles(cfg).to_json();
  write_json(dir / "oracle_report.json", report);
  std::cout << json{{"matching", report["matching"]["verdict"]}, {"frequency", report["frequency"]["verdict"]}}.dump()
            << std::endl;
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cooperative perception resource allocation experiments"};
  app.require_subcommand(1);
  Options opt;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config, "INI config file");
    sub->add_option("--seed", opt.seed, "root seed (overrides the config)");
    sub->add_option("--out", opt.out, "output directory (default out/<run_id>)");
    sub->add_option("--baseline", opt.baseline, "baseline policy")
        ->check(CLI::IsMember({"distance-full", "max-sum-rate"}));
  };
  auto* train = app.add_subcommand("train", "train the MARL policy and write metrics");
  auto* eval = app.add_subcommand("eval", "evaluate a trained checkpoint");
  auto* sweep_cmd = app.add_subcommand("sweep", "run the sweep grid");
  auto* oracle = app.add_subcommand("oracle-check", "compare fast paths against exhaustive oracles");
  auto* baseline = app.add_subcommand("baseline", "run a baseline policy");
  for (auto* sub : {train, eval, sweep_cmd, oracle, baseline}) add_common(sub);
  for (auto* sub : {train, eval}) sub->add_option("--checkpoint", opt.checkpoint, "checkpoint path");
  train->add_flag("--resume", opt.resume, "continue from the checkpoint if present");
  train->add_option("--checkpoint-every", opt.checkpoint_every, "episodes between checkpoints (0 = end only)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(kUsage, "usage", e.what());
  }

  const auto start = std::chrono::steady_clock::now();
  try {
    int rc = kOk;
    std::string name;
    if (train->parsed()) rc = cmd_train(opt), name = "train";
    else if (eval->parsed()) rc = cmd_eval(opt), name = "eval";
    else if (sweep_cmd->parsed()) rc = cmd_sweep(opt), name = "sweep";
    else if (oracle->parsed()) rc = cmd_oracle(opt), name = "oracle-check";
    else rc = cmd_baseline(opt), name = "baseline";
    if (rc == kOk) {
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      std::cout << json{{"status", "ok"}, {"command", name}, {"seconds", secs}}.dump() << std::endl;
    }
    return rc;
  } catch (const ConfigError& e) {
    return fail(kConfig, "config", e.what(), e.field());
  } catch (const fs::filesystem_error& e) {
    return fail(kIo, "io", e.what());
  } catch (const std::exception& e) {
    return fail(kRuntime, "runtime", e.what());
  }
}
