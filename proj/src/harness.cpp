#include "fogperc/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "fogperc/error.hpp"

namespace fogperc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::ofstream open_csv(const std::filesystem::path& path, const char* header) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.precision(17);
  out << header << '\n';
  return out;
}

double ms(double seconds) { return seconds * 1e3; }

ExperimentConfig instance_config(const ExperimentConfig& base, int vues, int rbs) {
  ExperimentConfig cfg = base;
  cfg.scenario.num_vues = vues;
  cfg.radio.num_rbs = rbs;
  return cfg;
}

ChannelState instance_channels(const World& world, const RadioConfig& radio, std::uint64_t seed) {
  Rng rng(stream_seed(seed, "channels"));
  return sample_channels(world, radio, rng);
}

int instance_node(const World& world, std::uint64_t seed) {
  return world.num_faps() > 0 && (mix64(seed) & 1U) ? 1 : 0;
}

}  // namespace

int distance_mode(const World& world, int k) {
  const Vec2 pos = world.vue(k).position;
  int best_fap = 0;
  double best_fap_dist = kInf;
  for (const auto& fap : world.faps()) {
    const double d = distance(pos, fap.position);
    if (d <= fap.coverage_radius && d < best_fap_dist) {
      best_fap_dist = d;
      best_fap = fap.id;
    }
  }
  if (best_fap == 0) return 0;
  double best_rrh = kInf;
  for (const auto& rrh : world.rrhs()) best_rrh = std::min(best_rrh, distance(pos, rrh.position));
  return best_fap_dist <= best_rrh ? best_fap : 0;
}

std::vector<Decision> distance_full_decisions(const Environment& env) {
  const World& w = env.world();
  std::vector<Decision> out;
  for (int k = 0; k < w.num_vues(); ++k) out.push_back({distance_mode(w, k), w.sensed_blocks(k)});
  return out;
}

std::vector<Decision> random_decisions(const Environment& env, Rng& rng) {
  const World& w = env.world();
  std::vector<Decision> out;
  for (int k = 0; k < w.num_vues(); ++k) {
    Decision d;
    d.node = static_cast<int>(rng.index(static_cast<std::size_t>(w.num_nodes())));
    for (int b : w.sensed_blocks(k))
      if (rng.uniform() < 0.5) d.blocks.push_back(b);
    out.push_back(std::move(d));
  }
  return out;
}

MetricsWriter::MetricsWriter(const std::filesystem::path& dir, std::string run_id) : run_id_(std::move(run_id)) {
  std::filesystem::create_directories(dir);
  steps_ = open_csv(dir / "steps.csv",
                    "run_id,episode,step,sum_satisfaction,reward,penalty,latency_violations,block_violations,"
                    "mode_violations,rb_violations,budget_violations,matching_iterations,unmatched,"
                    "mean_latency_ms,max_latency_ms");
  vues_ = open_csv(dir / "vues.csv",
                   "run_id,episode,step,vue,node,blocks,rb,rate_bps,comm_ms,comp_ms,latency_ms,limit_ms,freq_hz,"
                   "satisfaction,latency_violated");
}

void MetricsWriter::record(int episode, const StepResult& r) {
  const StepOutcome& o = r.outcome;
  std::map<Constraint, int> counts;
  std::vector<bool> late(o.latency.total.size(), false);
  for (const auto& v : o.violations) {
    ++counts[v.constraint];
    if (v.constraint == Constraint::kLatency) late[v.index] = true;
  }
  double total = 0.0, worst = 0.0;
  for (double t : o.latency.total) {
    total += t;
    worst = std::max(worst, t);
  }
  const double avg = o.latency.total.empty() ? 0.0 : total / static_cast<double>(o.latency.total.size());
  steps_ << run_id_ << ',' << episode << ',' << r.step << ',' << o.sum_satisfaction << ',' << r.reward << ','
         << r.penalty << ',' << counts[Constraint::kLatency] << ',' << counts[Constraint::kBlockExclusive] << ','
         << counts[Constraint::kSingleMode] << ',' << counts[Constraint::kSingleRb] << ','
         << counts[Constraint::kFrequencyBudget] << ',' << o.matching_iterations << ',' << o.unmatched.size() << ','
         << ms(avg) << ',' << ms(worst) << '\n';
  const auto rbs = o.alloc.rb_indices();
  for (int k = 0; k < o.alloc.num_vues(); ++k) {
    vues_ << run_id_ << ',' << episode << ',' << r.step << ',' << k << ',' << o.alloc.node_of(k).value_or(-1) << ','
          << o.alloc.blocks_selected(k) << ',' << rbs[k] << ',' << o.rates[k] << ',' << ms(o.latency.comm[k]) << ','
          << ms(o.latency.comp[k]) << ',' << ms(o.latency.total[k]) << ',' << ms(o.limits[k]) << ',' << o.alloc.f[k]
          << ',' << o.satisfaction[k] << ',' << (late[k] ? 1 : 0) << '\n';
  }
  ++rows_;
  if (!steps_ || !vues_) throw std::runtime_error("failed writing metrics");
}

nlohmann::json RunSummary::to_json() const {
  return {{"policy", policy},
          {"episodes", episodes},
          {"steps", steps},
          {"episode_sum_satisfaction", episode_sum_satisfaction},
          {"mean_sum_satisfaction", mean_sum_satisfaction},
          {"mean_latency_ms", mean_latency_ms},
          {"latency_violations", latency_violations},
          {"other_violations", other_violations},
          {"violation_rate", violation_rate},
          {"matching_iterations", matching_iterations}};
}

RunSummary run_policy(const ExperimentConfig& cfg, const std::string& name, const Policy& policy,
                      SwapCriterion criterion, const std::vector<std::uint64_t>& episode_seeds,
                      MetricsWriter* writer) {
  RunSummary s;
  s.policy = name;
  double latency_sum = 0.0;
  long vue_steps = 0;
  for (std::size_t e = 0; e < episode_seeds.size(); ++e) {
    Environment env(cfg, episode_seeds[e]);
    double episode_sum = 0.0;
    while (!env.done()) {
      const auto decisions = policy(env);
      const StepResult r = env.step(decisions, criterion);
      if (writer) writer->record(static_cast<int>(e), r);
      episode_sum += r.outcome.sum_satisfaction;
      s.latency_violations += r.latency_violations;
      for (const auto& v : r.outcome.violations)
        if (v.constraint != Constraint::kLatency) ++s.other_violations;
      for (double t : r.outcome.latency.total) latency_sum += t;
      vue_steps += static_cast<long>(r.outcome.latency.total.size());
      s.matching_iterations += r.outcome.matching_iterations;
      ++s.steps;
    }
    s.episode_sum_satisfaction.push_back(episode_sum);
  }
  s.episodes = static_cast<int>(episode_seeds.size());
  s.mean_sum_satisfaction = mean(s.episode_sum_satisfaction);
  s.mean_latency_ms = vue_steps > 0 ? ms(latency_sum / static_cast<double>(vue_steps)) : 0.0;
  s.violation_rate = vue_steps > 0 ? static_cast<double>(s.latency_violations) / static_cast<double>(vue_steps) : 0.0;
  return s;
}

std::vector<std::uint64_t> evaluation_seeds(std::uint64_t root, int count) {
  std::vector<std::uint64_t> out;
  for (int i = 0; i < count; ++i) out.push_back(stream_seed(root, "evaluation", static_cast<std::uint64_t>(i)));
  return out;
}

std::vector<std::uint64_t> training_seeds(std::uint64_t root, int first, int count) {
  std::vector<std::uint64_t> out;
  for (int i = first; i < first + count; ++i) out.push_back(episode_seed(root, i));
  return out;
}

RunSummary run_baseline_distance_full(const ExperimentConfig& cfg, const std::vector<std::uint64_t>& seeds,
                                      MetricsWriter* writer) {
  return run_policy(cfg, "distance-full", distance_full_decisions, SwapCriterion::kMinMaxLatency, seeds, writer);
}

RunSummary run_baseline_maxsumrate(const ExperimentConfig& cfg, const std::vector<std::uint64_t>& seeds,
                                   MetricsWriter* writer) {
  return run_policy(cfg, "max-sum-rate", distance_full_decisions, SwapCriterion::kMaxSumRate, seeds, writer);
}

RunSummary run_random_policy(const ExperimentConfig& cfg, const std::vector<std::uint64_t>& seeds,
                             MetricsWriter* writer) {
  Rng rng(stream_seed(cfg.seed, "random-policy"));
  return run_policy(
      cfg, "random", [&rng](const Environment& env) { return random_decisions(env, rng); },
      SwapCriterion::kMinMaxLatency, seeds, writer);
}

RunSummary run_trained_policy(const Trainer& trainer, const std::vector<std::uint64_t>& seeds,
                              MetricsWriter* writer) {
  return run_policy(
      trainer.config(), "proposed", [&trainer](const Environment& env) { return trainer.decide(env); },
      SwapCriterion::kMinMaxLatency, seeds, writer);
}

void run_proposed(Trainer& trainer, MetricsWriter* writer, const std::function<void(const EpisodeLog&)>& on_episode) {
  if (writer) trainer.set_step_observer([writer](int episode, const StepResult& r) { writer->record(episode, r); });
  trainer.train(on_episode);
  trainer.set_step_observer({});
}

MatchingInstance::MatchingInstance(const ExperimentConfig& base, int vues, int rbs, std::uint64_t seed)
    : world(instance_config(base, vues, rbs).scenario, seed),
      channels(instance_channels(world, instance_config(base, vues, rbs).radio, seed)),
      model(world, channels, instance_config(base, vues, rbs).radio,
            std::vector<int>(static_cast<std::size_t>(vues), instance_node(world, seed))) {
  Rng rng(stream_seed(seed, "oracle-load"));
  const bool cloud = instance_node(world, seed) == 0;
  for (int k = 0; k < vues; ++k) problem.members.push_back(k);
  problem.num_rbs = rbs;
  problem.upload_bits.resize(vues);
  for (auto& b : problem.upload_bits) b = static_cast<double>(1 + rng.index(5)) * base.scenario.block_bits;
  problem.cloud_mode.assign(vues, cloud);
  problem.fronthaul_delay = base.radio.fronthaul_delay;
  problem.background.assign(vues, kNoRb);
  problem.rate = [this](int k, int s, std::span<const int> occ) { return model.rate(k, s, occ); };
}

FreqProblem random_freq_problem(int vues, Rng& rng) {
  FreqProblem p;
  p.budget = rng.uniform(1e9, 30e9);
  for (int k = 0; k < vues; ++k) p.loads.push_back(rng.uniform() < 0.1 ? 0.0 : rng.uniform(1e6, 1e9));
  const auto free = allocate_frequencies(FreqProblem::uncapped(p.loads, p.budget));
  double floor_sum = 0.0;
  for (int k = 0; k < vues; ++k) {
    double cap = kInf;
    if (p.loads[k] > 0.0 && rng.uniform() < 0.6) cap = rng.uniform(0.5, 2.0) * p.loads[k] / free.f[k];
    p.caps.push_back(cap);
    if (std::isfinite(cap)) floor_sum += p.loads[k] / cap;
  }
  // Keep the instance feasible with slack for the grid.
  if (floor_sum > 0.9 * p.budget)
    for (auto& c : p.caps) c *= floor_sum / (0.9 * p.budget);
  return p;
}

int OracleReport::max_swaps() const {
  int m = 0;
  for (const auto& r : swap_rows) m = std::max(m, r.swaps);
  return m;
}

double OracleReport::median_swaps() const {
  std::vector<double> v;
  for (const auto& r : swap_rows) v.push_back(r.swaps);
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double OracleReport::within_10pct_fraction() const {
  if (optimal_rows.empty()) return 0.0;
  int ok = 0;
  for (const auto& r : optimal_rows)
    if (r.proposed <= 1.1 * r.optimal) ++ok;
  return static_cast<double>(ok) / static_cast<double>(optimal_rows.size());
}

bool OracleReport::never_below_optimum() const {
  for (const auto& r : optimal_rows)
    if (r.proposed < r.optimal * (1.0 - 1e-12)) return false;
  return true;
}

bool OracleReport::freq_objective_ok() const {
  for (const auto& r : freq_rows) {
    if (r.kkt_objective > r.grid_objective * (1.0 + 1e-12)) return false;
    if (r.grid_objective > r.neighbor_objective * (1.0 + 1e-12)) return false;
  }
  return true;
}

bool OracleReport::freq_feasible_ok() const {
  for (const auto& r : freq_rows)
    if (r.budget_excess > 1e-9 || r.cap_excess > 1e-9) return false;
  return true;
}

bool OracleReport::freq_stationary_ok() const {
  for (const auto& r : freq_rows)
    if (r.stationarity > 1e-6) return false;
  return true;
}

nlohmann::json OracleReport::to_json() const {
  nlohmann::json j;
  j["schema_version"] = kMetricsSchemaVersion;
  j["matching"]["swap_instances"] = swap_rows.size();
  j["matching"]["max_swaps"] = max_swaps();
  j["matching"]["median_swaps"] = median_swaps();
  j["matching"]["optimal_instances"] = optimal_rows.size();
  j["matching"]["within_10pct_fraction"] = within_10pct_fraction();
  j["matching"]["never_below_optimum"] = never_below_optimum();
  double worst_gap = 0.0;
  for (const auto& r : optimal_rows) worst_gap = std::max(worst_gap, r.proposed / r.optimal - 1.0);
  j["matching"]["worst_relative_gap"] = worst_gap;
  j["matching"]["verdict"] = max_swaps() <= 10 && median_swaps() <= 5 && within_10pct_fraction() >= 0.9 &&
                             never_below_optimum();
  j["frequency"]["instances"] = freq_rows.size();
  j["frequency"]["resolution"] = freq_resolution;
  double worst_stat = 0.0, worst_obj = 0.0;
  for (const auto& r : freq_rows) {
    worst_stat = std::max(worst_stat, r.stationarity);
    worst_obj = std::max(worst_obj, (r.grid_objective - r.kkt_objective) / r.kkt_objective);
  }
  j["frequency"]["worst_stationarity"] = worst_stat;
  j["frequency"]["worst_relative_objective_gap"] = worst_obj;
  j["frequency"]["verdict"] = freq_objective_ok() && freq_feasible_ok() && freq_stationary_ok();
  return j;
}

OracleReport run_oracles(const ExperimentConfig& cfg) {
  OracleReport report;
  report.freq_resolution = cfg.oracle.freq_resolution;
  const std::uint64_t root = stream_seed(cfg.seed, "oracles");

  const int swap_sizes[] = {4, 6, 8};
  for (int i = 0; i < cfg.oracle.instances; ++i) {
    const int size = swap_sizes[i % 3];
    MatchingInstance inst(cfg, size, size, stream_seed(root, "swap", static_cast<std::uint64_t>(i)));
    const auto res = swap_matching(inst.problem, cfg.matching);
    report.swap_rows.push_back({size, res.iterations, res.latency_trace.back(), 0.0});
  }

  std::vector<int> sizes;
  for (int s = 2; s <= std::min(cfg.oracle.max_size, cfg.matching.exhaustive_cap); ++s) sizes.push_back(s);
  if (sizes.empty()) sizes.push_back(1);
  for (int i = 0; i < cfg.oracle.instances; ++i) {
    const int size = sizes[static_cast<std::size_t>(i) % sizes.size()];
    MatchingInstance inst(cfg, size, size, stream_seed(root, "optimal", static_cast<std::uint64_t>(i)));
    const auto res = swap_matching(inst.problem, cfg.matching);
    const Matching best = exhaustive_rb_search(inst.problem, cfg.matching.exhaustive_cap);
    report.optimal_rows.push_back(
        {size, res.iterations, res.latency_trace.back(), bottleneck_latency(inst.problem, best)});
  }

  Rng rng(stream_seed(root, "frequency"));
  for (int i = 0; i < cfg.oracle.freq_instances; ++i) {
    const int vues = 1 + static_cast<int>(rng.index(3));
    const FreqProblem p = random_freq_problem(vues, rng);
    const FreqSolution sol = allocate_frequencies(p);
    const auto grid = grid_search_oracle(p, cfg.oracle.freq_resolution);
    FreqOracleRow row;
    row.vues = vues;
    row.kkt_objective = computation_objective(p, sol.f);
    row.grid_objective = computation_objective(p, grid);
    const auto neighbor = nearest_grid_point(p, sol.f, cfg.oracle.freq_resolution);
    row.neighbor_objective = neighbor ? computation_objective(p, *neighbor) : kInf;
    double used = 0.0;
    for (std::size_t k = 0; k < sol.f.size(); ++k) {
      used += sol.f[k];
      if (p.loads[k] > 0.0 && std::isfinite(p.caps[k]))
        row.cap_excess = std::max(row.cap_excess, (p.loads[k] / sol.f[k] - p.caps[k]) / p.caps[k]);
    }
    row.budget_excess = std::max(0.0, (used - p.budget) / p.budget);
    row.stationarity = stationarity_residual(p, sol);
    report.freq_rows.push_back(row);
  }
  return report;
}

std::vector<SweepCell> sweep(const ExperimentConfig& cfg) {
  std::vector<SweepCell> cells;
  for (int k : cfg.sweep.vues)
    for (double d : cfg.sweep.d_exp) cells.push_back({k, d, std::vector<RunSummary>(cfg.sweep.seeds)});

  struct Job {
    std::size_t cell;
    int seed;
  };
  std::vector<Job> jobs;
  for (std::size_t c = 0; c < cells.size(); ++c)
    for (int s = 0; s < cfg.sweep.seeds; ++s) jobs.push_back({c, s});

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs.size(); j = next++) {
      try {
        SweepCell& cell = cells[jobs[j].cell];
        ExperimentConfig c = cfg;
        c.scenario.num_vues = cell.vues;
        c.scenario.d_exp = cell.d_exp;
        c.seed = stream_seed(cfg.seed, "sweep", static_cast<std::uint64_t>(jobs[j].seed));
        c.validate();
        const auto seeds = evaluation_seeds(c.seed, cfg.sweep.episodes);
        RunSummary r;
        if (cfg.sweep.policy == "distance-full") r = run_baseline_distance_full(c, seeds);
        else if (cfg.sweep.policy == "max-sum-rate") r = run_baseline_maxsumrate(c, seeds);
        else if (cfg.sweep.policy == "random") r = run_random_policy(c, seeds);
        else {
          Trainer trainer(c);
          trainer.train();
          r = run_trained_policy(trainer, seeds);
        }
        cell.runs[static_cast<std::size_t>(jobs[j].seed)] = std::move(r);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const unsigned threads = std::max(1U, std::min<unsigned>(std::thread::hardware_concurrency(),
                                                           static_cast<unsigned>(jobs.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return cells;
}

void write_sweep_tables(const std::filesystem::path& dir, const std::vector<SweepCell>& cells) {
  std::filesystem::create_directories(dir);
  auto table = open_csv(dir / "sweep.csv",
                        "vues,d_exp,policy,seeds,sum_satisfaction_mean,sum_satisfaction_std,latency_ms_mean,"
                        "latency_ms_std,violation_rate_mean,violation_rate_std");
  auto longf = open_csv(dir / "sweep_long.csv", "vues,d_exp,policy,seed,metric,value");
  for (const auto& cell : cells) {
    std::vector<double> sat, lat, viol;
    for (std::size_t s = 0; s < cell.runs.size(); ++s) {
      const auto& r = cell.runs[s];
      sat.push_back(r.mean_sum_satisfaction);
      lat.push_back(r.mean_latency_ms);
      viol.push_back(r.violation_rate);
      for (const auto& [metric, value] : {std::pair{"sum_satisfaction", r.mean_sum_satisfaction},
                                          std::pair{"latency_ms", r.mean_latency_ms},
                                          std::pair{"violation_rate", r.violation_rate}})
        longf << cell.vues << ',' << cell.d_exp << ',' << r.policy << ',' << s << ',' << metric << ',' << value
              << '\n';
    }
    const std::string policy = cell.runs.empty() ? "" : cell.runs.front().policy;
    table << cell.vues << ',' << cell.d_exp << ',' << policy << ',' << cell.runs.size() << ',' << mean(sat) << ','
          << stddev(sat) << ',' << mean(lat) << ',' << stddev(lat) << ',' << mean(viol) << ',' << stddev(viol)
          << '\n';
  }
}

nlohmann::json run_manifest(const ExperimentConfig& cfg, const std::string& command) {
  return {{"schema_version", kMetricsSchemaVersion},
          {"command", command},
          {"run_id", cfg.run_id},
          {"seed", cfg.seed},
          {"config", to_json(cfg)},
          {"versions",
           {{"fogperc", "1.0.0"},
            {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                          std::to_string(EIGEN_MINOR_VERSION)},
            {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_PATCH)}}}};
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double stddev(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

}  // namespace fogperc
