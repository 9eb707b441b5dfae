// Acceptance runner: prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "fogperc/alloc.hpp"
#include "fogperc/harness.hpp"
#include "fogperc/marl.hpp"
#include "fogperc/neural.hpp"
#include "fogperc/radio.hpp"
#include "fogperc/world.hpp"
#include "gradcheck.hpp"

using namespace fogperc;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Result {
  int id;
  std::string name;
  bool pass;
  std::string detail;
};

std::vector<Result> g_results;
int g_other_violations = 0;  // (8b)-(8e) violations seen in any run

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  g_results.push_back({id, name, pass, detail});
  std::cout << (pass ? "PASS" : "FAIL") << " [" << id << "] " << name << ": " << detail << std::endl;
}

void info(const std::string& text) { std::cout << "     " << text << std::endl; }

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s << std::setprecision(precision) << v;
  return s.str();
}

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

void count_violations(const RunSummary& s) { g_other_violations += s.other_violations; }

Matrix random_matrix(int rows, int cols, Rng& rng, double scale = 1.0) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-scale, scale);
  return m;
}

// ---------------------------------------------------------------- 1, 2, 4

void matching_and_frequency(const ExperimentConfig& base) {
  ExperimentConfig cfg = base;
  cfg.oracle.instances = 200;
  cfg.oracle.max_size = 6;
  cfg.oracle.freq_instances = 100;
  cfg.oracle.freq_resolution = 1e-3;
  const auto t0 = Clock::now();
  const OracleReport r = run_oracles(cfg);
  const double secs = seconds_since(t0);

  report(1, "swap matching convergence", r.max_swaps() <= 10 && r.median_swaps() <= 5,
         std::to_string(r.swap_rows.size()) + " instances (K = S in {4,6,8}), max swaps " +
             std::to_string(r.max_swaps()) + ", median " + fmt(r.median_swaps()));

  double worst = 0.0;
  for (const auto& row : r.optimal_rows) worst = std::max(worst, row.proposed / row.optimal - 1.0);
  report(2, "matching near-optimality", r.within_10pct_fraction() >= 0.9 && r.never_below_optimum(),
         std::to_string(r.optimal_rows.size()) + " instances (K = S <= 6), within 10%: " +
             fmt(100.0 * r.within_10pct_fraction()) + "%, never below optimum: " +
             (r.never_below_optimum() ? "yes" : "no") + ", worst gap " + fmt(100.0 * worst) + "%");

  double stat = 0.0, gap = 0.0, slack = 0.0, budget = 0.0, cap = 0.0;
  for (const auto& row : r.freq_rows) {
    stat = std::max(stat, row.stationarity);
    gap = std::max(gap, (row.grid_objective - row.kkt_objective) / row.kkt_objective);
    slack = std::max(slack, (row.grid_objective - row.neighbor_objective) / row.neighbor_objective);
    budget = std::max(budget, row.budget_excess);
    cap = std::max(cap, row.cap_excess);
  }
  report(4, "frequency allocator vs grid oracle",
         r.freq_objective_ok() && r.freq_feasible_ok() && r.freq_stationary_ok(),
         std::to_string(r.freq_rows.size()) + " instances at resolution " + fmt(cfg.oracle.freq_resolution) +
             ", KKT <= grid optimum <= KKT rounded to the grid (worst relative grid-minus-KKT gap " + fmt(gap) +
             ", worst excess over the rounded KKT point " + fmt(slack) + "), budget excess " + fmt(budget) +
             ", cap excess " + fmt(cap) + ", stationarity " + fmt(stat) + " (oracle time " + fmt(secs, 3) + " s)");
}

// ---------------------------------------------------------------- 3

void bottleneck_vs_sum_rate(const ExperimentConfig& base) {
  const auto t0 = Clock::now();
  std::vector<double> gaps;
  bool each_ok = true;
  std::string detail;
  for (int k : {6, 8, 10}) {
    ExperimentConfig cfg = base;
    cfg.scenario.num_vues = k;
    cfg.validate();
    const auto seeds = evaluation_seeds(cfg.seed, 20);
    const RunSummary prop = run_baseline_distance_full(cfg, seeds);
    const RunSummary msr = run_baseline_maxsumrate(cfg, seeds);
    count_violations(prop);
    count_violations(msr);
    const double gap = msr.mean_latency_ms - prop.mean_latency_ms;
    gaps.push_back(gap);
    each_ok = each_ok && prop.mean_latency_ms <= msr.mean_latency_ms;
    detail += "K=" + std::to_string(k) + ": " + fmt(prop.mean_latency_ms) + " vs " + fmt(msr.mean_latency_ms) +
              " ms (gap " + fmt(gap) + "); ";
  }
  const bool monotone = gaps[0] <= gaps[1] && gaps[1] <= gaps[2];
  report(3, "bottleneck matching vs max-sum-rate", each_ok && monotone,
         detail + "gap non-decreasing: " + (monotone ? "yes" : "no") + " (" + fmt(seconds_since(t0), 3) + " s)");
}

// ---------------------------------------------------------------- 5

struct GradTally {
  long checks = 0;
  long failed = 0;
  double worst = 0.0;
  void add(const Matrix& analytic, Matrix& x, const std::function<double()>& loss) {
    const double h = 1e-5;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double saved = x.data()[i];
      x.data()[i] = saved + h;
      const double up = loss();
      x.data()[i] = saved - h;
      const double down = loss();
      x.data()[i] = saved;
      const double err = fogperc::testing::relative_error(analytic.data()[i], (up - down) / (2 * h));
      worst = std::max(worst, err);
      ++checks;
      if (err > 1e-4) ++failed;
    }
  }
  void add_params(const std::vector<ParamRef>& params, const std::function<double()>& loss) {
    for (const auto& p : params) {
      const Matrix analytic = *p.grad;
      add(analytic, *p.value, loss);
    }
  }
};

void gradient_integrity() {
  using fogperc::testing::probe;
  GradTally dense, attention, critic, actor;
  Rng rng(2024);

  for (Activation act : {Activation::kLinear, Activation::kRelu, Activation::kTanh})
    for (int rep = 0; rep < 3; ++rep) {
      DenseNet net({5, 7, 6, 3}, {act, act, Activation::kTanh}, rng);
      Matrix x = random_matrix(5, 6, rng);
      const Matrix w = random_matrix(3, 6, rng);
      net.zero_grad();
      net.forward(x);
      const Matrix dx = net.backward(w);
      auto loss = [&] { return probe(w, net.predict(x)); };
      dense.add_params(net.params(), loss);
      dense.add(dx, x, loss);
    }

  for (int rep = 0; rep < 5; ++rep) {
    const int agents = 2 + rep;
    AttentionBlock att(6, 4, 5, rng);
    Matrix e = random_matrix(6, agents * 3, rng);
    const Matrix w = random_matrix(5, 3, rng);
    const int agent = rep % agents;
    att.zero_grad();
    att.forward(e, agents, agent);
    const Matrix de = att.backward(w);
    auto loss = [&] { return probe(w, att.predict(e, agents, agent).values); };
    attention.add_params(att.params(), loss);
    attention.add(de, e, loss);
  }

  TrainingConfig tc;
  tc.embed_dim = 8;
  tc.attention_dim = 4;
  tc.critic_hidden = 10;
  for (bool shared : {true, false})
    for (Activation act : {Activation::kRelu, Activation::kTanh}) {
      tc.shared_embedding = shared;
      const int agents = 4, batch = 3, in = 6;
      AttentionCritic c(in, agents, 1, tc, rng, act);
      Matrix x = random_matrix(in, agents * batch, rng);
      const Matrix w = random_matrix(1, batch, rng);
      c.zero_grad();
      c.forward(x);
      const Matrix dx = c.backward(w);
      auto loss = [&] { return probe(w, c.predict(x)); };
      critic.add_params(c.params(), loss);
      critic.add(dx, x, loss);
    }

  // Actor parameters through the critic, including the pre-activation penalty.
  ExperimentConfig ec;
  ec.scenario.num_vues = 3;
  ec.training.actor_hidden = 8;
  ec.training.critic_hidden = 8;
  ec.training.embed_dim = 6;
  ec.training.attention_dim = 4;
  ec.training.action_reg = 0.05;
  const auto layout = ObservationLayout::from(ec.scenario);
  for (int k = 0; k < 3; ++k) {
    Maddpg m(layout, 3, ec.training, rng);
    std::vector<Experience> batch(4);
    for (auto& e : batch) {
      e.state = random_matrix(m.obs_dim(), 3, rng);
      e.action = random_matrix(m.act_dim(), 3, rng);
      e.next_state = e.state;
    }
    std::vector<const Experience*> ptrs;
    for (const auto& e : batch) ptrs.push_back(&e);
    Maddpg probe_copy = m;
    m.actor_update(k, ptrs);
    std::vector<Matrix> analytic;
    for (const auto& p : m.actor(k).params()) analytic.push_back(*p.grad);
    const int n = static_cast<int>(batch.size());
    auto loss = [&] {
      std::vector<const Matrix*> s, a;
      Matrix sk(probe_copy.obs_dim(), n);
      for (int b = 0; b < n; ++b) {
        s.push_back(&batch[b].state);
        a.push_back(&batch[b].action);
        sk.col(b) = batch[b].state.col(k);
      }
      DenseNet net = probe_copy.actor(k);
      const Matrix ak = net.forward(sk);
      Matrix x = probe_copy.joint_input(s, a);
      x.block(probe_copy.obs_dim(), k * n, probe_copy.act_dim(), n) = ak;
      return -probe_copy.critic(k).predict(x).mean() +
             ec.training.action_reg / n * net.output_preactivation().squaredNorm();
    };
    const auto params = probe_copy.actor(k).params();
    for (std::size_t i = 0; i < params.size(); ++i) actor.add(analytic[i], *params[i].value, loss);
  }

  const long checks = dense.checks + attention.checks + critic.checks + actor.checks;
  const long failed = dense.failed + attention.failed + critic.failed + actor.failed;
  report(5, "gradient integrity", failed == 0,
         std::to_string(checks - failed) + "/" + std::to_string(checks) +
             " finite-difference checks within 1e-4 (worst relative error: dense " + fmt(dense.worst, 3) +
             ", attention " + fmt(attention.worst, 3) + ", critic " + fmt(critic.worst, 3) +
             ", actor-through-critic " + fmt(actor.worst, 3) + ")");
}

// ---------------------------------------------------------------- 6

void attention_normalisation() {
  Rng rng(77);
  double worst = 0.0;
  int evaluations = 0;
  for (int block = 0; block < 100; ++block) {
    AttentionBlock att(8, 6, 8, rng);
    for (int i = 0; i < 100; ++i) {
      const int agents = 2 + static_cast<int>(rng.index(7));
      const int agent = static_cast<int>(rng.index(agents));
      const auto out = att.predict(random_matrix(8, agents, rng, 4.0), agents, agent);
      worst = std::max(worst, std::abs(out.weights.col(0).sum() - 1.0));
      ++evaluations;
    }
  }

  TrainingConfig tc;
  tc.embed_dim = 8;
  tc.attention_dim = 6;
  tc.critic_hidden = 12;
  int trials = 0, mismatches = 0;
  for (int rep = 0; rep < 200; ++rep) {
    const int agents = 2 + rep % 7, batch = 4, in = 7;
    const int agent = rep % agents;
    AttentionCritic critic(in, agents, agent, tc, rng);
    const Matrix x = random_matrix(in, agents * batch, rng);
    std::vector<int> perm;
    for (int j = 0; j < agents; ++j)
      if (j != agent) perm.push_back(j);
    for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[rng.index(i)]);
    Matrix y = x;
    int slot = 0;
    for (int j = 0; j < agents; ++j) {
      if (j == agent) continue;
      y.middleCols(j * batch, batch) = x.middleCols(perm[slot++] * batch, batch);
    }
    const Matrix q1 = critic.predict(x), q2 = critic.predict(y);
    ++trials;
    if (q1 != q2) ++mismatches;
  }
  report(6, "attention normalisation and permutation invariance", worst <= 1e-9 && mismatches == 0,
         std::to_string(evaluations) + " evaluations, worst |sum alpha - 1| = " + fmt(worst, 3) + "; " +
             std::to_string(trials - mismatches) + "/" + std::to_string(trials) +
             " permuted critic inputs give bit-identical Q");
}

// ---------------------------------------------------------------- 7, 10

struct LearningOutcome {
  std::vector<double> first_quartile_violation, last_quartile_violation;
};

LearningOutcome learning_effectiveness(const ExperimentConfig& base, const fs::path& out) {
  const auto t0 = Clock::now();
  const int seeds = 5;
  const int episodes = base.training.episodes;
  const int window = std::max(1, episodes / 10);
  const int quartile = std::max(1, episodes / 4);
  std::vector<double> trained, distance, random, pooled;
  LearningOutcome lo;
  for (int i = 0; i < seeds; ++i) {
    ExperimentConfig cfg = base;
    cfg.seed = base.seed + static_cast<std::uint64_t>(i);
    cfg.run_id = "learning-" + std::to_string(i);
    const auto ts = Clock::now();
    Trainer trainer(cfg);
    {
      MetricsWriter writer(out / ("seed_" + std::to_string(i)), cfg.run_id);
      run_proposed(trainer, &writer);
    }
    write_learning_curve(out / ("seed_" + std::to_string(i)) / "learning_curve.csv", trainer.history());
    const auto& h = trainer.history();
    std::vector<double> fin, v_first, v_last;
    for (int e = episodes - window; e < episodes; ++e) {
      fin.push_back(h[e].sum_satisfaction);
      pooled.push_back(h[e].sum_satisfaction);
    }
    for (const auto& log : h) g_other_violations += log.other_violations;
    for (int e = 0; e < quartile; ++e) v_first.push_back(h[e].violation_rate);
    for (int e = episodes - quartile; e < episodes; ++e) v_last.push_back(h[e].violation_rate);
    lo.first_quartile_violation.push_back(mean(v_first));
    lo.last_quartile_violation.push_back(mean(v_last));

    const auto final_seeds = training_seeds(cfg.seed, episodes - window, window);
    const RunSummary d = run_baseline_distance_full(cfg, final_seeds);
    const RunSummary r = run_random_policy(cfg, final_seeds);
    count_violations(d);
    count_violations(r);
    trained.push_back(mean(fin));
    distance.push_back(d.mean_sum_satisfaction);
    random.push_back(r.mean_sum_satisfaction);
    info("seed " + std::to_string(cfg.seed) + ": final-10% trained " + fmt(trained.back()) + ", distance-full " +
         fmt(distance.back()) + ", random " + fmt(random.back()) + " (" + fmt(seconds_since(ts), 3) + " s)");
  }
  const double secs = seconds_since(t0);
  const double m_trained = mean(trained), m_dist = mean(distance), m_rand = mean(random);
  auto margin = [](double value, double baseline) { return (value - baseline) / std::abs(baseline); };
  const double seed_std = stddev(trained);
  const bool beats_distance = margin(m_trained, m_dist) >= 0.05;
  const bool beats_random = margin(m_trained, m_rand) >= 0.05;
  const bool stable = m_trained > 0.0 && seed_std < 0.2 * m_trained;
  const bool in_time = secs <= 1800.0;
  report(7, "learning effectiveness", beats_distance && beats_random && stable && in_time,
         "final-10% mean " + fmt(m_trained) + " vs distance-full " + fmt(m_dist) + " (" +
             fmt(100.0 * margin(m_trained, m_dist), 3) + "%, need >= 5%) and random " + fmt(m_rand) + " (" +
             fmt(100.0 * margin(m_trained, m_rand), 3) + "%); std across seeds " + fmt(seed_std) + " (" +
             fmt(m_trained != 0.0 ? 100.0 * seed_std / std::abs(m_trained) : 0.0, 3) + "% of mean, need < 20%); " +
             std::to_string(seeds) + " seeds x " + std::to_string(episodes) + " episodes in " + fmt(secs, 4) +
             " s (limit 1800)");
  info("pooled per-episode final-10% std " + fmt(stddev(pooled)) + " (" +
       fmt(100.0 * stddev(pooled) / std::abs(mean(pooled)), 3) + "% of mean)");
  return lo;
}

// ---------------------------------------------------------------- 8

struct ExactTally {
  int checks = 0;
  int failed = 0;
  void expect(double got, double want, const std::string& what) {
    ++checks;
    if (std::abs(got - want) > 1e-12 * std::max(1.0, std::abs(want))) {
      ++failed;
      info("mismatch in " + what + ": got " + fmt(got, 17) + ", expected " + fmt(want, 17));
    }
  }
};

void model_oracles() {
  ExactTally t;
  // Temporal value: a deterministic cyclic chain and the linear decay rule.
  {
    const ValueChainModel chain({0.0, 0.5, 1.0}, {{0, 1, 0}, {0, 0, 1}, {1, 0, 0}});
    Rng rng(1);
    int z = 0;
    const double expected[] = {0.5, 1.0, 0.0, 0.5};
    for (double q : expected) {
      z = step_value_chain(chain, z, rng);
      t.expect(chain.level(z), q, "temporal value chain");
    }
    t.expect(temporal_value_linear(1.0, 0.0, 2.5, 10.0), 0.75, "temporal decay");
    t.expect(temporal_value_linear(0.8, 1.0, 20.0, 10.0), 0.0, "temporal decay past deadline");
  }

  // Two VUEs on a 1 km road: VUE 0 at x = 100 in the cloud, VUE 1 at x = 205
  // on the F-AP uploading blocks 20 (q = 1) and 25 (q = 0.5).
  ScenarioConfig sc;
  sc.num_vues = 2;
  World world(sc, 1);
  auto v = world.mutable_vues();
  v[0].position = {100.0, 0.0};
  v[1].position = {205.0, 0.0};
  v[0].tau_max = 0.1;
  v[1].tau_max = 0.12;
  for (auto& u : v) {
    u.heading = {1.0, 0.0};
    u.velocity = 20.0;
  }
  world.set_state(1, 20, 4);
  world.set_state(1, 25, 2);

  // Spatial value of the two uploaded blocks for VUE 0.
  t.expect(world.spatial_value(0, 20), (300.0 - 105.0) / 300.0, "spatial value block 20");
  t.expect(world.spatial_value(0, 25), (300.0 - 155.0) / 300.0, "spatial value block 25");
  t.expect(world.spatiotemporal_value(0, 1, 25), 0.5 * (300.0 - 155.0) / 300.0, "spatiotemporal value");

  Allocation a = Allocation::empty(2, 2, 100, 2);
  a.x.set(0, 0);
  a.x.set(1, 1);
  a.e.set(1, 20);
  a.e.set(1, 25);
  a.a.set(1, 0);
  a.f = {10e9, 5e9};
  RadioConfig radio;
  radio.fronthaul_delay = 0.002;
  const std::vector<double> rates{0.0, 10e6};
  const auto lat = evaluate_latencies(a, world, rates, radio);
  const double bits = sc.block_bits, load = 2 * bits * sc.cycles_per_bit;
  t.expect(lat.comm[1], 2 * bits / 10e6, "communication latency, F-AP uploader");
  t.expect(lat.comm[0], 0.002, "communication latency, cloud without upload");
  t.expect(lat.comp[0], load / 10e9, "computation latency VUE 0");
  t.expect(lat.comp[1], load / 5e9, "computation latency VUE 1");
  t.expect(lat.total[1], 2 * bits / 10e6 + load / 5e9, "total latency VUE 1");
  const double value0 = (300.0 - 105.0) / 300.0 + 0.5 * (300.0 - 155.0) / 300.0;
  t.expect(cooperative_value(0, a, world), value0, "cooperative value VUE 0");
  const SatisfactionWeights wt{1.0, 50.0};
  t.expect(satisfaction(0, a, world, wt, lat.total[0]), value0 + 50.0 * (0.1 - lat.total[0]), "satisfaction VUE 0");
  t.expect(satisfaction(1, a, world, wt, lat.total[1]), 50.0 * (0.12 - lat.total[1]), "satisfaction VUE 1");

  // MMSE against random detectors on small co-channel cloud instances.
  Rng rng(99);
  RadioConfig unit;
  unit.rb_bandwidth = 1.0;
  unit.noise_power = 1.0;
  auto cn = [&rng] { return Complex(rng.normal() / std::sqrt(2.0), rng.normal() / std::sqrt(2.0)); };
  int instances = 0, beaten = 0;
  for (int inst = 0; inst < 20; ++inst) {
    const int users = 2 + inst % 3, rrhs = 2 + inst % 2;
    ChannelState ch(users, 0, rrhs, 1, 0);
    for (int k = 0; k < users; ++k)
      for (int m = 0; m < rrhs; ++m) ch.rrh(k, m, 0) = cn();
    std::vector<double> p;
    for (int k = 0; k < users; ++k) p.push_back(rng.uniform(0.2, 2.0));
    const std::vector<int> rb(static_cast<std::size_t>(users), 0);
    std::vector<int> cluster;
    for (int m = 0; m < rrhs; ++m) cluster.push_back(m);
    const RbOccupancy occ(rb);
    const double mmse = combiner_sinr(0, 0, mmse_detector(0, 0, occ, ch, p, cluster, unit), occ, ch, p, cluster, unit);
    ++instances;
    for (int i = 0; i < 10000; ++i) {
      Eigen::VectorXcd g(rrhs);
      for (int m = 0; m < rrhs; ++m) g[m] = cn();
      if (combiner_sinr(0, 0, g, occ, ch, p, cluster, unit) > mmse * (1 + 1e-12)) {
        ++beaten;
        break;
      }
    }
  }
  report(8, "model-evaluation oracles", t.failed == 0 && beaten == 0,
         std::to_string(t.checks - t.failed) + "/" + std::to_string(t.checks) +
             " scripted two-VUE quantities match hand-computed values; MMSE unbeaten by 10^4 random detectors on " +
             std::to_string(instances - beaten) + "/" + std::to_string(instances) + " instances");
}

// ---------------------------------------------------------------- 9

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + FOGPERC_CLI + "\" " + args + " > /dev/null";
  return std::system(cmd.c_str()) == 0;
}

void determinism(const fs::path& out) {
  const std::string smoke = std::string(FOGPERC_SOURCE_DIR) + "/configs/smoke.ini";
  const fs::path runs[2] = {out / "a", out / "b"};
  bool ran = true;
  for (const auto& dir : runs) {
    fs::remove_all(dir);
    const std::string common = " --config \"" + smoke + "\" --seed 11";
    auto sub = [&](const std::string& name) { return "\"" + (dir / name).string() + "\""; };
    ran = ran && run_cli("train" + common + " --out " + sub("train"));
    ran = ran && run_cli("eval" + common + " --out " + sub("eval") + " --checkpoint " + sub("train/checkpoint.bin"));
    ran = ran && run_cli("sweep" + common + " --out " + sub("sweep"));
    ran = ran && run_cli("oracle-check" + common + " --out " + sub("oracle"));
    ran = ran && run_cli("baseline" + common + " --baseline distance-full --out " + sub("distance"));
    ran = ran && run_cli("baseline" + common + " --baseline max-sum-rate --out " + sub("maxsumrate"));
  }
  int files = 0, differing = 0;
  if (ran)
    for (const auto& entry : fs::recursive_directory_iterator(runs[0])) {
      if (!entry.is_regular_file()) continue;
      const fs::path rel = fs::relative(entry.path(), runs[0]);
      ++files;
      if (!fs::exists(runs[1] / rel) || slurp(entry.path()) != slurp(runs[1] / rel)) {
        ++differing;
        info("differs: " + rel.string());
      }
    }
  report(9, "determinism", ran && files > 0 && differing == 0,
         ran ? std::to_string(files - differing) + "/" + std::to_string(files) +
                   " output files byte-identical across two runs of train, eval, sweep, oracle-check and both baselines"
             : std::string("a command-line run failed"));
}

// ---------------------------------------------------------------- 10

int metrics_file_violations(const fs::path& root, int& files) {
  int total = 0;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file() || entry.path().filename() != "steps.csv") continue;
    ++files;
    std::ifstream in(entry.path());
    std::string line;
    std::getline(in, line);
    std::vector<std::string> header;
    std::stringstream hs(line);
    for (std::string f; std::getline(hs, f, ',');) header.push_back(f);
    std::vector<std::size_t> cols;
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == "block_violations" || header[i] == "mode_violations" || header[i] == "rb_violations" ||
          header[i] == "budget_violations")
        cols.push_back(i);
    while (std::getline(in, line)) {
      std::vector<std::string> fields;
      std::stringstream ss(line);
      for (std::string f; std::getline(ss, f, ',');) fields.push_back(f);
      for (auto c : cols) total += std::stoi(fields.at(c));
    }
  }
  return total;
}

void constraint_soundness(const fs::path& out, const LearningOutcome& lo) {
  int files = 0;
  const int in_files = metrics_file_violations(out, files);
  const double first = mean(lo.first_quartile_violation), last = mean(lo.last_quartile_violation);
  const bool decreasing = last < first;
  report(10, "constraint soundness", g_other_violations == 0 && in_files == 0 && files > 0 && decreasing,
         "block/mode/RB/budget violations: " + std::to_string(g_other_violations) + " in run summaries, " +
             std::to_string(in_files) + " in " + std::to_string(files) +
             " metrics files; latency violation rate first training quartile " + fmt(first) + " -> last " +
             fmt(last) + (decreasing ? " (decreasing)" : " (not decreasing)"));
}

}  // namespace

int main(int argc, char** argv) {
  fs::path out = "acceptance_out";
  fs::path config = fs::path(FOGPERC_SOURCE_DIR) / "configs" / "default.ini";
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string flag = argv[i];
    if (flag == "--out") out = argv[i + 1];
    else if (flag == "--config") config = argv[i + 1];
    else {
      std::cerr << "usage: acceptance [--out DIR] [--config PATH]" << std::endl;
      return 2;
    }
  }
  try {
    fs::remove_all(out);
    fs::create_directories(out);
    const ExperimentConfig cfg = load_config(config);
    const auto t0 = Clock::now();

    matching_and_frequency(cfg);
    bottleneck_vs_sum_rate(cfg);
    gradient_integrity();
    attention_normalisation();
    const LearningOutcome lo = learning_effectiveness(cfg, out / "learning");
    model_oracles();
    determinism(out / "determinism");
    constraint_soundness(out, lo);

    std::sort(g_results.begin(), g_results.end(), [](const Result& a, const Result& b) { return a.id < b.id; });
    int passed = 0;
    std::cout << "\nSummary:" << std::endl;
    for (const auto& r : g_results) {
      std::cout << (r.pass ? "PASS" : "FAIL") << " [" << r.id << "] " << r.name << std::endl;
      passed += r.pass;
    }
    std::cout << passed << "/" << g_results.size() << " criteria passed in " << fmt(seconds_since(t0), 4) << " s"
              << std::endl;
    return passed == static_cast<int>(g_results.size()) ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "acceptance aborted: " << e.what() << std::endl;
    return 3;
  }
}
