#include "fogperc/marl.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "fogperc/error.hpp"

namespace fogperc {

namespace {

constexpr const char* kCheckpointMagic = "fogperc-checkpoint";
constexpr std::uint64_t kCheckpointVersion = 1;

void check_joint(const Matrix& x, int input_dim, int agents) {
  if (x.rows() != input_dim || x.cols() == 0 || x.cols() % agents != 0)
    throw ShapeError("critic input must be input_dim x (agents * batch)");
}

std::vector<ParamRef> concat(std::vector<ParamRef> a, const std::vector<ParamRef>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

AttentionCritic::AttentionCritic(int input_dim, int agents, int agent, const TrainingConfig& cfg, Rng& rng,
                                 Activation hidden)
    : input_dim_(input_dim), agents_(agents), agent_(agent), embed_dim_(cfg.embed_dim) {
  if (agents < 1 || agent < 0 || agent >= agents) throw ShapeError("critic agent index out of range");
  const int nets = cfg.shared_embedding ? 1 : agents;
  for (int j = 0; j < nets; ++j) embeddings_.emplace_back(std::vector<int>{input_dim, cfg.embed_dim},
                                                          std::vector<Activation>{hidden}, rng);
  attention_ = AttentionBlock(cfg.embed_dim, cfg.attention_dim, cfg.embed_dim, rng);
  head_ = DenseNet({2 * cfg.embed_dim, cfg.critic_hidden, 1}, {hidden, Activation::kLinear}, rng);
}

Matrix AttentionCritic::embed(const Matrix& x, bool cache) {
  if (!cache) return embed_const(x);
  if (embeddings_.size() == 1) return embeddings_[0].forward(x);
  const Eigen::Index batch = x.cols() / agents_;
  Matrix e(embed_dim_, x.cols());
  for (int j = 0; j < agents_; ++j) e.middleCols(j * batch, batch) = embeddings_[j].forward(x.middleCols(j * batch, batch));
  return e;
}

Matrix AttentionCritic::embed_const(const Matrix& x) const {
  if (embeddings_.size() == 1) return embeddings_[0].predict(x);
  const Eigen::Index batch = x.cols() / agents_;
  Matrix e(embed_dim_, x.cols());
  for (int j = 0; j < agents_; ++j) e.middleCols(j * batch, batch) = embeddings_[j].predict(x.middleCols(j * batch, batch));
  return e;
}

Matrix AttentionCritic::head_input(const Matrix& e, const Matrix& values) const {
  const Eigen::Index batch = values.cols();
  Matrix z(e.rows() + values.rows(), batch);
  z.topRows(e.rows()) = e.middleCols(agent_ * batch, batch);
  z.bottomRows(values.rows()) = values;
  return z;
}

Matrix AttentionCritic::forward(const Matrix& x) {
  check_joint(x, input_dim_, agents_);
  const Matrix e = embed(x, true);
  const auto att = attention_.forward(e, agents_, agent_);
  cached_batch_ = static_cast<int>(att.values.cols());
  return head_.forward(head_input(e, att.values));
}

Matrix AttentionCritic::predict(const Matrix& x) const {
  check_joint(x, input_dim_, agents_);
  const Matrix e = embed_const(x);
  const auto att = attention_.predict(e, agents_, agent_);
  return head_.predict(head_input(e, att.values));
}

Matrix AttentionCritic::attention_weights(const Matrix& x) const {
  check_joint(x, input_dim_, agents_);
  return attention_.predict(embed_const(x), agents_, agent_).weights;
}

Matrix AttentionCritic::backward(const Matrix& upstream) {
  if (cached_batch_ < 0) throw NotReadyError("critic backward without a cached forward pass");
  const Eigen::Index batch = cached_batch_;
  const Matrix dz = head_.backward(upstream);
  Matrix de = attention_.backward(dz.bottomRows(dz.rows() - embed_dim_));
  de.middleCols(agent_ * batch, batch) += dz.topRows(embed_dim_);
  if (embeddings_.size() == 1) return embeddings_[0].backward(de);
  Matrix dx(input_dim_, de.cols());
  for (int j = 0; j < agents_; ++j)
    dx.middleCols(j * batch, batch) = embeddings_[j].backward(de.middleCols(j * batch, batch));
  return dx;
}

void AttentionCritic::zero_grad() {
  for (auto& g : embeddings_) g.zero_grad();
  attention_.zero_grad();
  head_.zero_grad();
}

std::vector<ParamRef> AttentionCritic::params() {
  std::vector<ParamRef> out;
  for (auto& g : embeddings_) out = concat(std::move(out), g.params());
  out = concat(std::move(out), attention_.params());
  return concat(std::move(out), head_.params());
}

void AttentionCritic::save(BinaryWriter& w) const {
  w.u64(embeddings_.size());
  for (const auto& g : embeddings_) g.save(w);
  attention_.save(w);
  head_.save(w);
}

void AttentionCritic::load(BinaryReader& r) {
  r.expect(embeddings_.size(), "embedding net count");
  for (auto& g : embeddings_) g.load(r);
  attention_.load(r);
  head_.load(r);
  cached_batch_ = -1;
}

DenseNet make_actor(int obs_dim, int act_dim, int hidden, Rng& rng) {
  return DenseNet({obs_dim, hidden, hidden, act_dim}, {Activation::kRelu, Activation::kRelu, Activation::kTanh}, rng);
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("replay capacity must be positive");
}

void ReplayBuffer::push(Experience e) {
  if (data_.size() < capacity_) {
    data_.push_back(std::move(e));
    cursor_ = data_.size() % capacity_;
  } else {
    data_[cursor_] = std::move(e);
    cursor_ = (cursor_ + 1) % capacity_;
  }
}

Experience& ReplayBuffer::latest() {
  if (data_.empty()) throw NotReadyError("replay buffer is empty");
  return data_[(cursor_ + capacity_ - 1) % capacity_ % data_.size()];
}

std::vector<std::size_t> ReplayBuffer::sample(std::size_t batch, Rng& rng) const {
  if (data_.empty()) throw NotReadyError("sampling from an empty replay buffer");
  std::vector<std::size_t> idx(batch);
  for (auto& i : idx) i = rng.index(data_.size());
  return idx;
}

void ReplayBuffer::save(BinaryWriter& w) const {
  w.u64(capacity_);
  w.u64(cursor_);
  w.u64(data_.size());
  for (const auto& e : data_) {
    w.matrix(e.state);
    w.matrix(e.action);
    w.f64(e.reward);
    w.matrix(e.next_state);
    w.matrix(e.next_action);
    w.u64(e.terminal ? 1 : 0);
  }
}

void ReplayBuffer::load(BinaryReader& r) {
  r.expect(capacity_, "replay capacity");
  cursor_ = r.u64();
  const auto n = r.u64();
  data_.clear();
  data_.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    Experience e;
    e.state = r.matrix();
    e.action = r.matrix();
    e.reward = r.f64();
    e.next_state = r.matrix();
    e.next_action = r.matrix();
    e.terminal = r.u64() != 0;
    data_.push_back(std::move(e));
  }
}

Maddpg::Maddpg(const ObservationLayout& layout, int agents, const TrainingConfig& cfg, Rng& init)
    : cfg_(cfg), obs_dim_(layout.obs_dim()), act_dim_(layout.act_dim()), nodes_(layout.nodes) {
  for (int k = 0; k < agents; ++k) {
    actors_.push_back(make_actor(obs_dim_, act_dim_, cfg.actor_hidden, init));
    critics_.emplace_back(obs_dim_ + act_dim_, agents, k, cfg, init);
    actor_opts_.emplace_back(cfg.lr_actor);
    critic_opts_.emplace_back(cfg.lr_critic);
  }
  target_actors_ = actors_;
  target_critics_ = critics_;
}

Matrix Maddpg::act(const Matrix& states) const {
  if (states.rows() != obs_dim_ || states.cols() != agents()) throw ShapeError("states must be obs_dim x agents");
  Matrix a(act_dim_, agents());
  for (int k = 0; k < agents(); ++k) a.col(k) = actors_[k].predict(states.col(k));
  return a;
}

Matrix Maddpg::explore(const Matrix& states, double noise, Rng& rng) const {
  Matrix a = act(states);
  const double rho = cfg_.noise_correlation;
  const double own = std::sqrt(1.0 - rho * rho);
  for (Eigen::Index c = 0; c < a.cols(); ++c) {
    const double shared = rho > 0.0 ? rng.normal() : 0.0;
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
      const double z = r < nodes_ ? rng.normal() : rho * shared + own * rng.normal();
      a(r, c) = std::clamp(a(r, c) + noise * z, -1.0, 1.0);
    }
  }
  return a;
}

Matrix Maddpg::joint_input(const std::vector<const Matrix*>& states, const std::vector<const Matrix*>& actions) const {
  const Eigen::Index batch = static_cast<Eigen::Index>(states.size());
  Matrix x(obs_dim_ + act_dim_, agents() * batch);
  for (int j = 0; j < agents(); ++j)
    for (Eigen::Index b = 0; b < batch; ++b) {
      x.block(0, j * batch + b, obs_dim_, 1) = states[b]->col(j);
      x.block(obs_dim_, j * batch + b, act_dim_, 1) = actions[b]->col(j);
    }
  return x;
}

double Maddpg::critic_update(int k, const std::vector<const Experience*>& batch) {
  if (batch.empty()) throw NotReadyError("empty training batch");
  const Eigen::Index n = static_cast<Eigen::Index>(batch.size());
  std::vector<const Matrix*> s, a, s2;
  for (const auto* e : batch) {
    s.push_back(&e->state);
    a.push_back(&e->action);
    s2.push_back(&e->next_state);
  }
  Matrix x2(obs_dim_ + act_dim_, agents() * n);
  for (int j = 0; j < agents(); ++j) {
    Matrix sj(obs_dim_, n);
    for (Eigen::Index b = 0; b < n; ++b) sj.col(b) = s2[b]->col(j);
    Matrix aj = target_actors_[j].predict(sj);
    if (cfg_.target_policy == TargetPolicy::kStoredNextActions)
      for (Eigen::Index b = 0; b < n; ++b)
        if (batch[b]->next_action.size() > 0) aj.col(b) = batch[b]->next_action.col(j);
    x2.block(0, j * n, obs_dim_, n) = sj;
    x2.block(obs_dim_, j * n, act_dim_, n) = aj;
  }
  const Matrix q_next = target_critics_[k].predict(x2);
  Matrix y(1, n);
  for (Eigen::Index b = 0; b < n; ++b)
    y(0, b) = batch[b]->reward + (batch[b]->terminal ? 0.0 : cfg_.gamma * q_next(0, b));

  AttentionCritic& critic = critics_[k];
  const Matrix q = critic.forward(joint_input(s, a));
  const Matrix diff = q - y;
  critic.zero_grad();
  critic.backward(2.0 * diff / static_cast<double>(n));
  critic_opts_[k].step(critic.params());
  return diff.squaredNorm() / static_cast<double>(n);
}

double Maddpg::actor_update(int k, const std::vector<const Experience*>& batch) {
  if (batch.empty()) throw NotReadyError("empty training batch");
  const Eigen::Index n = static_cast<Eigen::Index>(batch.size());
  std::vector<const Matrix*> s, a;
  Matrix sk(obs_dim_, n);
  for (Eigen::Index b = 0; b < n; ++b) {
    s.push_back(&batch[b]->state);
    a.push_back(&batch[b]->action);
    sk.col(b) = batch[b]->state.col(k);
  }
  DenseNet& actor = actors_[k];
  const Matrix ak = actor.forward(sk);
  Matrix x = joint_input(s, a);
  x.block(obs_dim_, k * n, act_dim_, n) = ak;

  AttentionCritic& critic = critics_[k];
  critic.forward(x);
  critic.zero_grad();
  const Matrix dx = critic.backward(Matrix::Constant(1, n, -1.0 / static_cast<double>(n)));
  critic.zero_grad();

  actor.zero_grad();
  const Matrix reg = (2.0 * cfg_.action_reg / static_cast<double>(n)) * actor.output_preactivation();
  actor.backward(dx.block(obs_dim_, k * n, act_dim_, n), reg);
  const double norm = gradient_norm(actor.params());
  actor_opts_[k].step(actor.params());
  return norm;
}

void Maddpg::update_targets(int k) {
  soft_update(target_actors_[k].params(), actors_[k].params(), cfg_.soft_update);
  soft_update(target_critics_[k].params(), critics_[k].params(), cfg_.soft_update);
}

void Maddpg::save(BinaryWriter& w) const {
  w.u64(actors_.size());
  for (int k = 0; k < agents(); ++k) {
    actors_[k].save(w);
    target_actors_[k].save(w);
    critics_[k].save(w);
    target_critics_[k].save(w);
    actor_opts_[k].save(w);
    critic_opts_[k].save(w);
  }
}

void Maddpg::load(BinaryReader& r) {
  r.expect(actors_.size(), "agent count");
  for (int k = 0; k < agents(); ++k) {
    actors_[k].load(r);
    target_actors_[k].load(r);
    critics_[k].load(r);
    target_critics_[k].load(r);
    actor_opts_[k].load(r);
    critic_opts_[k].load(r);
  }
}

std::uint64_t episode_seed(std::uint64_t root, int episode) {
  return stream_seed(root, "episode", static_cast<std::uint64_t>(episode));
}

Trainer::Trainer(const ExperimentConfig& cfg)
    : cfg_(cfg),
      layout_(ObservationLayout::from(cfg.scenario)),
      streams_(cfg.seed),
      learners_(layout_, cfg.scenario.num_vues, cfg.training, streams_.init),
      buffer_(static_cast<std::size_t>(cfg.training.buffer_capacity)) {
  cfg_.validate();
}

double Trainer::noise_at(int episode) const {
  const int total = cfg_.training.episodes;
  if (total <= 1) return cfg_.training.noise_start;
  const double frac = std::min(1.0, static_cast<double>(episode) / (total - 1));
  return cfg_.training.noise_start + frac * (cfg_.training.noise_end - cfg_.training.noise_start);
}

std::vector<Decision> Trainer::decide(const Environment& env) const {
  const Matrix a = learners_.act(env.observations());
  std::vector<Decision> out;
  for (int k = 0; k < a.cols(); ++k) out.push_back(decode_action(a.col(k), env.world(), k, layout_));
  return out;
}

EpisodeLog Trainer::run_episode() {
  const auto& tc = cfg_.training;
  const int e = episodes_done();
  Environment env(cfg_, episode_seed(cfg_.seed, e));
  EpisodeLog log;
  log.episode = e;
  log.noise = noise_at(e);
  const std::size_t warmup = static_cast<std::size_t>(tc.warmup > 0 ? tc.warmup : tc.batch_size);
  const int k_count = cfg_.scenario.num_vues;

  Matrix obs = env.observations();
  bool chained = false;  // latest buffer entry is from this episode and awaits its next action
  int steps = 0;
  while (!env.done()) {
    const Matrix a = learners_.explore(obs, log.noise, streams_.exploration);
    if (chained && tc.target_policy == TargetPolicy::kStoredNextActions) buffer_.latest().next_action = a;
    std::vector<Decision> decisions;
    for (int k = 0; k < k_count; ++k) decisions.push_back(decode_action(a.col(k), env.world(), k, layout_));

    const StepResult r = env.step(decisions);
    if (observer_) observer_(e, r);
    Matrix next = env.observations();
    buffer_.push({obs, a, r.reward * tc.reward_scale, next, Matrix{}, env.done()});
    chained = true;
    ++steps;
    ++env_steps_;

    log.reward += r.reward;
    log.sum_satisfaction += r.outcome.sum_satisfaction;
    log.penalty += r.penalty;
    log.latency_violations += r.latency_violations;
    for (const auto& v : r.outcome.violations)
      if (v.constraint != Constraint::kLatency) ++log.other_violations;

    if (buffer_.size() >= warmup && env_steps_ % tc.update_every == 0) {
      const auto idx = buffer_.sample(static_cast<std::size_t>(tc.batch_size), streams_.replay);
      std::vector<const Experience*> batch;
      for (auto i : idx) batch.push_back(&buffer_.at(i));
      double loss = 0.0, norm = 0.0;
      for (int k = 0; k < k_count; ++k) loss += learners_.critic_update(k, batch);
      for (int k = 0; k < k_count; ++k) norm += learners_.actor_update(k, batch);
      for (int k = 0; k < k_count; ++k) learners_.update_targets(k);
      log.critic_loss += loss / k_count;
      log.actor_grad_norm += norm / k_count;
      ++log.updates;
    }
    obs = std::move(next);
  }
  if (log.updates > 0) {
    log.critic_loss /= log.updates;
    log.actor_grad_norm /= log.updates;
  }
  log.violation_rate = static_cast<double>(log.latency_violations) / (static_cast<double>(k_count) * steps);
  history_.push_back(log);
  return log;
}

void Trainer::train(const std::function<void(const EpisodeLog&)>& on_episode) {
  while (episodes_done() < cfg_.training.episodes) {
    const EpisodeLog log = run_episode();
    if (on_episode) on_episode(log);
  }
}

void Trainer::save_checkpoint(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  BinaryWriter w(out);
  w.str(kCheckpointMagic);
  w.u64(kCheckpointVersion);
  w.u64(cfg_.seed);
  w.u64(static_cast<std::uint64_t>(cfg_.scenario.num_vues));
  w.i64(env_steps_);
  w.u64(history_.size());
  for (const auto& h : history_) {
    w.i64(h.episode);
    for (double v : {h.reward, h.sum_satisfaction, h.penalty, h.violation_rate, h.critic_loss, h.actor_grad_norm,
                     h.noise})
      w.f64(v);
    w.i64(h.latency_violations);
    w.i64(h.other_violations);
    w.i64(h.updates);
  }
  w.str(streams_.exploration.state());
  w.str(streams_.replay.state());
  w.str(streams_.init.state());
  learners_.save(w);
  buffer_.save(w);
  if (!out) throw std::runtime_error("failed writing checkpoint " + path.string());
}

void Trainer::load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read checkpoint " + path.string());
  BinaryReader r(in);
  if (r.str() != kCheckpointMagic) throw std::runtime_error("not a checkpoint file: " + path.string());
  r.expect(kCheckpointVersion, "checkpoint version");
  r.expect(cfg_.seed, "seed");
  r.expect(static_cast<std::uint64_t>(cfg_.scenario.num_vues), "agent count");
  env_steps_ = r.i64();
  const auto n = r.u64();
  history_.clear();
  for (std::uint64_t i = 0; i < n; ++i) {
    EpisodeLog h;
    h.episode = static_cast<int>(r.i64());
    for (double* v : {&h.reward, &h.sum_satisfaction, &h.penalty, &h.violation_rate, &h.critic_loss,
                      &h.actor_grad_norm, &h.noise})
      *v = r.f64();
    h.latency_violations = static_cast<int>(r.i64());
    h.other_violations = static_cast<int>(r.i64());
    h.updates = static_cast<int>(r.i64());
    history_.push_back(h);
  }
  streams_.exploration.set_state(r.str());
  streams_.replay.set_state(r.str());
  streams_.init.set_state(r.str());
  learners_.load(r);
  buffer_.load(r);
}

void write_learning_curve(const std::filesystem::path& path, const std::vector<EpisodeLog>& history) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "episode,reward,sum_satisfaction,penalty,latency_violations,other_violations,violation_rate,"
         "critic_loss,actor_grad_norm,noise,updates\n";
  out.precision(17);
  for (const auto& h : history)
    out << h.episode << ',' << h.reward << ',' << h.sum_satisfaction << ',' << h.penalty << ','
        << h.latency_violations << ',' << h.other_violations << ',' << h.violation_rate << ',' << h.critic_loss
        << ',' << h.actor_grad_norm << ',' << h.noise << ',' << h.updates << '\n';
}

}  // namespace fogperc
