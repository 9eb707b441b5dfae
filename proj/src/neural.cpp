#include "fogperc/neural.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fogperc/error.hpp"

namespace fogperc {

namespace {

Matrix uniform_matrix(Eigen::Index rows, Eigen::Index cols, double bound, Rng& rng) {
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = rng.uniform(-bound, bound);
  return m;
}

Matrix activate(const Matrix& z, Activation act) {
  switch (act) {
    case Activation::kRelu: return z.cwiseMax(0.0);
    case Activation::kTanh: return z.array().tanh().matrix();
    case Activation::kLinear: break;
  }
  return z;
}

// d(act)/d(pre) expressed through the post-activation output.
Matrix activation_grad(const Matrix& upstream, const Matrix& output, Activation act) {
  switch (act) {
    case Activation::kRelu: return (output.array() > 0.0).select(upstream, 0.0);
    case Activation::kTanh: return (upstream.array() * (1.0 - output.array().square())).matrix();
    case Activation::kLinear: break;
  }
  return upstream;
}

std::uint64_t activation_code(Activation a) { return static_cast<std::uint64_t>(a); }

}  // namespace

DenseNet::DenseNet(const std::vector<int>& sizes, const std::vector<Activation>& acts, Rng& rng) {
  if (sizes.size() < 2 || acts.size() + 1 != sizes.size()) throw ShapeError("need one activation per layer");
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    if (sizes[i] < 1 || sizes[i + 1] < 1) throw ShapeError("layer sizes must be positive");
    const double bound = 1.0 / std::sqrt(static_cast<double>(sizes[i]));
    Layer l;
    l.weight = uniform_matrix(sizes[i + 1], sizes[i], bound, rng);
    l.bias = uniform_matrix(sizes[i + 1], 1, bound, rng);
    l.act = acts[i];
    l.grad_weight = Matrix::Zero(sizes[i + 1], sizes[i]);
    l.grad_bias = Matrix::Zero(sizes[i + 1], 1);
    layers_.push_back(std::move(l));
  }
}

int DenseNet::input_dim() const { return layers_.empty() ? 0 : static_cast<int>(layers_.front().weight.cols()); }
int DenseNet::output_dim() const { return layers_.empty() ? 0 : static_cast<int>(layers_.back().weight.rows()); }

void DenseNet::check_input(const Matrix& x) const {
  if (layers_.empty()) throw NotReadyError("network has no layers");
  if (x.rows() != input_dim())
    throw ShapeError("input has " + std::to_string(x.rows()) + " rows, network expects " + std::to_string(input_dim()));
}

Matrix DenseNet::forward(const Matrix& x) {
  check_input(x);
  inputs_.clear();
  outputs_.clear();
  Matrix h = x;
  for (const auto& l : layers_) {
    inputs_.push_back(h);
    Matrix z = l.weight * h;
    z.colwise() += l.bias.col(0);
    h = activate(z, l.act);
    outputs_.push_back(h);
  }
  return h;
}

Matrix DenseNet::predict(const Matrix& x) const {
  check_input(x);
  Matrix h = x;
  for (const auto& l : layers_) {
    Matrix z = l.weight * h;
    z.colwise() += l.bias.col(0);
    h = activate(z, l.act);
  }
  return h;
}

Matrix DenseNet::output_preactivation() const {
  if (inputs_.size() != layers_.size() || layers_.empty()) throw NotReadyError("no cached forward pass");
  Matrix z = layers_.back().weight * inputs_.back();
  z.colwise() += layers_.back().bias.col(0);
  return z;
}

Matrix DenseNet::backward(const Matrix& upstream, const Matrix& preact_grad) {
  if (inputs_.size() != layers_.size() || layers_.empty()) throw NotReadyError("backward without a cached forward pass");
  if (upstream.rows() != output_dim() || upstream.cols() != outputs_.back().cols())
    throw ShapeError("upstream gradient shape does not match the last forward output");
  if (preact_grad.size() != 0 && (preact_grad.rows() != upstream.rows() || preact_grad.cols() != upstream.cols()))
    throw ShapeError("pre-activation gradient shape does not match the last forward output");
  Matrix grad = upstream;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    auto& l = layers_[i];
    Matrix dz = activation_grad(grad, outputs_[i], l.act);
    if (i + 1 == layers_.size() && preact_grad.size() != 0) dz += preact_grad;
    l.grad_weight.noalias() += dz * inputs_[i].transpose();
    l.grad_bias += dz.rowwise().sum();
    grad = l.weight.transpose() * dz;
  }
  return grad;
}

void DenseNet::zero_grad() {
  for (auto& l : layers_) {
    l.grad_weight.setZero();
    l.grad_bias.setZero();
  }
}

std::vector<ParamRef> DenseNet::params() {
  std::vector<ParamRef> out;
  for (auto& l : layers_) {
    out.push_back({&l.weight, &l.grad_weight});
    out.push_back({&l.bias, &l.grad_bias});
  }
  return out;
}

std::size_t DenseNet::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

void DenseNet::save(BinaryWriter& w) const {
  w.u64(layers_.size());
  for (const auto& l : layers_) {
    w.u64(static_cast<std::uint64_t>(l.weight.cols()));
    w.u64(static_cast<std::uint64_t>(l.weight.rows()));
    w.u64(activation_code(l.act));
  }
  for (const auto& l : layers_) {
    w.matrix(l.weight);
    w.matrix(l.bias);
  }
}

void DenseNet::load(BinaryReader& r) {
  r.expect(layers_.size(), "layer count");
  for (const auto& l : layers_) {
    r.expect(static_cast<std::uint64_t>(l.weight.cols()), "layer input size");
    r.expect(static_cast<std::uint64_t>(l.weight.rows()), "layer output size");
    r.expect(activation_code(l.act), "activation");
  }
  for (auto& l : layers_) {
    r.matrix_into(l.weight);
    r.matrix_into(l.bias);
  }
  inputs_.clear();
  outputs_.clear();
}

AttentionBlock::AttentionBlock(int embed_dim, int key_dim, int value_dim, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(embed_dim));
  query_ = uniform_matrix(key_dim, embed_dim, bound, rng);
  key_ = uniform_matrix(key_dim, embed_dim, bound, rng);
  value_ = uniform_matrix(value_dim, embed_dim, bound, rng);
  grad_query_ = Matrix::Zero(key_dim, embed_dim);
  grad_key_ = Matrix::Zero(key_dim, embed_dim);
  grad_value_ = Matrix::Zero(value_dim, embed_dim);
}

AttentionBlock::Output AttentionBlock::run(const Matrix& e, int agents, int agent, Cache* cache) const {
  if (agents < 1 || agent < 0 || agent >= agents) throw ShapeError("agent index out of range");
  if (e.rows() != query_.cols() || e.cols() % agents != 0) throw ShapeError("embedding matrix shape mismatch");
  const Eigen::Index batch = e.cols() / agents;
  const Eigen::Index total = e.cols();
  Output out{Matrix::Zero(value_.rows(), batch), Matrix::Zero(agents, batch)};

  // Column-by-column products keep every column's arithmetic independent of
  // its position, which the permutation-invariance guarantee relies on.
  Matrix queries(query_.rows(), batch), keys(key_.rows(), total), value_pre(value_.rows(), total);
  for (Eigen::Index b = 0; b < batch; ++b) queries.col(b).noalias() = query_ * e.col(agent * batch + b);
  for (Eigen::Index c = 0; c < total; ++c) {
    keys.col(c).noalias() = key_ * e.col(c);
    value_pre.col(c).noalias() = value_ * e.col(c);
  }

  if (agents > 1) {
    std::vector<int> others;
    for (int j = 0; j < agents; ++j)
      if (j != agent) others.push_back(j);
    std::vector<double> score(agents), weight(agents);
    std::vector<int> order;
    for (Eigen::Index b = 0; b < batch; ++b) {
      double top = -std::numeric_limits<double>::infinity();
      for (int j : others) {
        score[j] = queries.col(b).dot(keys.col(j * batch + b));
        top = std::max(top, score[j]);
      }
      // Sum in a canonical order (score, then embedding) so relabelling the
      // other agents cannot change the rounding.
      order = others;
      std::sort(order.begin(), order.end(), [&](int a, int c) {
        if (score[a] != score[c]) return score[a] < score[c];
        const auto ea = e.col(a * batch + b);
        const auto ec = e.col(c * batch + b);
        return std::lexicographical_compare(ea.begin(), ea.end(), ec.begin(), ec.end());
      });
      double denom = 0.0;
      for (int j : order) {
        weight[j] = std::exp(score[j] - top);
        denom += weight[j];
      }
      for (int j : order) {
        const double alpha = weight[j] / denom;
        out.weights(j, b) = alpha;
        out.values.col(b) += alpha * value_pre.col(j * batch + b).cwiseMax(0.0);
      }
    }
  }
  if (cache) {
    cache->embeddings = e;
    cache->queries = std::move(queries);
    cache->keys = std::move(keys);
    cache->value_pre = std::move(value_pre);
    cache->alpha = out.weights;
    cache->agents = agents;
    cache->agent = agent;
    cache->batch = static_cast<int>(batch);
    cache->valid = true;
  }
  return out;
}

AttentionBlock::Output AttentionBlock::forward(const Matrix& embeddings, int agents, int agent) {
  return run(embeddings, agents, agent, &cache_);
}

AttentionBlock::Output AttentionBlock::predict(const Matrix& embeddings, int agents, int agent) const {
  return run(embeddings, agents, agent, nullptr);
}

Matrix AttentionBlock::backward(const Matrix& d_values) {
  if (!cache_.valid) throw NotReadyError("attention backward without a cached forward pass");
  const auto& c = cache_;
  const Eigen::Index batch = c.batch;
  if (d_values.rows() != value_.rows() || d_values.cols() != batch) throw ShapeError("attention upstream shape mismatch");
  const Eigen::Index total = c.embeddings.cols();
  Matrix d_pre = Matrix::Zero(value_.rows(), total);
  Matrix d_keys = Matrix::Zero(key_.rows(), total);
  Matrix d_queries = Matrix::Zero(query_.rows(), batch);

  if (c.agents > 1) {
    std::vector<double> d_alpha(c.agents, 0.0);
    for (Eigen::Index b = 0; b < batch; ++b) {
      double mean = 0.0;
      for (int j = 0; j < c.agents; ++j) {
        if (j == c.agent) continue;
        const Eigen::Index col = j * batch + b;
        d_alpha[j] = d_values.col(b).dot(c.value_pre.col(col).cwiseMax(0.0));
        mean += c.alpha(j, b) * d_alpha[j];
        d_pre.col(col) = (c.value_pre.col(col).array() > 0.0).select(c.alpha(j, b) * d_values.col(b), 0.0);
      }
      for (int j = 0; j < c.agents; ++j) {
        if (j == c.agent) continue;
        const Eigen::Index col = j * batch + b;
        const double d_score = c.alpha(j, b) * (d_alpha[j] - mean);
        d_queries.col(b) += d_score * c.keys.col(col);
        d_keys.col(col) = d_score * c.queries.col(b);
      }
    }
  }

  grad_value_.noalias() += d_pre * c.embeddings.transpose();
  grad_key_.noalias() += d_keys * c.embeddings.transpose();
  const auto query_cols = c.embeddings.middleCols(static_cast<Eigen::Index>(c.agent) * batch, batch);
  grad_query_.noalias() += d_queries * query_cols.transpose();

  Matrix d_e = value_.transpose() * d_pre + key_.transpose() * d_keys;
  d_e.middleCols(static_cast<Eigen::Index>(c.agent) * batch, batch) += query_.transpose() * d_queries;
  return d_e;
}

void AttentionBlock::zero_grad() {
  grad_query_.setZero();
  grad_key_.setZero();
  grad_value_.setZero();
}

std::vector<ParamRef> AttentionBlock::params() {
  return {{&query_, &grad_query_}, {&key_, &grad_key_}, {&value_, &grad_value_}};
}

void AttentionBlock::save(BinaryWriter& w) const {
  w.matrix(query_);
  w.matrix(key_);
  w.matrix(value_);
}

void AttentionBlock::load(BinaryReader& r) {
  r.matrix_into(query_);
  r.matrix_into(key_);
  r.matrix_into(value_);
  cache_.valid = false;
}

void Adam::step(const std::vector<ParamRef>& params) {
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.push_back(Matrix::Zero(p.value->rows(), p.value->cols()));
      v_.push_back(Matrix::Zero(p.value->rows(), p.value->cols()));
    }
  }
  if (m_.size() != params.size()) throw ShapeError("optimizer bound to a different parameter list");
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Matrix& g = *params[i].grad;
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g.cwiseProduct(g);
    const auto m_hat = m_[i].array() / c1;
    const auto v_hat = v_[i].array() / c2;
    params[i].value->array() -= lr_ * m_hat / (v_hat.sqrt() + eps_);
  }
}

void Adam::save(BinaryWriter& w) const {
  w.f64(lr_);
  w.i64(t_);
  w.u64(m_.size());
  for (std::size_t i = 0; i < m_.size(); ++i) {
    w.matrix(m_[i]);
    w.matrix(v_[i]);
  }
}

void Adam::load(BinaryReader& r) {
  lr_ = r.f64();
  t_ = r.i64();
  const auto n = r.u64();
  m_.assign(n, Matrix{});
  v_.assign(n, Matrix{});
  for (std::size_t i = 0; i < n; ++i) {
    m_[i] = r.matrix();
    v_[i] = r.matrix();
  }
}

void soft_update(const std::vector<ParamRef>& target, const std::vector<ParamRef>& online, double tau) {
  if (target.size() != online.size()) throw ShapeError("soft update between different architectures");
  for (std::size_t i = 0; i < target.size(); ++i) {
    Matrix& t = *target[i].value;
    const Matrix& o = *online[i].value;
    if (t.rows() != o.rows() || t.cols() != o.cols()) throw ShapeError("soft update between different architectures");
    if (tau == 1.0) t = o;
    else if (tau != 0.0) t = tau * o + (1.0 - tau) * t;
  }
}

double gradient_norm(const std::vector<ParamRef>& params) {
  double sq = 0.0;
  for (const auto& p : params) sq += p.grad->squaredNorm();
  return std::sqrt(sq);
}

}  // namespace fogperc
