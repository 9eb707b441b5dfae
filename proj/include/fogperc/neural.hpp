#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "fogperc/rng.hpp"
#include "fogperc/serialize.hpp"

namespace fogperc {

using Matrix = Eigen::MatrixXd;

enum class Activation { kLinear, kRelu, kTanh };

/// A parameter tensor and its gradient accumulator.
struct ParamRef {
  Matrix* value;
  Matrix* grad;
};

/// Fully connected network. Inputs are column-batched: x is (in x batch).
class DenseNet {
 public:
  struct Layer {
    Matrix weight;  ///< out x in
    Matrix bias;    ///< out x 1
    Activation act = Activation::kLinear;
    Matrix grad_weight;
    Matrix grad_bias;
  };

  DenseNet() = default;
  /// sizes = {in, h1, ..., out}; one activation per layer. Weights and biases
  /// are drawn uniformly from +-1/sqrt(fan_in).
  DenseNet(const std::vector<int>& sizes, const std::vector<Activation>& acts, Rng& rng);

  int input_dim() const;
  int output_dim() const;

  /// Forward pass that caches activations for backward().
  Matrix forward(const Matrix& x);
  /// Forward pass without touching the cache.
  Matrix predict(const Matrix& x) const;
  /// Accumulates parameter gradients for dL/d(output) = upstream and returns
  /// dL/d(input). `preact_grad`, if non-empty, is added to the gradient of
  /// the last layer's pre-activation. Throws NotReadyError without a cached
  /// forward pass.
  Matrix backward(const Matrix& upstream, const Matrix& preact_grad = Matrix());
  /// Last layer pre-activation of the cached forward pass.
  Matrix output_preactivation() const;

  void zero_grad();
  std::vector<ParamRef> params();
  std::size_t parameter_count() const;

  std::vector<Layer>& layers() { return layers_; }
  const std::vector<Layer>& layers() const { return layers_; }

  void save(BinaryWriter& w) const;
  void load(BinaryReader& r);

 private:
  void check_input(const Matrix& x) const;

  std::vector<Layer> layers_;
  std::vector<Matrix> inputs_;
  std::vector<Matrix> outputs_;
};

/// Single-head bilinear attention over the other agents' embeddings:
///   alpha_{k,j} = softmax_j(e_k^T Wq^T Wk e_j),  v_k = sum_{j != k} alpha_{k,j} ReLU(V e_j).
/// Embeddings are agent-major columns: column j * batch + b holds agent j of
/// sample b.
class AttentionBlock {
 public:
  struct Output {
    Matrix values;   ///< value_dim x batch
    Matrix weights;  ///< agents x batch; row k (the query agent) is zero
  };

  AttentionBlock() = default;
  AttentionBlock(int embed_dim, int key_dim, int value_dim, Rng& rng);

  int embed_dim() const { return static_cast<int>(query_.cols()); }
  int value_dim() const { return static_cast<int>(value_.rows()); }

  Output forward(const Matrix& embeddings, int agents, int agent);
  Output predict(const Matrix& embeddings, int agents, int agent) const;
  /// Returns dL/d(embeddings) for dL/d(values) and accumulates parameter grads.
  Matrix backward(const Matrix& d_values);

  void zero_grad();
  std::vector<ParamRef> params();

  Matrix& query() { return query_; }
  Matrix& key() { return key_; }
  Matrix& value() { return value_; }

  void save(BinaryWriter& w) const;
  void load(BinaryReader& r);

 private:
  struct Cache {
    Matrix embeddings, queries, keys, value_pre, alpha;
    int agents = 0, agent = 0, batch = 0;
    bool valid = false;
  };
  Output run(const Matrix& embeddings, int agents, int agent, Cache* cache) const;

  Matrix query_, key_, value_;
  Matrix grad_query_, grad_key_, grad_value_;
  Cache cache_;
};

/// Adaptive-moment optimizer (defaults beta1 0.9, beta2 0.999, eps 1e-8).
class Adam {
 public:
  explicit Adam(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  /// One update from the gradients currently stored in `params`.
  void step(const std::vector<ParamRef>& params);

  long steps() const { return t_; }
  double learning_rate() const { return lr_; }

  void save(BinaryWriter& w) const;
  void load(BinaryReader& r);

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<Matrix> m_, v_;
};

/// target <- tau * online + (1 - tau) * target, elementwise.
void soft_update(const std::vector<ParamRef>& target, const std::vector<ParamRef>& online, double tau);

/// Euclidean norm over all gradients.
double gradient_norm(const std::vector<ParamRef>& params);

}  // namespace fogperc
