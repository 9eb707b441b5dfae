#pragma once

#include <complex>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "fogperc/binary_matrix.hpp"
#include "fogperc/config.hpp"
#include "fogperc/rng.hpp"
#include "fogperc/world.hpp"

namespace fogperc {

using Complex = std::complex<double>;

inline constexpr int kNoRb = -1;

/// Per-step block-fading gains: VUE -> F-AP and VUE -> RRH, per RB.
class ChannelState {
 public:
  ChannelState() = default;
  ChannelState(int vues, int faps, int rrhs, int rbs, int step);

  Complex& fap(int k, int n, int s) { return fap_[(static_cast<std::size_t>(k) * faps_ + n) * rbs_ + s]; }
  Complex fap(int k, int n, int s) const { return fap_[(static_cast<std::size_t>(k) * faps_ + n) * rbs_ + s]; }
  Complex& rrh(int k, int m, int s) { return rrh_[(static_cast<std::size_t>(k) * rrhs_ + m) * rbs_ + s]; }
  Complex rrh(int k, int m, int s) const { return rrh_[(static_cast<std::size_t>(k) * rrhs_ + m) * rbs_ + s]; }

  int num_vues() const noexcept { return vues_; }
  int num_faps() const noexcept { return faps_; }
  int num_rrhs() const noexcept { return rrhs_; }
  int num_rbs() const noexcept { return rbs_; }
  int step() const noexcept { return step_; }

  friend bool operator==(const ChannelState&, const ChannelState&) = default;

 private:
  int vues_ = 0, faps_ = 0, rrhs_ = 0, rbs_ = 0, step_ = 0;
  std::vector<Complex> fap_;
  std::vector<Complex> rrh_;
};

/// Linear power gain of the log-distance model; distances below 1 m clamp to 1 m.
double pathloss_gain(double distance_m, const RadioConfig& radio);

/// Every gain is sqrt(pathloss) times a CN(0, fading_variance) draw, i.i.d.
/// over (VUE, receiver, RB). With zero variance the fade is exactly 1.
ChannelState sample_channels(const World& world, const RadioConfig& radio, Rng& rng);

/// The `cluster_size` RRHs closest to `position`, ties to the lower id.
std::vector<int> nearest_rrhs(Vec2 position, std::span<const InfraNode> rrhs, int cluster_size);

/// Which VUE transmits on which RB, viewed either as per-VUE RB indices
/// (kNoRb for none) or as the binary indicator matrix a[k][s].
class RbOccupancy {
 public:
  explicit RbOccupancy(std::span<const int> rb_of) : rb_of_(rb_of), matrix_(nullptr) {}
  explicit RbOccupancy(const BinaryMatrix& a) : matrix_(&a) {}

  int num_vues() const {
    return matrix_ ? static_cast<int>(matrix_->rows()) : static_cast<int>(rb_of_.size());
  }
  bool on(int j, int s) const { return matrix_ ? (*matrix_)(j, s) : rb_of_[j] == s; }

 private:
  std::span<const int> rb_of_;
  const BinaryMatrix* matrix_;
};

/// SINR of VUE k on RB s at F-AP `fap` (0-based F-AP index); every other
/// VUE occupying s interferes.
double sinr_fap(int k, int fap, int s, const RbOccupancy& occ, const ChannelState& ch,
                std::span<const double> powers, const RadioConfig& radio);

/// Sum over RBs held by k of W log2(1 + SINR). Zero when k holds no RB.
double rate_fap(int k, int fap, const RbOccupancy& occ, const ChannelState& ch,
                std::span<const double> powers, const RadioConfig& radio);

/// Channel vector of VUE j towards the RRH set `cluster` on RB s.
Eigen::VectorXcd cluster_channel(int j, int s, std::span<const int> cluster, const ChannelState& ch);

/// MMSE combiner (sum_j p_j h_j h_j^H + sigma^2 I)^{-1} h_k over VUE k and
/// every co-RB VUE, restricted to k's RRH cluster.
Eigen::VectorXcd mmse_detector(int k, int s, const RbOccupancy& occ, const ChannelState& ch,
                               std::span<const double> powers, std::span<const int> cluster,
                               const RadioConfig& radio);

/// Post-combining SINR of VUE k on RB s for an arbitrary combiner g.
double combiner_sinr(int k, int s, const Eigen::VectorXcd& g, const RbOccupancy& occ, const ChannelState& ch,
                     std::span<const double> powers, std::span<const int> cluster, const RadioConfig& radio);

/// Cloud-mode uplink rate of VUE k with MMSE combining over its RRH cluster.
double rate_cloud(int k, const RbOccupancy& occ, const ChannelState& ch, std::span<const double> powers,
                  std::span<const int> cluster, const RadioConfig& radio);

/// Rate evaluation bound to one time step: channels, powers, serving nodes
/// and RRH clusters. `rate(k, s, rb_of)` answers "what would k get on s if
/// everybody else kept the RBs in rb_of".
class RateModel {
 public:
  /// `serving_node[k]`: 0 for cloud, n >= 1 for F-AP n, -1 for none.
  RateModel(const World& world, const ChannelState& channels, const RadioConfig& radio,
            std::vector<int> serving_node);

  double rate(int k, int s, std::span<const int> rb_of) const;
  double served_rate(int k, std::span<const int> rb_of) const;

  int serving_node(int k) const { return serving_node_.at(k); }
  const std::vector<int>& rrh_cluster(int k) const { return clusters_.at(k); }
  std::span<const double> powers() const { return powers_; }

 private:
  const ChannelState* channels_;
  RadioConfig radio_;
  std::vector<int> serving_node_;
  std::vector<std::vector<int>> clusters_;
  std::vector<double> powers_;
};

}  // namespace fogperc
