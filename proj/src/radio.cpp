#include "fogperc/radio.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fogperc/error.hpp"

namespace fogperc {

ChannelState::ChannelState(int vues, int faps, int rrhs, int rbs, int step)
    : vues_(vues),
      faps_(faps),
      rrhs_(rrhs),
      rbs_(rbs),
      step_(step),
      fap_(static_cast<std::size_t>(vues) * faps * rbs),
      rrh_(static_cast<std::size_t>(vues) * rrhs * rbs) {}

double pathloss_gain(double distance_m, const RadioConfig& radio) {
  const double d = std::max(distance_m, 1.0);
  const double loss_db = radio.pathloss_ref_db + 10.0 * radio.pathloss_exponent * std::log10(d);
  return std::pow(10.0, -loss_db / 10.0);
}

ChannelState sample_channels(const World& world, const RadioConfig& radio, Rng& rng) {
  const int k_count = world.num_vues();
  const int n_count = world.num_faps();
  const int m_count = static_cast<int>(world.rrhs().size());
  const int s_count = radio.rb_count();
  ChannelState ch(k_count, n_count, m_count, s_count, world.step());
  // CN(0, v): real and imaginary parts each N(0, v/2).
  const double part_sd = std::sqrt(radio.fading_variance / 2.0);
  auto fade = [&]() -> Complex {
    if (radio.fading_variance == 0.0) return {1.0, 0.0};
    const double re = rng.normal();
    const double im = rng.normal();
    return {part_sd * re, part_sd * im};
  };
  for (int k = 0; k < k_count; ++k) {
    const Vec2 pos = world.vue(k).position;
    for (int n = 0; n < n_count; ++n) {
      const double amp = std::sqrt(pathloss_gain(distance(pos, world.faps()[n].position), radio));
      for (int s = 0; s < s_count; ++s) ch.fap(k, n, s) = amp * fade();
    }
    for (int m = 0; m < m_count; ++m) {
      const double amp = std::sqrt(pathloss_gain(distance(pos, world.rrhs()[m].position), radio));
      for (int s = 0; s < s_count; ++s) ch.rrh(k, m, s) = amp * fade();
    }
  }
  return ch;
}

std::vector<int> nearest_rrhs(Vec2 position, std::span<const InfraNode> rrhs, int cluster_size) {
  if (cluster_size < 0 || cluster_size > static_cast<int>(rrhs.size()))
    throw std::invalid_argument("cluster size must lie in [0, M]");
  std::vector<int> order(rrhs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return distance(position, rrhs[a].position) < distance(position, rrhs[b].position);
  });
  order.resize(cluster_size);
  std::sort(order.begin(), order.end());
  return order;
}

double sinr_fap(int k, int fap, int s, const RbOccupancy& occ, const ChannelState& ch,
                std::span<const double> powers, const RadioConfig& radio) {
  double interference = 0.0;
  for (int j = 0; j < occ.num_vues(); ++j)
    if (j != k && occ.on(j, s)) interference += powers[j] * std::norm(ch.fap(j, fap, s));
  return powers[k] * std::norm(ch.fap(k, fap, s)) / (interference + radio.noise_power);
}

double rate_fap(int k, int fap, const RbOccupancy& occ, const ChannelState& ch, std::span<const double> powers,
                const RadioConfig& radio) {
  double rate = 0.0;
  for (int s = 0; s < ch.num_rbs(); ++s)
    if (occ.on(k, s)) rate += radio.rb_bandwidth * std::log2(1.0 + sinr_fap(k, fap, s, occ, ch, powers, radio));
  return rate;
}

Eigen::VectorXcd cluster_channel(int j, int s, std::span<const int> cluster, const ChannelState& ch) {
  Eigen::VectorXcd h(static_cast<Eigen::Index>(cluster.size()));
  for (std::size_t i = 0; i < cluster.size(); ++i) h(static_cast<Eigen::Index>(i)) = ch.rrh(j, cluster[i], s);
  return h;
}

Eigen::VectorXcd mmse_detector(int k, int s, const RbOccupancy& occ, const ChannelState& ch,
                               std::span<const double> powers, std::span<const int> cluster,
                               const RadioConfig& radio) {
  const auto dim = static_cast<Eigen::Index>(cluster.size());
  const Eigen::VectorXcd hk = cluster_channel(k, s, cluster, ch);
  Eigen::MatrixXcd cov = radio.noise_power * Eigen::MatrixXcd::Identity(dim, dim);
  cov.noalias() += powers[k] * hk * hk.adjoint();
  for (int j = 0; j < occ.num_vues(); ++j) {
    if (j == k || !occ.on(j, s)) continue;
    const Eigen::VectorXcd hj = cluster_channel(j, s, cluster, ch);
    cov.noalias() += powers[j] * hj * hj.adjoint();
  }
  Eigen::LLT<Eigen::MatrixXcd> llt(cov);
  if (llt.info() != Eigen::Success) throw NumericalError("MMSE covariance is not positive definite");
  Eigen::VectorXcd g = llt.solve(hk);
  if (!g.allFinite()) throw NumericalError("MMSE detector is not finite");
  return g;
}

double combiner_sinr(int k, int s, const Eigen::VectorXcd& g, const RbOccupancy& occ, const ChannelState& ch,
                     std::span<const double> powers, std::span<const int> cluster, const RadioConfig& radio) {
  const double signal = powers[k] * std::norm(g.dot(cluster_channel(k, s, cluster, ch)));
  double interference = 0.0;
  for (int j = 0; j < occ.num_vues(); ++j)
    if (j != k && occ.on(j, s)) interference += powers[j] * std::norm(g.dot(cluster_channel(j, s, cluster, ch)));
  const double noise = radio.noise_power * g.squaredNorm();
  return signal / (interference + noise);
}

double rate_cloud(int k, const RbOccupancy& occ, const ChannelState& ch, std::span<const double> powers,
                  std::span<const int> cluster, const RadioConfig& radio) {
  double rate = 0.0;
  for (int s = 0; s < ch.num_rbs(); ++s) {
    if (!occ.on(k, s)) continue;
    if (powers[k] == 0.0) continue;
    const Eigen::VectorXcd g = mmse_detector(k, s, occ, ch, powers, cluster, radio);
    rate += radio.rb_bandwidth * std::log2(1.0 + combiner_sinr(k, s, g, occ, ch, powers, cluster, radio));
  }
  return rate;
}

RateModel::RateModel(const World& world, const ChannelState& channels, const RadioConfig& radio,
                     std::vector<int> serving_node)
    : channels_(&channels), radio_(radio), serving_node_(std::move(serving_node)) {
  if (static_cast<int>(serving_node_.size()) != world.num_vues()) throw ShapeError("one serving node per VUE");
  for (const auto& v : world.vues()) {
    clusters_.push_back(nearest_rrhs(v.position, world.rrhs(), radio.rrh_cluster_size));
    powers_.push_back(v.tx_power);
  }
}

double RateModel::rate(int k, int s, std::span<const int> rb_of) const {
  const int node = serving_node_.at(k);
  if (node < 0 || s == kNoRb) return 0.0;
  const RbOccupancy occ(rb_of);
  double sinr = 0.0;
  if (node == 0) {
    if (powers_[k] == 0.0) return 0.0;
    const auto g = mmse_detector(k, s, occ, *channels_, powers_, clusters_[k], radio_);
    sinr = combiner_sinr(k, s, g, occ, *channels_, powers_, clusters_[k], radio_);
  } else {
    sinr = sinr_fap(k, node - 1, s, occ, *channels_, powers_, radio_);
  }
  return radio_.rb_bandwidth * std::log2(1.0 + sinr);
}

double RateModel::served_rate(int k, std::span<const int> rb_of) const { return rate(k, rb_of[k], rb_of); }

}  // namespace fogperc
