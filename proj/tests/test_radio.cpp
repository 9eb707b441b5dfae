#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "fogperc/radio.hpp"

using namespace fogperc;

namespace {

RadioConfig unit_radio() {
  RadioConfig r;
  r.rb_bandwidth = 1.0;
  r.noise_power = 1.0;
  return r;
}

Complex random_cn(Rng& rng) { return {rng.normal() / std::sqrt(2.0), rng.normal() / std::sqrt(2.0)}; }

}  // namespace

TEST(Pathloss, LogDistance) {
  RadioConfig r;
  r.pathloss_ref_db = 35.0;
  r.pathloss_exponent = 3.0;
  EXPECT_NEAR(pathloss_gain(1.0, r), std::pow(10.0, -3.5), 1e-18);
  EXPECT_NEAR(pathloss_gain(10.0, r), std::pow(10.0, -6.5), 1e-20);
  EXPECT_DOUBLE_EQ(pathloss_gain(0.2, r), pathloss_gain(1.0, r));
}

TEST(Channels, ZeroFadingIsPurePathloss) {
  ScenarioConfig sc;
  World w(sc, 1);
  RadioConfig r;
  r.fading_variance = 0.0;
  Rng rng(1);
  const auto ch = sample_channels(w, r, rng);
  for (int k = 0; k < w.num_vues(); ++k)
    for (int s = 0; s < ch.num_rbs(); ++s) {
      EXPECT_NEAR(std::norm(ch.fap(k, 0, s)), pathloss_gain(distance(w.vue(k).position, w.faps()[0].position), r), 1e-22);
      EXPECT_NEAR(std::norm(ch.rrh(k, 1, s)), pathloss_gain(distance(w.vue(k).position, w.rrhs()[1].position), r), 1e-22);
    }
}

TEST(Channels, MeanPowerMatchesPathloss) {
  ScenarioConfig sc;
  sc.num_vues = 1;
  World w(sc, 2);
  RadioConfig r;
  r.num_rbs = 1;
  Rng rng(3);
  const double expected = pathloss_gain(distance(w.vue(0).position, w.faps()[0].position), r);
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) sum += std::norm(sample_channels(w, r, rng).fap(0, 0, 0));
  EXPECT_NEAR(sum / n / expected, 1.0, 0.02);
}

TEST(Channels, EqualDistanceEqualExpectedPower) {
  RadioConfig r;
  EXPECT_DOUBLE_EQ(pathloss_gain(distance({0, 0}, {30, 40}), r), pathloss_gain(distance({0, 0}, {50, 0}), r));
}

TEST(SinrFap, SingleUserLog2Four) {
  ChannelState ch(1, 1, 1, 1, 0);
  ch.fap(0, 0, 0) = 1.0;
  const std::vector<double> p{3.0};
  const std::vector<int> rb{0};
  EXPECT_DOUBLE_EQ(sinr_fap(0, 0, 0, RbOccupancy(rb), ch, p, unit_radio()), 3.0);
  EXPECT_DOUBLE_EQ(rate_fap(0, 0, RbOccupancy(rb), ch, p, unit_radio()), 2.0);
}

TEST(SinrFap, TwoCoChannelUsers) {
  ChannelState ch(2, 1, 1, 1, 0);
  ch.fap(0, 0, 0) = 1.0;
  ch.fap(1, 0, 0) = Complex(0.0, 1.0);
  const std::vector<double> p{1.0, 1.0};
  const std::vector<int> rb{0, 0};
  EXPECT_DOUBLE_EQ(rate_fap(0, 0, RbOccupancy(rb), ch, p, unit_radio()), std::log2(1.5));
  EXPECT_DOUBLE_EQ(rate_fap(1, 0, RbOccupancy(rb), ch, p, unit_radio()), std::log2(1.5));
}

TEST(SinrFap, NoRbNoRate) {
  ChannelState ch(1, 1, 1, 2, 0);
  ch.fap(0, 0, 0) = 1.0;
  const std::vector<int> rb{kNoRb};
  const std::vector<double> p{1.0};
  EXPECT_EQ(rate_fap(0, 0, RbOccupancy(rb), ch, p, unit_radio()), 0.0);
}

TEST(NearestRrhs, Examples) {
  std::vector<InfraNode> rrhs;
  for (int m = 0; m < 3; ++m) rrhs.push_back({NodeKind::kRrh, m, {100.0 * m, 0.0}, 0.0, 0.0});
  EXPECT_EQ(nearest_rrhs({40.0, 0.0}, rrhs, 3), (std::vector<int>{0, 1, 2}));
  EXPECT_EQ(nearest_rrhs({200.0, 0.0}, rrhs, 1), std::vector<int>{2});
  EXPECT_EQ(nearest_rrhs({100.0, 50.0}, std::span<const InfraNode>(rrhs).subspan(0, 3), 1), std::vector<int>{1});
  // Equidistant from RRH 0 and RRH 2: lower id.
  std::vector<InfraNode> tri{rrhs[0], rrhs[1], rrhs[2]};
  tri[1].position = {100.0, 500.0};
  EXPECT_EQ(nearest_rrhs({100.0, 0.0}, tri, 1), std::vector<int>{0});
}

TEST(Mmse, SingleAntennaIsMatchedFilter) {
  ChannelState ch(1, 0, 1, 1, 0);
  ch.rrh(0, 0, 0) = Complex(0.6, 0.8);
  const std::vector<double> p{3.0};
  const std::vector<int> rb{0}, cluster{0};
  const RbOccupancy occ(rb);
  const auto g = mmse_detector(0, 0, occ, ch, p, cluster, unit_radio());
  EXPECT_NEAR(std::arg(g(0)), std::arg(ch.rrh(0, 0, 0)), 1e-12);
  EXPECT_NEAR(combiner_sinr(0, 0, g, occ, ch, p, cluster, unit_radio()), 3.0, 1e-12);
  EXPECT_NEAR(rate_cloud(0, occ, ch, p, cluster, unit_radio()), 2.0, 1e-12);
}

TEST(Mmse, MatchesClosedFormAndGridSearch) {
  Rng rng(17);
  const RadioConfig r = unit_radio();
  for (int trial = 0; trial < 20; ++trial) {
    ChannelState ch(2, 0, 2, 1, 0);
    for (int k = 0; k < 2; ++k)
      for (int m = 0; m < 2; ++m) ch.rrh(k, m, 0) = random_cn(rng);
    const std::vector<double> p{rng.uniform(0.5, 2.0), rng.uniform(0.5, 2.0)};
    const std::vector<int> rb{0, 0}, cluster{0, 1};
    const RbOccupancy occ(rb);
    const auto g = mmse_detector(0, 0, occ, ch, p, cluster, r);
    const double sinr = combiner_sinr(0, 0, g, occ, ch, p, cluster, r);

    // p h^H (p_j h_j h_j^H + sigma^2 I)^{-1} h.
    const auto h0 = cluster_channel(0, 0, cluster, ch), h1 = cluster_channel(1, 0, cluster, ch);
    Eigen::MatrixXcd rin = Eigen::MatrixXcd::Identity(2, 2) + p[1] * h1 * h1.adjoint();
    EXPECT_NEAR(sinr, p[0] * std::real(h0.dot(rin.ldlt().solve(h0))), 1e-9 * sinr);

    double best = 0.0;
    for (int i = 0; i <= 400; ++i)
      for (int j = 0; j < 400; ++j) {
        const double th = 0.5 * std::numbers::pi * i / 400, ph = 2 * std::numbers::pi * j / 400;
        Eigen::VectorXcd u(2);
        u << std::cos(th), std::sin(th) * std::polar(1.0, ph);
        best = std::max(best, combiner_sinr(0, 0, u, occ, ch, p, cluster, r));
      }
    EXPECT_GE(sinr, best * (1 - 1e-12));
    EXPECT_NEAR(best / sinr, 1.0, 1e-3);
  }
}

TEST(Mmse, BeatsMatchedFilterAndRandomDetectors) {
  Rng rng(23);
  const RadioConfig r = unit_radio();
  ChannelState ch(3, 0, 2, 1, 0);
  for (int k = 0; k < 3; ++k)
    for (int m = 0; m < 2; ++m) ch.rrh(k, m, 0) = random_cn(rng);
  const std::vector<double> p{1.0, 1.5, 0.7};
  const std::vector<int> rb{0, 0, 0}, cluster{0, 1};
  const RbOccupancy occ(rb);
  const double mmse = combiner_sinr(0, 0, mmse_detector(0, 0, occ, ch, p, cluster, r), occ, ch, p, cluster, r);
  EXPECT_GE(mmse, combiner_sinr(0, 0, cluster_channel(0, 0, cluster, ch), occ, ch, p, cluster, r));
  for (int i = 0; i < 10000; ++i) {
    Eigen::VectorXcd g(2);
    g << random_cn(rng), random_cn(rng);
    ASSERT_GE(mmse * (1 + 1e-12), combiner_sinr(0, 0, g, occ, ch, p, cluster, r));
  }
}

TEST(Mmse, ZeroPowerZeroRate) {
  ChannelState ch(1, 0, 1, 1, 0);
  ch.rrh(0, 0, 0) = 1.0;
  const std::vector<double> p{0.0};
  const std::vector<int> rb{0}, cluster{0};
  EXPECT_EQ(rate_cloud(0, RbOccupancy(rb), ch, p, cluster, unit_radio()), 0.0);
}

TEST(RateModel, ServingModes) {
  ScenarioConfig sc;
  sc.num_vues = 2;
  World w(sc, 4);
  RadioConfig r;
  Rng rng(5);
  const auto ch = sample_channels(w, r, rng);
  const RateModel model(w, ch, r, {0, 1});
  const std::vector<int> rb{2, 3};
  EXPECT_NEAR(model.served_rate(1, rb), rate_fap(1, 0, RbOccupancy(rb), ch, model.powers(), r), 1e-9);
  EXPECT_NEAR(model.served_rate(0, rb), rate_cloud(0, RbOccupancy(rb), ch, model.powers(), model.rrh_cluster(0), r), 1e-9);
  EXPECT_EQ(model.rrh_cluster(0).size(), 2u);
  EXPECT_EQ(model.rate(0, kNoRb, rb), 0.0);
}
