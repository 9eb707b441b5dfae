#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace fogperc {

/// Mixes a 64-bit value (SplitMix64 finalizer).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derives the seed of a named stream from a root seed. The name is hashed
/// with FNV-1a so stream seeds do not depend on declaration order.
constexpr std::uint64_t stream_seed(std::uint64_t root, std::string_view name,
                                    std::uint64_t index = 0) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return mix64(root ^ mix64(h ^ mix64(index)));
}

/// Thin wrapper over mt19937_64. Every draw is a pure function of the engine
/// state (no cached normals), so saving the engine state is enough to resume.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  double uniform() { return std::generate_canonical<double, 64>(engine_); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }

  /// Standard normal via Box-Muller; consumes exactly two uniforms.
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  std::mt19937_64& engine() { return engine_; }

  std::string state() const;
  void set_state(const std::string& s);

  friend bool operator==(const Rng& a, const Rng& b) { return a.engine_ == b.engine_; }

 private:
  std::mt19937_64 engine_;
};

/// Named independent streams expanded from one root seed.
struct RngStreams {
  explicit RngStreams(std::uint64_t root)
      : mobility(stream_seed(root, "mobility")),
        channels(stream_seed(root, "channels")),
        values(stream_seed(root, "values")),
        exploration(stream_seed(root, "exploration")),
        replay(stream_seed(root, "replay")),
        init(stream_seed(root, "init")) {}

  Rng mobility;
  Rng channels;
  Rng values;
  Rng exploration;
  Rng replay;
  Rng init;
};

}  // namespace fogperc
