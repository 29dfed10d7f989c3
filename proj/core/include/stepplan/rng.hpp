#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace stepplan {

/// Seeded generator with platform-stable draws. std::mt19937_64 is fully
/// specified; the standard distributions are not, so bounded and unit draws
/// are derived here directly from the engine output.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound);

  /// Uniform real in [0, 1) with 53 bits of precision.
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

/// splitmix64 finalizer; used to derive independent sub-seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);
std::uint64_t hash_text(std::string_view text);

}  // namespace stepplan
