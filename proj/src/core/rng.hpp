#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace fairdecide::rng {

// Generator identity string recorded in provenance fields.
inline constexpr const char* kGeneratorId = "mt19937_64/canonical53+box-muller+marsaglia-tsang";

std::uint64_t splitmix64(std::uint64_t& state);
std::uint64_t fnv1a(const std::string& s);

// Derives a stage-specific seed from the single run seed, so every pipeline
// stage consumes an independent, reproducible stream.
std::uint64_t stage_seed(std::uint64_t master, const std::string& stage);

// Deterministic uniform draw in [0,1) for one instance, used by randomized
// decision bands. Identical (seed, id) always yields the identical draw.
double instance_draw(std::uint64_t seed, const std::string& id);

// Seeded stream with explicit, libstdc++-independent mappings from raw bits to
// uniform, normal, gamma and beta variates, so generated populations are
// byte-reproducible across platforms.
class Stream {
 public:
  explicit Stream(std::uint64_t seed) : engine_(seed) {}

  // 53-bit mantissa uniform in [0,1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double normal();                       // Box-Muller
  double gamma(double shape);            // Marsaglia-Tsang squeeze, unit scale
  double beta(double a, double b);       // ratio of gammas

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace fairdecide::rng
