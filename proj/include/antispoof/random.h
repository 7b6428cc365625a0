#ifndef ANTISPOOF_RANDOM_H_
#define ANTISPOOF_RANDOM_H_

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace antispoof {

// Seeded generator with platform-independent draws. std:: distributions are
// implementation-defined, so all conversions from raw bits live here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n);

  // Standard normal via Box-Muller (one value per call, no caching).
  double normal();

 private:
  std::mt19937_64 engine_;
};

// splitmix64 finalizer; used to derive independent child seeds.
std::uint64_t mix64(std::uint64_t x);

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> parts);

// FNV-1a over the bytes of s.
std::uint64_t hash_string(std::string_view s);

}  // namespace antispoof

#endif  // ANTISPOOF_RANDOM_H_
