#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace mavgram {

// FNV-1a over raw bytes. Used for config hashing, artifact hashes and
// RNG stream derivation.
uint64_t fnv1a64(std::string_view bytes,
                 uint64_t basis = 0xcbf29ce484222325ull);

// Deterministic splitmix64 generator with self-contained distributions.
// Standard-library distributions are implementation-defined, which would
// break the bitwise reproducibility contract, so everything is spelled
// out here.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  // Independent stream for a named purpose, e.g. rng.stream("init:conv1.w").
  Rng stream(std::string_view label) const;

  uint64_t next_u64();

  // uniform in [0, 1)
  double uniform();
  double uniform(double lo, double hi);

  // uniform integer in [0, n), n > 0, rejection-sampled (no modulo bias)
  uint64_t uniform_int(uint64_t n);

  // standard normal via Box-Muller
  double normal();

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace mavgram
