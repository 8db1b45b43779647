#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace spr {

/// Deterministic random stream. mt19937_64 is fully specified by the
/// standard; the distributions are hand-rolled because the std:: ones are
/// implementation-defined and would break bit-reproducibility of datasets.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 significant bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; draws come in pairs, spare is cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double mag = std::sqrt(-2.0 * std::log(u1));
    const double ang = 6.283185307179586476925286766559 * u2;
    spare_ = mag * std::sin(ang);
    have_spare_ = true;
    return mag * std::cos(ang);
  }

  /// Integer in [0, n). Modulo bias is irrelevant here; determinism is not.
  std::uint64_t below(std::uint64_t n) { return engine_() % n; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace spr
