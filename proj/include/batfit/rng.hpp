#pragma once

#include <cmath>
#include <cstdint>

namespace batfit {

// Counter-based generator built on splitmix64. Each (seed, stream) pair is an
// independent deterministic stream, so per-particle / per-individual draws are
// unaffected by how candidate evaluations are scheduled across workers.
class StreamRng {
 public:
  StreamRng(std::uint64_t seed, std::uint64_t stream) {
    state_ = seed ^ (0x9e3779b97f4a7c15ULL * (stream + 1));
    next();  // decorrelate nearby (seed, stream) pairs
  }

  std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1)
  double uniform() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // log-uniform in [lo, hi]; requires lo > 0
  double log_uniform(double lo, double hi) {
    return lo * std::pow(hi / lo, uniform());
  }

  // standard normal via Box-Muller
  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(a);
    has_cached_ = true;
    return r * std::cos(a);
  }

 private:
  std::uint64_t state_;
  bool has_cached_ = false;
  double cached_ = 0.0;
};

}  // namespace batfit
