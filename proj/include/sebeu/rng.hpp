#pragma once

#include "sebeu/common.hpp"

#include <cmath>
#include <cstdint>

namespace sebeu {

inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Counter-seeded xoshiro256++ stream with a Box-Muller Gaussian on top.
// A stream is fully determined by (seed, purpose, index), which keeps every
// Monte Carlo path reproducible independently of worker scheduling and of
// the standard library's distribution internals.
class PathRng {
 public:
  PathRng(uint64_t seed, uint64_t purpose, uint64_t index) {
    uint64_t mix = seed;
    (void)splitmix64(mix);
    mix ^= 0x632be59bd9b4e019ULL * (purpose + 1);
    (void)splitmix64(mix);
    mix ^= 0x9e3779b97f4a7c15ULL * (index + 1);
    for (auto& word : s_) word = splitmix64(mix);
  }

  uint64_t next() {
    const uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform on (0,1), never exactly 0.
  double uniform() {
    return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  Vector normal_vector(int n) {
    Vector v(n);
    for (int i = 0; i < n; ++i) v(i) = normal();
    return v;
  }

 private:
  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  uint64_t s_[4];
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Draws from N(mean, cov) through a symmetric eigenvalue square root.
// Slightly negative eigenvalues of numerically semidefinite covariances are
// clipped at zero below 1e-12.
class GaussianSampler {
 public:
  GaussianSampler() = default;
  GaussianSampler(const Vector& mean, const Matrix& cov) : mean_(mean) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(cov));
    Vector lam = es.eigenvalues();
    for (Eigen::Index i = 0; i < lam.size(); ++i) {
      if (lam(i) < 1e-12) lam(i) = 0.0;
    }
    root_ = es.eigenvectors() * lam.cwiseSqrt().asDiagonal();
    degenerate_ = lam.size() == 0 || lam.maxCoeff() == 0.0;
  }

  int dim() const { return static_cast<int>(mean_.size()); }

  Vector sample(PathRng& rng) const {
    // The stream always advances by dim() normals, so draw order downstream
    // is independent of whether this covariance happens to be zero.
    const Vector z = rng.normal_vector(dim());
    if (degenerate_) return mean_;
    return mean_ + root_ * z;
  }

 private:
  Vector mean_;
  Matrix root_;
  bool degenerate_ = true;
};

}  // namespace sebeu
