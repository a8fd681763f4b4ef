#pragma once

#include <cstdint>
#include <random>

#include "bio/image.hpp"

namespace testing {

// Seeded generators for randomized checks.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng_); }
  double uniform(double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(rng_);
  }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

  bio::Vec vec(Eigen::Index n) {
    bio::Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = normal();
    return v;
  }
  bio::Mat mat(Eigen::Index r, Eigen::Index c) {
    bio::Mat m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal();
    return m;
  }
  bio::ImageGrid image(int h, int w) {
    bio::ImageGrid g(h, w);
    for (Eigen::Index i = 0; i < g.size(); ++i) g.data[i] = uniform();
    return g;
  }
  // Nonnegative stencil normalized to unit sum.
  bio::Mat kernel(int r, int c) {
    bio::Mat k(r, c);
    for (Eigen::Index i = 0; i < k.size(); ++i) k.data()[i] = uniform(0.1, 1.0);
    return k / k.sum();
  }
  bio::ImageGrid mask(int h, int w, double p) {
    bio::ImageGrid m(h, w);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data[i] = uniform() < p ? 1.0 : 0.0;
    m.data[0] = 1.0;
    return m;
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

}  // namespace testing
