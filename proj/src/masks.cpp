#include "bio/masks.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "bio/errors.hpp"

namespace bio {
namespace {

constexpr double kRateSlack = 0.02;

// Signed frequency of FFT index k on an n-point grid.
int signed_freq(int k, int n) { return k <= n / 2 ? k : k - n; }

void check_rate(double achieved, double rate, const char* kind) {
  if (std::abs(achieved - rate) > kRateSlack + 1e-12) {
    throw ConfigError(std::string(kind) + " mask cannot realize rate " + std::to_string(rate) +
                      " on this grid (closest achievable " + std::to_string(achieved) + ")");
  }
}

ImageGrid cartesian(double rate, int h, int w, std::mt19937_64& rng) {
  const int rows = static_cast<int>(std::lround(rate * h));
  check_rate(static_cast<double>(rows) / h, rate, "cartesian");
  if (rows == 0) throw ConfigError("cartesian mask: rate too small for grid");
  std::vector<int> order(static_cast<size_t>(h));
  for (int k = 0; k < h; ++k) order[static_cast<size_t>(k)] = k;
  // Low frequencies first: 0, 1, h-1, 2, h-2, ...
  std::stable_sort(order.begin(), order.end(), [h](int a, int b) {
    return std::abs(signed_freq(a, h)) < std::abs(signed_freq(b, h));
  });
  const int band = (rows + 3) / 4;
  std::vector<int> chosen(order.begin(), order.begin() + band);
  std::vector<int> rest(order.begin() + band, order.end());
  std::shuffle(rest.begin(), rest.end(), rng);
  chosen.insert(chosen.end(), rest.begin(), rest.begin() + (rows - band));
  ImageGrid m(h, w);
  for (int r : chosen) {
    for (int j = 0; j < w; ++j) m.at(r, j) = 1.0;
  }
  return m;
}

ImageGrid gaussian(double rate, int h, int w, std::mt19937_64& rng) {
  const Eigen::Index n = static_cast<Eigen::Index>(h) * w;
  const auto count = static_cast<Eigen::Index>(std::llround(rate * static_cast<double>(n)));
  check_rate(static_cast<double>(count) / static_cast<double>(n), rate, "gaussian");
  if (count == 0) throw ConfigError("gaussian mask: rate too small for grid");
  constexpr double kSigma = 0.2;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  // Weighted sampling without replacement: keep the largest u^(1/weight).
  std::vector<std::pair<double, Eigen::Index>> keys;
  keys.reserve(static_cast<size_t>(n));
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      const double fi = static_cast<double>(signed_freq(i, h)) / h;
      const double fj = static_cast<double>(signed_freq(j, w)) / w;
      const double weight = std::exp(-(fi * fi + fj * fj) / (2.0 * kSigma * kSigma));
      const double u = unif(rng);
      const double key = (i == 0 && j == 0) ? 2.0 : std::log(std::max(u, 1e-300)) / weight;
      keys.emplace_back(key, static_cast<Eigen::Index>(i) * w + j);
    }
  }
  std::partial_sort(keys.begin(), keys.begin() + count, keys.end(),
                    [](const auto& a, const auto& b) { return a.first > b.first; });
  ImageGrid m(h, w);
  for (Eigen::Index k = 0; k < count; ++k) m.data[keys[static_cast<size_t>(k)].second] = 1.0;
  return m;
}

ImageGrid radial_spokes(int spokes, int h, int w) {
  ImageGrid centred(h, w);
  const double ci = h / 2;
  const double cj = w / 2;
  const double reach = std::hypot(h, w);
  for (int s = 0; s < spokes; ++s) {
    const double theta = std::numbers::pi * s / spokes;
    const double si = std::sin(theta);
    const double cj_dir = std::cos(theta);
    for (double t = -reach; t <= reach; t += 0.5) {
      const long i = std::lround(ci + t * si);
      const long j = std::lround(cj + t * cj_dir);
      if (i >= 0 && i < h && j >= 0 && j < w) centred.at(static_cast<int>(i), static_cast<int>(j)) = 1.0;
    }
  }
  ImageGrid m(h, w);
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) m.at(i, j) = centred.at((i + h / 2) % h, (j + w / 2) % w);
  }
  return m;
}

ImageGrid radial(double rate, int h, int w) {
  ImageGrid best;
  double best_err = std::numeric_limits<double>::infinity();
  for (int spokes = 1; spokes <= 4 * std::max(h, w); ++spokes) {
    ImageGrid m = radial_spokes(spokes, h, w);
    const double f = sampled_fraction(m);
    const double err = std::abs(f - rate);
    if (err < best_err) {
      best_err = err;
      best = std::move(m);
    }
    if (f >= rate) break;
  }
  check_rate(sampled_fraction(best), rate, "radial");
  return best;
}

}  // namespace

MaskKind parse_mask_kind(const std::string& name) {
  if (name == "cartesian") return MaskKind::Cartesian;
  if (name == "gaussian") return MaskKind::Gaussian;
  if (name == "radial") return MaskKind::Radial;
  throw ConfigError("unknown mask kind: " + name);
}

std::string to_string(MaskKind kind) {
  switch (kind) {
    case MaskKind::Cartesian: return "cartesian";
    case MaskKind::Gaussian: return "gaussian";
    case MaskKind::Radial: return "radial";
  }
  return "unknown";
}

double sampled_fraction(const ImageGrid& mask) {
  return mask.data.sum() / static_cast<double>(mask.size());
}

ImageGrid make_mask(MaskKind kind, double rate, int height, int width, std::uint64_t seed) {
  if (!(rate > 0.0 && rate <= 1.0)) throw ConfigError("mask rate must lie in (0, 1]");
  if (height <= 0 || width <= 0) throw InputError("mask grid must be positive");
  if (rate == 1.0) return ImageGrid::constant(height, width, 1.0);
  std::mt19937_64 rng(seed);
  ImageGrid m;
  switch (kind) {
    case MaskKind::Cartesian: m = cartesian(rate, height, width, rng); break;
    case MaskKind::Gaussian: m = gaussian(rate, height, width, rng); break;
    case MaskKind::Radial: m = radial(rate, height, width); break;
  }
  m.at(0, 0) = 1.0;
  return m;
}

}  // namespace bio
