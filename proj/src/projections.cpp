#include "bio/prox.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "bio/errors.hpp"

namespace bio {

Vec soft_threshold(const Vec& u, double level) {
  if (level < 0.0) throw ConfigError("soft_threshold: level must be >= 0");
  Vec out(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    const double a = std::abs(u[i]) - level;
    out[i] = a > 0.0 ? std::copysign(a, u[i]) : 0.0;
  }
  return out;
}

ProxFn prox_zero() {
  return [](const Vec& v, double) { return v; };
}

ProxFn prox_l1(double rho) {
  if (rho < 0.0) throw ConfigError("prox_l1: rho must be >= 0");
  return [rho](const Vec& v, double step) { return soft_threshold(v, rho * step); };
}

ProxFn prox_squared_distance(double eta, Vec center) {
  if (eta < 0.0) throw ConfigError("prox_squared_distance: eta must be >= 0");
  return [eta, c = std::move(center)](const Vec& v, double step) -> Vec {
    return (v + step * eta * c) / (1.0 + step * eta);
  };
}

ProjectFn project_none() {
  return [](const Vec& v) { return v; };
}

ProjectFn project_box(Vec lower, Vec upper) {
  if (lower.size() != upper.size()) throw InputError("project_box: bound lengths differ");
  if ((lower.array() > upper.array()).any()) throw ConfigError("project_box: empty box");
  return [lo = std::move(lower), hi = std::move(upper)](const Vec& v) -> Vec {
    return v.cwiseMax(lo).cwiseMin(hi);
  };
}

Vec l1_ball_projection(const Vec& v, double radius) {
  if (radius < 0.0) throw ConfigError("l1 ball: radius must be >= 0");
  if (v.lpNorm<1>() <= radius) return v;
  if (radius == 0.0) return Vec::Zero(v.size());
  // Sort-based threshold search on |v|.
  std::vector<double> mags(static_cast<size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) mags[static_cast<size_t>(i)] = std::abs(v[i]);
  std::sort(mags.begin(), mags.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (size_t j = 0; j < mags.size(); ++j) {
    cumulative += mags[j];
    const double candidate = (cumulative - radius) / static_cast<double>(j + 1);
    if (mags[j] - candidate > 0.0) theta = candidate;
  }
  // Rounding can leave theta a hair below zero when ||v||_1 ~ radius.
  return soft_threshold(v, std::max(theta, 0.0));
}

ProjectFn project_l1_ball(double radius, Vec center) {
  if (radius < 0.0) throw ConfigError("project_l1_ball: radius must be >= 0");
  return [radius, c = std::move(center)](const Vec& v) -> Vec {
    return c + l1_ball_projection(v - c, radius);
  };
}

ProjectFn project_l2_ball(double radius, Vec center) {
  if (radius < 0.0) throw ConfigError("project_l2_ball: radius must be >= 0");
  return [radius, c = std::move(center)](const Vec& v) -> Vec {
    const Vec d = v - c;
    const double n = d.norm();
    return n <= radius ? v : Vec(c + (radius / n) * d);
  };
}

ProjectFn project_halfspace(Vec a, double b) {
  const double an = a.squaredNorm();
  if (an == 0.0) throw ConfigError("project_halfspace: normal must be nonzero");
  return [a = std::move(a), b, an](const Vec& v) -> Vec {
    const double excess = a.dot(v) - b;
    return excess <= 0.0 ? v : Vec(v - (excess / an) * a);
  };
}

}  // namespace bio
