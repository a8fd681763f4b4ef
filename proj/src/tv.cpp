#include "bio/tv.hpp"

#include <cmath>

#include "bio/errors.hpp"

namespace bio {

double tv_norm(const LinearOperator& gradient, const Vec& x) {
  return gradient.apply(x).lpNorm<1>();
}

double tv_duality_gap(const LinearOperator& gradient, double weight, const Vec& dual,
                      const Vec& x) {
  const Vec gx = gradient.apply(x);
  return std::max(0.0, weight * gx.lpNorm<1>() - dual.dot(gx));
}

TvProxResult tv_prox_dual(const Vec& v, double weight, const LinearOperator& gradient,
                          int max_iters, const Vec* warm_dual, double gap_tol) {
  if (!(weight > 0.0)) throw ConfigError("tv_prox: weight must be > 0");
  if (v.size() != gradient.input_dims()) throw InputError("tv_prox: dimension mismatch");
  if (max_iters < 0) throw ConfigError("tv_prox: iteration count must be >= 0");

  // ||grad||^2 <= 8 for periodic forward differences.
  constexpr double kStep = 1.0 / 8.0;
  TvProxResult res;
  Vec p = (warm_dual && warm_dual->size() == gradient.output_dims())
              ? Vec(warm_dual->cwiseMax(-weight).cwiseMin(weight))
              : Vec(Vec::Zero(gradient.output_dims()));
  Vec q = p;
  double t = 1.0;
  int it = 0;
  for (; it < max_iters; ++it) {
    const Vec x = v - gradient.adjoint(q);
    Vec p_next = (q + kStep * gradient.apply(x)).cwiseMax(-weight).cwiseMin(weight);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    q = p_next + ((t - 1.0) / t_next) * (p_next - p);
    p = std::move(p_next);
    t = t_next;
    if (gap_tol > 0.0 && (it + 1) % 10 == 0 &&
        tv_duality_gap(gradient, weight, p, v - gradient.adjoint(p)) <= gap_tol) {
      ++it;
      break;
    }
  }
  res.x = v - gradient.adjoint(p);
  res.gap = tv_duality_gap(gradient, weight, p, res.x);
  res.dual = std::move(p);
  res.iterations = it;
  return res;
}

Vec tv_prox(const Vec& v, double weight, int inner_iters, int height, int width) {
  return tv_prox_dual(v, weight, LinearOperator::gradient(height, width), inner_iters).x;
}

}  // namespace bio
