#pragma once

#include "bio/linop.hpp"

namespace bio {

/// ||grad x||_1 (anisotropic total variation).
double tv_norm(const LinearOperator& gradient, const Vec& x);

struct TvProxResult {
  Vec x;
  Vec dual;        // p with |p_i| <= weight and x = v - grad^T p
  double gap = 0;  // primal - dual objective, >= 0
  int iterations = 0;
};

/// argmin_x 1/2||x - v||^2 + weight ||grad x||_1 via accelerated projected
/// gradient on the box-constrained dual. `warm_dual` (may be null) seeds p;
/// iteration stops early once the duality gap drops to `gap_tol`.
TvProxResult tv_prox_dual(const Vec& v, double weight, const LinearOperator& gradient,
                          int max_iters, const Vec* warm_dual = nullptr, double gap_tol = 0.0);

Vec tv_prox(const Vec& v, double weight, int inner_iters, int height, int width);

/// weight ||grad x||_1 - <p, grad x> for x = v - grad^T p.
double tv_duality_gap(const LinearOperator& gradient, double weight, const Vec& dual,
                      const Vec& x);

}  // namespace bio
