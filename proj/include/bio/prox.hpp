#pragma once

#include <functional>

#include "bio/image.hpp"

namespace bio {

/// (v, step) -> argmin_u g(u) + ||u - v||^2 / (2 step)
using ProxFn = std::function<Vec(const Vec& v, double step)>;
/// Euclidean projection onto a closed convex set.
using ProjectFn = std::function<Vec(const Vec& v)>;
using ValueFn = std::function<double(const Vec& x)>;

/// sign(u_i) max{0, |u_i| - level}
Vec soft_threshold(const Vec& u, double level);

ProxFn prox_zero();
/// Prox of rho ||u||_1.
ProxFn prox_l1(double rho);
/// Prox of (eta/2)||u - center||^2.
ProxFn prox_squared_distance(double eta, Vec center);

ProjectFn project_none();
ProjectFn project_box(Vec lower, Vec upper);
/// {x : ||x - center||_1 <= radius}
ProjectFn project_l1_ball(double radius, Vec center);
ProjectFn project_l2_ball(double radius, Vec center);
/// {x : <a, x> <= b}
ProjectFn project_halfspace(Vec a, double b);

/// Projection of v onto the l1 ball of the given radius centred at zero.
Vec l1_ball_projection(const Vec& v, double radius);

}  // namespace bio
