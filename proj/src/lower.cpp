#include "bio/lower.hpp"

#include <cmath>
#include <sstream>
#include <string>
#include <utility>

#include "bio/errors.hpp"
#include "bio/tv.hpp"

namespace bio {

LowerProblem::LowerProblem(LinearOperator a, Vec y, double g, int h, int w)
    : forward(std::move(a)), observation(std::move(y)), gamma(g), height(h), width(w) {
  if (!(gamma > 0.0)) throw ConfigError("lower problem: gamma must be > 0");
  if (h <= 0 || w <= 0) throw InputError("lower problem: grid must be positive");
  if (static_cast<Eigen::Index>(h) * w != forward.input_dims()) {
    throw InputError("lower problem: grid " + std::to_string(h) + "x" + std::to_string(w) +
                     " does not match operator input dimension " +
                     std::to_string(forward.input_dims()));
  }
  if (observation.size() != forward.output_dims()) {
    throw InputError("lower problem: observation length " + std::to_string(observation.size()) +
                     " != operator output dimension " + std::to_string(forward.output_dims()));
  }
}

LowerProblem::LowerProblem(LinearOperator a, Vec y, double g)
    : LowerProblem(a, std::move(y), g, a.height(), a.width()) {}

double lower_objective(const LowerProblem& prob, const Vec& x) {
  const double fit = 0.5 * (prob.forward.apply(x) - prob.observation).squaredNorm();
  return fit + prob.gamma * tv_norm(prob.gradient(), x);
}

Vec default_initial_point(const LowerProblem& prob) {
  if (prob.forward.output_dims() == prob.forward.input_dims()) return prob.observation;
  return prob.forward.adjoint(prob.observation);
}

ApproxAnchor make_anchor(const LowerProblem& prob, const Vec& x) {
  ApproxAnchor a;
  a.x_bar = ImageGrid(prob.height, prob.width, x);
  a.y_bar = prob.forward.apply(x);
  a.gamma = prob.gamma;
  a.tv_norm = tv_norm(prob.gradient(), x);
  a.t_bar = prob.gamma * a.tv_norm;
  return a;
}

ApproxAnchor apg_solve(const LowerProblem& prob, const ApgConfig& cfg, const Vec* init) {
  if (cfg.rel_tol < 0.0) throw ConfigError("apg: rel_tol must be >= 0");
  if (cfg.max_iters <= 0) throw ConfigError("apg: max_iters must be positive");
  if (cfg.tv_inner_iters <= 0) throw ConfigError("apg: tv_inner_iters must be positive");

  const LinearOperator& A = prob.forward;
  const LinearOperator grad = prob.gradient();
  const double lipschitz = operator_norm_sq(A);
  double step = cfg.step;
  if (step == 0.0) {
    // Power iteration underestimates; exact symbols do not.
    step = A.gram_symbol() ? 1.0 / lipschitz : 1.0 / (1.02 * lipschitz);
  } else if (step < 0.0 || step * lipschitz > 1.0 + 1e-9) {
    throw ConfigError("apg: step must lie in (0, 1/||A||^2]");
  }
  const double prox_weight = step * prob.gamma;

  Vec x = init ? *init : default_initial_point(prob);
  if (x.size() != A.input_dims()) throw InputError("apg: initial point has wrong length");
  Vec ax = A.apply(x);
  auto objective = [&](const Vec& u, const Vec& au) {
    return 0.5 * (au - prob.observation).squaredNorm() + prob.gamma * tv_norm(grad, u);
  };
  double fx = objective(x, ax);

  Vec v = x;
  Vec av = ax;
  Vec dual = Vec::Zero(grad.output_dims());
  double t = 1.0;
  int stalls = 0;
  ApproxAnchor out;
  out.objective_history.reserve(static_cast<size_t>(std::min(cfg.max_iters, 100000)) + 1);
  out.objective_history.push_back(fx);
  double rel = std::numeric_limits<double>::infinity();
  int k = 0;
  bool converged = false;

  auto prox_step = [&](const Vec& point, const Vec& a_point) {
    const Vec u = point - step * A.adjoint(a_point - prob.observation);
    auto r = tv_prox_dual(u, prox_weight, grad, cfg.tv_inner_iters, &dual);
    dual = std::move(r.dual);
    return std::move(r.x);
  };

  for (k = 1; k <= cfg.max_iters; ++k) {
    Vec z = prox_step(v, av);
    Vec az = A.apply(z);
    double fz = objective(z, az);
    const double slack = 1e-12 * std::max(1.0, std::abs(fx));
    if (fz > fx + slack) {
      // Adaptive restart: drop momentum and step from the current iterate.
      t = 1.0;
      v = x;
      av = ax;
      z = prox_step(x, ax);
      az = A.apply(z);
      fz = objective(z, az);
      if (fz > fx + slack) {
        if (fz - fx > 1e-6 * std::max(1.0, std::abs(fx))) {
          if (++stalls >= 10) {
            std::ostringstream msg;
            msg << "objective increased for 10 consecutive iterations at k=" << k
                << " (psi=" << fx << ", candidate=" << fz << ", step=" << step << ")";
            throw NumericalError("apg", msg.str());
          }
        }
        continue;
      }
    }
    stalls = 0;
    const double zn = z.norm();
    rel = (z - x).norm() / (zn > 0.0 ? zn : 1.0);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const double mom = (t - 1.0) / t_next;
    v = z + mom * (z - x);
    av = az + mom * (az - ax);
    x = std::move(z);
    ax = std::move(az);
    fx = fz;
    t = t_next;
    out.objective_history.push_back(fx);
    if (rel <= cfg.rel_tol) {
      converged = true;
      break;
    }
  }

  ApproxAnchor anchor = make_anchor(prob, x);
  anchor.objective_history = std::move(out.objective_history);
  anchor.achieved_rel_err = rel;
  anchor.iterations = std::min(k, cfg.max_iters);
  anchor.converged = converged;
  return anchor;
}

ApproxAnchor reference_solve(const LowerProblem& prob, const Vec* init) {
  ApgConfig cfg;
  cfg.rel_tol = 0.0;
  cfg.max_iters = kReferenceIterations;
  return apg_solve(prob, cfg, init);
}

}  // namespace bio
