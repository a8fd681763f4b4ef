#pragma once

#include <vector>

#include "bio/image.hpp"
#include "bio/linop.hpp"

namespace bio {

/// min_x 1/2||A x - y||^2 + gamma ||grad x||_1 on an h x w grid.
struct LowerProblem {
  LinearOperator forward;
  Vec observation;
  double gamma = 1e-3;
  int height = 0;
  int width = 0;

  LowerProblem(LinearOperator a, Vec y, double gamma, int height, int width);
  /// Grid taken from the operator.
  LowerProblem(LinearOperator a, Vec y, double gamma);

  LinearOperator gradient() const { return LinearOperator::gradient(height, width); }
};

struct ApgConfig {
  double rel_tol = 1e-4;  // on ||x^{k+1} - x^k|| / ||x^{k+1}||
  int max_iters = 5000;
  int tv_inner_iters = 30;
  double step = 0.0;  // 0 selects 1/||A||^2
};

/// Lower-level output: the point that anchors the re-characterized feasible set.
struct ApproxAnchor {
  ImageGrid x_bar;
  Vec y_bar;              // A x_bar
  double gamma = 0.0;
  double tv_norm = 0.0;   // ||grad x_bar||_1
  double t_bar = 0.0;     // gamma * tv_norm
  double achieved_rel_err = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> objective_history;
};

double lower_objective(const LowerProblem& prob, const Vec& x);

/// x0 = y when A is square, A^T y otherwise.
Vec default_initial_point(const LowerProblem& prob);

/// Builds an anchor from an arbitrary point so y_bar and t_bar are consistent with x.
ApproxAnchor make_anchor(const LowerProblem& prob, const Vec& x);

/// FISTA with adaptive restart; the inner TV prox is warm-started across
/// iterations. Accepted iterates never increase the objective.
ApproxAnchor apg_solve(const LowerProblem& prob, const ApgConfig& cfg, const Vec* init = nullptr);

/// 20,000 iterations with rel_tol = 0.
ApproxAnchor reference_solve(const LowerProblem& prob, const Vec* init = nullptr);

inline constexpr int kReferenceIterations = 20000;

}  // namespace bio
