#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bio/linop.hpp"
#include "bio/lower.hpp"
#include "bio/prox.hpp"
#include "bio/spectral.hpp"

namespace bio {

/// Selects how the dual multipliers enter the gradient term of the x right-hand
/// side. Printed: grad^T(beta(s2 - l_s2) - beta(s1 + l_s1)). Derived (from the
/// augmented Lagrangian): grad^T((beta s2 - l_s2) - (beta s1 + l_s1)).
/// The two coincide for beta = 1.
enum class MultiplierScaling { Printed, Derived };

/// Primal blocks and multipliers of the polyhedral TV split
///   K x = y_bar, grad x + s1 - w = 0, grad x - s2 + w = 0,
///   <e, w> + r = budget, s1, s2, r >= 0   (and z = T x for CS-MRI).
struct TvSplitState {
  Vec x;
  Vec s1, s2;
  double r = 0.0;
  Vec w;
  Vec z;  // empty for deblurring
  Vec lambda_x, lambda_s1, lambda_s2;
  double lambda_r = 0.0;
  Vec lambda_z;
  int k = 0;
};

/// min 1/2||x - D(y)||^2 over the re-characterized TV feasible set.
struct DeblurParams {
  LinearOperator K = LinearOperator::identity(1);
  ApproxAnchor anchor;
  ImageGrid D_of_y;
  double beta = 1.0;
  double tau = 0.1;
  int max_iters = 2000;
  double tol = 1e-6;
  MultiplierScaling scaling = MultiplierScaling::Printed;
};

/// min eta/2||x - D(y)||^2 + rho||T x||_1 over the same set with A = P F.
struct CsMriParams {
  LinearOperator PF = LinearOperator::identity(1);
  LinearOperator T = LinearOperator::identity(1);
  ApproxAnchor anchor;
  ImageGrid D_of_y;
  double eta = 1.0;
  double rho = 1e-3;
  double beta = 1.0;
  double tau = 0.1;
  int max_iters = 2000;
  double tol = 1e-6;
  MultiplierScaling scaling = MultiplierScaling::Printed;
};

struct ConstraintResiduals {
  double forward = 0;      // ||A x - y_bar||
  double split_plus = 0;   // ||grad x + s1 - w||
  double split_minus = 0;  // ||grad x - s2 + w||
  double budget = 0;       // |<e, w> + r - budget|
  double transform = 0;    // ||z - T x|| (CS-MRI)
  double min_s1 = 0;
  double min_s2 = 0;
  double r = 0;

  /// Largest equality residual or nonnegativity violation.
  double max_violation() const;
};

struct TvTraceRow {
  int k = 0;
  ConstraintResiduals residuals;
  double rel_change = 0;
  double objective_F = 0;
};

struct TvRunResult {
  TvSplitState state;
  std::vector<TvTraceRow> trace;
  bool converged = false;
  int iterations = 0;

  std::string to_csv() const;
};

ConstraintResiduals constraint_residuals(const TvSplitState& st, const LinearOperator& forward,
                                         const Vec& y_bar, double budget,
                                         const LinearOperator* transform = nullptr);

/// Feasible start: x = x_bar, w = |grad x_bar|, s1 = w - grad x_bar,
/// s2 = grad x_bar + w, r = 0, z = T x_bar, multipliers zero.
TvSplitState anchor_state(const ApproxAnchor& anchor, const LinearOperator* transform = nullptr);

/// Prepared scheme for one parameter set; the x-system is factored once.
class TvSplitSolver {
 public:
  explicit TvSplitSolver(const DeblurParams& p);
  explicit TvSplitSolver(const CsMriParams& p);

  TvSplitState step(const TvSplitState& st) const;
  TvRunResult run(TvSplitState init) const;
  TvRunResult run() const { return run(anchor_state(anchor_, transform_ ? &*transform_ : nullptr)); }

  ConstraintResiduals residuals(const TvSplitState& st) const;
  double upper_objective(const Vec& x) const;
  /// ||grad x_bar||_1: the TV budget the split enforces.
  double budget() const { return anchor_.tv_norm; }

 private:
  void validate() const;

  LinearOperator forward_;
  std::optional<LinearOperator> transform_;
  LinearOperator gradient_;
  ApproxAnchor anchor_;
  Vec data_term_;
  double eta_ = 1.0;
  double rho_ = 0.0;
  double beta_ = 1.0;
  double tau_ = 0.1;
  int max_iters_ = 2000;
  double tol_ = 1e-6;
  MultiplierScaling scaling_ = MultiplierScaling::Printed;
  Vec forward_rhs_;  // beta A^T y_bar
  std::optional<SpectralSystem> system_;
};

TvSplitState deblur_step(const DeblurParams& p, const TvSplitState& st);
TvSplitState csmri_step(const CsMriParams& p, const TvSplitState& st);
TvRunResult run_deblur(const DeblurParams& p);
TvRunResult run_csmri(const CsMriParams& p);

}  // namespace bio
