#include "bio/tvscheme.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bio/errors.hpp"

namespace bio {

double ConstraintResiduals::max_violation() const {
  return std::max({forward, split_plus, split_minus, budget, transform, std::max(0.0, -min_s1),
                   std::max(0.0, -min_s2), std::max(0.0, -r)});
}

std::string TvRunResult::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "k,forward,split_plus,split_minus,budget,transform,min_s1,min_s2,r,rel_change,objective_F\n";
  for (const auto& row : trace) {
    const auto& c = row.residuals;
    os << row.k << ',' << c.forward << ',' << c.split_plus << ',' << c.split_minus << ','
       << c.budget << ',' << c.transform << ',' << c.min_s1 << ',' << c.min_s2 << ',' << c.r
       << ',' << row.rel_change << ',' << row.objective_F << '\n';
  }
  return os.str();
}

ConstraintResiduals constraint_residuals(const TvSplitState& st, const LinearOperator& forward,
                                         const Vec& y_bar, double budget,
                                         const LinearOperator* transform) {
  const LinearOperator grad = LinearOperator::gradient(forward.height(), forward.width());
  const Vec gx = grad.apply(st.x);
  ConstraintResiduals c;
  c.forward = (forward.apply(st.x) - y_bar).norm();
  c.split_plus = (gx + st.s1 - st.w).norm();
  c.split_minus = (gx - st.s2 + st.w).norm();
  c.budget = std::abs(st.w.sum() + st.r - budget);
  if (transform && st.z.size() > 0) c.transform = (st.z - transform->apply(st.x)).norm();
  c.min_s1 = st.s1.size() ? st.s1.minCoeff() : 0.0;
  c.min_s2 = st.s2.size() ? st.s2.minCoeff() : 0.0;
  c.r = st.r;
  return c;
}

TvSplitState anchor_state(const ApproxAnchor& anchor, const LinearOperator* transform) {
  const auto& xb = anchor.x_bar;
  const LinearOperator grad = LinearOperator::gradient(xb.height, xb.width);
  const Vec gx = grad.apply(xb.data);
  TvSplitState st;
  st.x = xb.data;
  st.w = gx.cwiseAbs();
  st.s1 = st.w - gx;
  st.s2 = gx + st.w;
  st.r = 0.0;
  st.lambda_x = Vec::Zero(anchor.y_bar.size());
  st.lambda_s1 = Vec::Zero(gx.size());
  st.lambda_s2 = Vec::Zero(gx.size());
  st.lambda_r = 0.0;
  if (transform) {
    st.z = transform->apply(xb.data);
    st.lambda_z = Vec::Zero(st.z.size());
  }
  return st;
}

TvSplitSolver::TvSplitSolver(const DeblurParams& p)
    : forward_(p.K),
      gradient_(LinearOperator::gradient(p.K.height(), p.K.width())),
      anchor_(p.anchor),
      data_term_(p.D_of_y.data),
      eta_(1.0),
      beta_(p.beta),
      tau_(p.tau),
      max_iters_(p.max_iters),
      tol_(p.tol),
      scaling_(p.scaling) {
  validate();
  // beta K^T K + (1 + tau) I + 2 beta grad^T grad
  system_.emplace(SpectralSolveSpec{1.0 + tau_, beta_, 2.0 * beta_, 0.0},
                  SpectralOperators{&forward_, &gradient_, nullptr});
  forward_rhs_ = beta_ * forward_.adjoint(anchor_.y_bar);
}

TvSplitSolver::TvSplitSolver(const CsMriParams& p)
    : forward_(p.PF),
      transform_(p.T),
      gradient_(LinearOperator::gradient(p.PF.height(), p.PF.width())),
      anchor_(p.anchor),
      data_term_(p.D_of_y.data),
      eta_(p.eta),
      rho_(p.rho),
      beta_(p.beta),
      tau_(p.tau),
      max_iters_(p.max_iters),
      tol_(p.tol),
      scaling_(p.scaling) {
  if (!(eta_ > 0.0)) throw ConfigError("csmri: eta must be > 0");
  if (!(rho_ > 0.0)) throw ConfigError("csmri: rho must be > 0");
  validate();
  if (transform_->input_dims() != forward_.input_dims() ||
      transform_->output_dims() != forward_.input_dims()) {
    throw InputError("csmri: transform must map the image grid to itself");
  }
  // beta F^T P^T P F + (eta + tau) I + 2 beta grad^T grad + beta T^T T
  system_.emplace(SpectralSolveSpec{eta_ + tau_, beta_, 2.0 * beta_, beta_},
                  SpectralOperators{&forward_, &gradient_, &*transform_});
  forward_rhs_ = beta_ * forward_.adjoint(anchor_.y_bar);
}

void TvSplitSolver::validate() const {
  if (!(beta_ > 0.0)) throw ConfigError("tv scheme: beta must be > 0");
  if (!(tau_ > 0.0)) throw ConfigError("tv scheme: tau must be > 0");
  if (max_iters_ <= 0) throw ConfigError("tv scheme: max_iters must be positive");
  if (forward_.height() == 0) throw InputError("tv scheme: forward operator must act on an image grid");
  const Eigen::Index n = forward_.input_dims();
  if (anchor_.x_bar.size() != n) throw InputError("tv scheme: anchor image does not match operator grid");
  if (anchor_.y_bar.size() != forward_.output_dims()) {
    throw InputError("tv scheme: anchor y_bar does not match operator output");
  }
  if (data_term_.size() != n) throw InputError("tv scheme: D(y) does not match operator grid");
}

double TvSplitSolver::upper_objective(const Vec& x) const {
  double v = 0.5 * eta_ * (x - data_term_).squaredNorm();
  if (transform_) v += rho_ * transform_->apply(x).lpNorm<1>();
  return v;
}

ConstraintResiduals TvSplitSolver::residuals(const TvSplitState& st) const {
  return constraint_residuals(st, forward_, anchor_.y_bar, budget(),
                              transform_ ? &*transform_ : nullptr);
}

TvSplitState TvSplitSolver::step(const TvSplitState& st) const {
  const double beta = beta_;
  const double tau = tau_;
  const double denom = beta + tau;
  const double budget = this->budget();
  const Vec gx = gradient_.apply(st.x);

  TvSplitState next;
  next.k = st.k + 1;

  if (transform_) {
    const Vec u = (beta * transform_->apply(st.x) - st.lambda_z + tau * st.z) / denom;
    next.z = soft_threshold(u, rho_ / denom);
  }

  next.s1 = ((beta * (st.w - gx) - st.lambda_s1 + tau * st.s1) / denom).cwiseMax(0.0);
  next.s2 = ((beta * (st.w + gx) + st.lambda_s2 + tau * st.s2) / denom).cwiseMax(0.0);
  next.r = std::max(0.0, (beta * (budget - st.w.sum()) - st.lambda_r + tau * st.r) / denom);

  Vec c = beta * next.s1 + st.lambda_s1 + beta * next.s2 - st.lambda_s2 + tau * st.w;
  c.array() += beta * budget - beta * next.r - st.lambda_r;
  next.w = rank_one_solve(2.0 * beta + tau, beta, c);

  Vec inner;
  if (scaling_ == MultiplierScaling::Printed) {
    inner = beta * (next.s2 - st.lambda_s2) - beta * (next.s1 + st.lambda_s1);
  } else {
    inner = (beta * next.s2 - st.lambda_s2) - (beta * next.s1 + st.lambda_s1);
  }
  Vec d = eta_ * data_term_ + forward_rhs_ + gradient_.adjoint(inner) -
          forward_.adjoint(st.lambda_x) + tau * st.x;
  if (transform_) d += transform_->adjoint(beta * next.z + st.lambda_z);
  next.x = system_->solve(d);
  if (!next.x.allFinite()) throw NumericalError("x", "x-update produced non-finite values");
  if (!next.w.allFinite()) throw NumericalError("w", "w-update produced non-finite values");

  const Vec gx_next = gradient_.apply(next.x);
  next.lambda_x = st.lambda_x + beta * (forward_.apply(next.x) - anchor_.y_bar);
  if (transform_) next.lambda_z = st.lambda_z + beta * (next.z - transform_->apply(next.x));
  next.lambda_s1 = st.lambda_s1 + beta * (gx_next + next.s1 - next.w);
  next.lambda_s2 = st.lambda_s2 + beta * (gx_next - next.s2 + next.w);
  next.lambda_r = st.lambda_r + beta * (next.w.sum() + next.r - budget);
  return next;
}

TvRunResult TvSplitSolver::run(TvSplitState init) const {
  TvRunResult res;
  TvSplitState cur = std::move(init);
  if (cur.x.size() != forward_.input_dims()) throw InputError("tv scheme: initial state has wrong size");
  for (int it = 0; it < max_iters_; ++it) {
    TvSplitState next = step(cur);
    TvTraceRow row;
    row.k = next.k;
    row.residuals = residuals(next);
    const double xn = next.x.norm();
    row.rel_change = (next.x - cur.x).norm() / (xn > 0.0 ? xn : 1.0);
    row.objective_F = upper_objective(next.x);
    res.trace.push_back(row);
    cur = std::move(next);
    res.iterations = it + 1;
    if (std::max(row.residuals.max_violation(), row.rel_change) <= tol_) {
      res.converged = true;
      break;
    }
  }
  res.state = std::move(cur);
  return res;
}

TvSplitState deblur_step(const DeblurParams& p, const TvSplitState& st) {
  return TvSplitSolver(p).step(st);
}

TvSplitState csmri_step(const CsMriParams& p, const TvSplitState& st) {
  return TvSplitSolver(p).step(st);
}

TvRunResult run_deblur(const DeblurParams& p) { return TvSplitSolver(p).run(); }

TvRunResult run_csmri(const CsMriParams& p) { return TvSplitSolver(p).run(); }

}  // namespace bio
