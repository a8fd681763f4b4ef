#include <doctest.h>

#include <cmath>

#include "bio/dataop.hpp"
#include "bio/errors.hpp"
#include "bio/harness.hpp"
#include "bio/tv.hpp"
#include "bio/tvscheme.hpp"
#include "support.hpp"

using namespace bio;

namespace {

ApproxAnchor anchor_for(const LinearOperator& A, const Vec& y, double gamma, double tol) {
  const LowerProblem prob(A, y, gamma);
  ApgConfig cfg;
  cfg.rel_tol = tol;
  return apg_solve(prob, cfg);
}

DeblurParams blur_params(testing::Gen& g, int n) {
  DeblurParams p;
  p.K = LinearOperator::convolution(gaussian_kernel(0.8), n, n);
  const ImageGrid x = g.image(n, n);
  Vec y = p.K.apply(x.data);
  for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += 0.01 * g.normal();
  p.anchor = anchor_for(p.K, y, 1e-2, 1e-3);
  p.D_of_y = ImageGrid(n, n, y);
  return p;
}

}  // namespace

TEST_CASE("anchor state is feasible") {
  testing::Gen g(1);
  const DeblurParams p = blur_params(g, 8);
  const TvSplitState st = anchor_state(p.anchor);
  const ConstraintResiduals c = constraint_residuals(st, p.K, p.anchor.y_bar, p.anchor.tv_norm);
  CHECK(c.max_violation() <= 1e-10);
  CHECK(c.min_s1 >= 0.0);
  CHECK(c.min_s2 >= 0.0);
  CHECK(c.r == 0.0);

  const auto T = LinearOperator::ortho_transform(TransformBasis::Dct, 8, 8);
  const TvSplitState stz = anchor_state(p.anchor, &T);
  CHECK(constraint_residuals(stz, p.K, p.anchor.y_bar, p.anchor.tv_norm, &T).max_violation() <= 1e-10);
}

TEST_CASE("zero state measures the full forward residual") {
  testing::Gen g(2);
  const DeblurParams p = blur_params(g, 8);
  TvSplitState st = anchor_state(p.anchor);
  st.x.setZero();
  const ConstraintResiduals c = constraint_residuals(st, p.K, p.anchor.y_bar, p.anchor.tv_norm);
  CHECK(c.forward == doctest::Approx(p.anchor.y_bar.norm()));
}

TEST_CASE("a feasible optimal state is a fixed point of the deblur step") {
  testing::Gen g(3);
  DeblurParams p = blur_params(g, 8);
  p.K = LinearOperator::identity(8, 8);
  p.anchor = anchor_for(p.K, p.D_of_y.data, 1e-2, 1e-4);
  p.D_of_y = p.anchor.x_bar;
  const TvSplitState st = anchor_state(p.anchor);
  const TvSplitState next = deblur_step(p, st);
  CHECK((next.x - st.x).norm() <= 1e-10);
  CHECK((next.w - st.w).norm() <= 1e-10);
  CHECK((next.s1 - st.s1).norm() <= 1e-10);
  CHECK((next.s2 - st.s2).norm() <= 1e-10);
  CHECK(std::abs(next.r - st.r) <= 1e-10);
  CHECK(next.lambda_x.norm() <= 1e-10);
}

TEST_CASE("identity forward model with D(y) = x_bar stays at the anchor") {
  testing::Gen g(4);
  DeblurParams p;
  p.K = LinearOperator::identity(8, 8);
  const Vec y = g.image(8, 8).data;
  p.anchor = anchor_for(p.K, y, 1e-2, 1e-4);
  p.D_of_y = p.anchor.x_bar;
  p.tol = 1e-10;
  const TvRunResult res = run_deblur(p);
  CHECK(res.converged);
  CHECK((res.state.x - p.anchor.x_bar.data).norm() < 1e-8);
}

TEST_CASE("printed and derived multiplier scalings coincide at beta = 1") {
  testing::Gen g(5);
  DeblurParams p = blur_params(g, 8);
  p.max_iters = 50;
  p.tol = 0.0;
  DeblurParams q = p;
  q.scaling = MultiplierScaling::Derived;
  const TvRunResult a = run_deblur(p), b = run_deblur(q);
  CHECK((a.state.x - b.state.x).norm() == 0.0);

  p.beta = q.beta = 3.0;
  const TvRunResult c = run_deblur(p), d = run_deblur(q);
  CHECK((c.state.x - d.state.x).norm() > 0.0);
}

TEST_CASE("slacks stay nonnegative and multipliers ascend by beta") {
  testing::Gen g(6);
  DeblurParams p = blur_params(g, 8);
  p.beta = 2.0;
  const TvSplitSolver solver(p);
  TvSplitState st = anchor_state(p.anchor);
  for (int k = 0; k < 40; ++k) {
    const TvSplitState next = solver.step(st);
    CHECK(next.s1.minCoeff() >= -1e-10);
    CHECK(next.s2.minCoeff() >= -1e-10);
    CHECK(next.r >= -1e-10);
    const Vec kx = p.K.apply(next.x) - p.anchor.y_bar;
    CHECK((next.lambda_x - st.lambda_x - p.beta * kx).norm() < 1e-12);
    const double budget_res = next.w.sum() + next.r - p.anchor.tv_norm;
    CHECK(next.lambda_r - st.lambda_r == doctest::Approx(p.beta * budget_res));
    st = next;
  }
}

TEST_CASE("fidelity-dominated CS-MRI returns D(y)") {
  testing::Gen g(7);
  CsMriParams p;
  const int n = 8;
  p.PF = LinearOperator::masked_fourier(ImageGrid::constant(n, n, 1.0));
  p.T = LinearOperator::ortho_transform(TransformBasis::Dct, n, n);
  const ImageGrid truth = g.image(n, n);
  const Vec y = p.PF.apply(truth.data);
  p.anchor = anchor_for(p.PF, y, 1e-6, 1e-8);
  p.D_of_y = truth;
  p.eta = 1e6;
  p.max_iters = 5000;
  const TvRunResult res = run_csmri(p);
  CHECK((res.state.x - truth.data).lpNorm<Eigen::Infinity>() <= 1e-3);
}

TEST_CASE("full sampling and vanishing rho reduce CS-MRI to the deblur scheme") {
  testing::Gen g(8);
  const int n = 8;
  const ImageGrid truth = g.image(n, n);
  DeblurParams d;
  d.K = LinearOperator::identity(n, n);
  d.anchor = anchor_for(d.K, truth.data, 1e-2, 1e-6);
  d.D_of_y = g.image(n, n);
  d.tol = 1e-9;
  d.max_iters = 20000;

  CsMriParams c;
  c.PF = LinearOperator::masked_fourier(ImageGrid::constant(n, n, 1.0));
  c.T = LinearOperator::ortho_transform(TransformBasis::Haar, n, n);
  c.anchor = make_anchor(LowerProblem(c.PF, c.PF.apply(truth.data), 1e-2), d.anchor.x_bar.data);
  c.D_of_y = d.D_of_y;
  c.rho = 1e-12;
  c.tol = 1e-9;
  c.max_iters = 20000;

  const TvRunResult a = run_deblur(d), b = run_csmri(c);
  CHECK((a.state.x - b.state.x).norm() <= 1e-4);
}

TEST_CASE("CS-MRI on a 16x16 phantom with a 30% Cartesian mask converges") {
  TaskSpec spec;
  spec.task = TaskKind::CsMri;
  spec.ground_truth = phantom(16, 16);
  spec.noise_sigma = 0.0;
  spec.D.kind = DSpec::Kind::Identity;
  spec.anchor = AnchorSpec::apg(1e-2);
  spec.max_iters = 20000;
  const Degraded data = degrade(spec, 5);
  const TimedAnchor anchor = compute_anchor(spec, data, spec.anchor);
  const TvRunResult res = run_bio(spec, data, anchor.anchor, data.observed_image);
  REQUIRE(res.converged);
  const auto& c = res.trace.back().residuals;
  CHECK(c.max_violation() <= 1e-6);

  // Properties of the limit.
  const LinearOperator G = LinearOperator::gradient(16, 16);
  const Vec& x = res.state.x;
  CHECK(tv_norm(G, x) <= anchor.anchor.tv_norm * (1 + 1e-4));
  CHECK((data.forward.apply(x) - anchor.anchor.y_bar).norm() <= 1e-4 * anchor.anchor.y_bar.norm());
  const Vec gx = G.apply(x);
  CHECK((res.state.w - gx.cwiseAbs()).minCoeff() >= -1e-6);
  CsMriParams p;
  p.PF = data.forward;
  p.T = LinearOperator::ortho_transform(spec.basis, 16, 16);
  p.anchor = anchor.anchor;
  p.D_of_y = data.observed_image;
  const TvSplitSolver solver(p);
  CHECK(solver.upper_objective(x) <= solver.upper_objective(anchor.anchor.x_bar.data) + 1e-6);
}

TEST_CASE("parameter validation") {
  testing::Gen g(9);
  DeblurParams p = blur_params(g, 8);
  p.tau = 0.0;
  CHECK_THROWS_AS(TvSplitSolver{p}, ConfigError);
  p.tau = 0.1;
  p.D_of_y = ImageGrid(4, 4);
  CHECK_THROWS_AS(TvSplitSolver{p}, InputError);

  CsMriParams c;
  c.PF = LinearOperator::masked_fourier(ImageGrid::constant(8, 8, 1.0));
  c.T = LinearOperator::ortho_transform(TransformBasis::Dct, 8, 8);
  c.anchor = make_anchor(LowerProblem(c.PF, Vec::Zero(128), 0.1), Vec::Zero(64));
  c.D_of_y = ImageGrid::constant(8, 8, 0.0);
  c.rho = 0.0;
  CHECK_THROWS_AS(TvSplitSolver{c}, ConfigError);
}

TEST_CASE("trace csv columns") {
  testing::Gen g(10);
  DeblurParams p = blur_params(g, 8);
  p.max_iters = 4;
  p.tol = 0.0;
  const TvRunResult res = run_deblur(p);
  CHECK(res.trace.size() == 4);
  for (size_t k = 0; k < res.trace.size(); ++k) CHECK(res.trace[k].k == static_cast<int>(k) + 1);
  const std::string csv = res.to_csv();
  CHECK(csv.rfind("k,forward,split_plus,split_minus,budget,transform,min_s1,min_s2,r,rel_change,objective_F\n", 0) == 0);
}
