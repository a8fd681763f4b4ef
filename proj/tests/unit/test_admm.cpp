#include <doctest.h>

#include <cmath>
#include <string>

#include "bio/admm.hpp"
#include "bio/errors.hpp"
#include "bio/oracle.hpp"
#include "support.hpp"

using namespace bio;

namespace {

BilevelInstance coincidence(const Vec& y) {
  BilevelInstance inst;
  inst.f = IsotropicQuadratic{1.0, y};
  inst.forward = LinearOperator::identity(y.size());
  inst.y_bar = y;
  return inst;
}

struct BoxCase {
  BilevelInstance inst;
  oracle::DenseInstance dense;
};

// f = 1/2 x^T Q x - q^T x, g = (mu/2)||x - c||^2, box constraint, A x = A x0.
BoxCase box_case(testing::Gen& g) {
  const int n = 8, m = 3;
  const Mat B = g.mat(n, n);
  const Mat Q = B.transpose() * B / n + 0.1 * Mat::Identity(n, n);
  const Vec q = g.vec(n);
  const double mu = 0.5;
  const Vec c = g.vec(n);
  const Mat A = g.mat(m, n);
  const Vec lo = -0.5 * Vec::Ones(n), hi = 0.5 * Vec::Ones(n);
  Vec x0(n);
  for (int i = 0; i < n; ++i) x0[i] = g.uniform(-0.3, 0.3);

  BoxCase bc;
  bc.inst.f = DenseQuadratic{Q, q};
  bc.inst.g_prox = prox_squared_distance(mu, c);
  bc.inst.g_value = [mu, c](const Vec& x) { return 0.5 * mu * (x - c).squaredNorm(); };
  bc.inst.phi_project = project_box(lo, hi);
  bc.inst.forward = LinearOperator::dense(A);
  bc.inst.y_bar = A * x0;

  bc.dense.Q = Q + mu * Mat::Identity(n, n);
  bc.dense.q = q + mu * c;
  bc.dense.A = A;
  bc.dense.y_bar = bc.inst.y_bar;
  bc.dense.lo = lo;
  bc.dense.hi = hi;
  return bc;
}

double max_state_change(const AdmmState& a, const AdmmState& b) {
  return std::max({(a.x - b.x).norm(), (a.z - b.z).norm(), (a.s - b.s).norm(),
                   (a.lambda1 - b.lambda1).norm(), (a.lambda2 - b.lambda2).norm(),
                   (a.lambda3 - b.lambda3).norm()});
}

}  // namespace

TEST_CASE("coincidence instance converges to y") {
  testing::Gen g(1);
  const Vec y = g.vec(10);
  const BilevelInstance inst = coincidence(y);
  AdmmConfig cfg;
  cfg.tol_kkt = 1e-8;
  cfg.max_iters = 200;
  const auto [st, rec] = admm_run(inst, cfg, AdmmState::zeros(inst));
  CHECK(rec.converged);
  CHECK(rec.iterations <= 200);
  CHECK((st.x - y).norm() < 1e-7);
}

TEST_CASE("KKT points are fixed points") {
  testing::Gen g(2);
  const Vec y = g.vec(6);
  const BilevelInstance inst = coincidence(y);
  const AdmmState kkt = AdmmState::from_point(inst, y);
  const AdmmState next = admm_step(inst, kkt, AdmmConfig{});
  CHECK(max_state_change(kkt, next) <= 1e-10);
  const KktResidual r = kkt_residuals(inst, kkt, next, 1.0);
  CHECK(r.total <= 1e-10);
  CHECK(kkt_residuals(inst, kkt, kkt, 1.0).primal_A == 0.0);

  BoxCase bc = box_case(g);
  AdmmConfig cfg;
  cfg.tol_kkt = 1e-13;
  cfg.max_iters = 50000;
  const auto [st, rec] = admm_run(bc.inst, cfg, AdmmState::zeros(bc.inst));
  REQUIRE(rec.converged);
  CHECK(max_state_change(st, admm_step(bc.inst, st, cfg)) <= 1e-10);
}

TEST_CASE("multiplier updates are exact ascent steps") {
  testing::Gen g(3);
  BoxCase bc = box_case(g);
  AdmmConfig cfg;
  cfg.beta = 2.5;
  AdmmState st = AdmmState::zeros(bc.inst);
  for (int k = 0; k < 5; ++k) {
    const AdmmState next = admm_step(bc.inst, st, cfg);
    CHECK((next.lambda1 - st.lambda1 - cfg.beta * (next.z - next.x)).norm() < 1e-13);
    CHECK((next.lambda2 - st.lambda2 - cfg.beta * (next.s - next.x)).norm() < 1e-13);
    const Vec ax = bc.inst.forward.apply(next.x) - bc.inst.y_bar;
    CHECK((next.lambda3 - st.lambda3 - cfg.beta * ax).norm() < 1e-12);
    CHECK(next.k == st.k + 1);
    st = next;
  }
}

TEST_CASE("vanishing proximal weight reproduces classical three-block ADMM") {
  testing::Gen g(4);
  BoxCase bc = box_case(g);
  const auto& f = std::get<DenseQuadratic>(bc.inst.f);
  const Mat A = bc.dense.A;
  const double beta = 1.3;
  AdmmConfig cfg;
  cfg.beta = beta;
  cfg.tau = 1e-14;
  const ProximalAdmm solver(bc.inst, cfg);

  // Hand-derived updates with tau = 0.
  const Mat M = f.Q + 2.0 * beta * Mat::Identity(8, 8) + beta * A.transpose() * A;
  AdmmState ours = AdmmState::zeros(bc.inst);
  AdmmState classic = ours;
  for (int k = 0; k < 60; ++k) {
    ours = solver.step(ours);
    AdmmState next;
    next.z = bc.inst.g_prox(classic.x - classic.lambda1 / beta, 1.0 / beta);
    next.s = bc.inst.phi_project(classic.x - classic.lambda2 / beta);
    const Vec rhs = f.q + classic.lambda1 + classic.lambda2 + beta * (next.z + next.s) -
                    A.transpose() * (classic.lambda3 - beta * bc.inst.y_bar);
    next.x = M.llt().solve(rhs);
    next.lambda1 = classic.lambda1 + beta * (next.z - next.x);
    next.lambda2 = classic.lambda2 + beta * (next.s - next.x);
    next.lambda3 = classic.lambda3 + beta * (A * next.x - bc.inst.y_bar);
    classic = next;
    REQUIRE(max_state_change(ours, classic) <= 1e-8);
  }
}

TEST_CASE("box-constrained dense instances match the interior-point oracle") {
  testing::Gen g(5);
  for (int trial = 0; trial < 5; ++trial) {
    BoxCase bc = box_case(g);
    const auto ref = oracle::qp_reference(bc.dense);
    AdmmConfig cfg;
    cfg.max_iters = 5000;
    const auto [st, rec] = admm_run(bc.inst, cfg, AdmmState::zeros(bc.inst));
    REQUIRE(rec.converged);
    const auto& last = rec.rows.back().residual;
    CHECK(last.primal_z <= cfg.tol_kkt);
    CHECK(last.primal_s <= cfg.tol_kkt);
    CHECK(last.primal_A <= cfg.tol_kkt);
    CHECK((st.x - ref.x).norm() <= 1e-5);
    CHECK(bc.inst.upper_objective(st.x) <= bc.inst.upper_objective(ref.x) + 1e-5);
  }
}

TEST_CASE("residuals settle into a mostly decreasing tail") {
  testing::Gen g(6);
  BoxCase bc = box_case(g);
  AdmmConfig cfg;
  cfg.tol_kkt = 1e-10;
  cfg.max_iters = 20000;
  const auto [st, rec] = admm_run(bc.inst, cfg, AdmmState::zeros(bc.inst));
  REQUIRE(rec.converged);
  const size_t burn = rec.rows.size() / 5;
  size_t down = 0, total = 0;
  for (size_t k = burn + 1; k < rec.rows.size(); ++k, ++total) {
    if (rec.rows[k].residual.total <= rec.rows[k - 1].residual.total) ++down;
  }
  CHECK(static_cast<double>(down) >= 0.9 * static_cast<double>(total));
}

TEST_CASE("prox-only f agrees with the closed-form quadratic") {
  testing::Gen g(7);
  const Eigen::Index n = 10;
  const Vec c = g.vec(n);
  const Mat A = g.mat(4, n);
  BilevelInstance quad;
  quad.f = IsotropicQuadratic{2.0, c};
  quad.g_prox = prox_l1(0.1);
  quad.phi_project = project_l2_ball(1.0, Vec::Zero(n));
  quad.forward = LinearOperator::dense(A);
  quad.y_bar = A * (0.1 * g.vec(n));
  BilevelInstance prox = quad;
  prox.f = ProxOnly{prox_squared_distance(2.0, c), nullptr, 1e-12, 20000};

  AdmmConfig cfg;
  cfg.tol_kkt = 1e-8;
  cfg.max_iters = 20000;
  const auto a = admm_run(quad, cfg, AdmmState::zeros(quad));
  const auto b = admm_run(prox, cfg, AdmmState::zeros(prox));
  REQUIRE(a.second.converged);
  REQUIRE(b.second.converged);
  CHECK((a.first.x - b.first.x).norm() < 1e-6);
}

TEST_CASE("spectral and dense x-solves agree") {
  testing::Gen g(8);
  const auto K = LinearOperator::convolution(g.kernel(3, 3), 6, 6);
  const Vec c = g.vec(36);
  BilevelInstance fft;
  fft.f = IsotropicQuadratic{1.0, c};
  fft.g_prox = prox_l1(0.05);
  fft.forward = K;
  fft.y_bar = K.apply(g.vec(36));
  BilevelInstance dense = fft;
  dense.forward = LinearOperator::dense(to_dense(K));
  AdmmState a = AdmmState::zeros(fft), b = AdmmState::zeros(dense);
  for (int k = 0; k < 30; ++k) {
    a = admm_step(fft, a, AdmmConfig{});
    b = admm_step(dense, b, AdmmConfig{});
  }
  CHECK(max_state_change(a, b) < 1e-10);
}

TEST_CASE("configuration and shape errors") {
  const BilevelInstance inst = coincidence(Vec::Ones(3));
  AdmmConfig bad;
  bad.tau = 0.0;
  CHECK_THROWS_AS(admm_run(inst, bad, AdmmState::zeros(inst)), ConfigError);
  bad = AdmmConfig{};
  bad.beta = -1.0;
  CHECK_THROWS_AS(admm_run(inst, bad, AdmmState::zeros(inst)), ConfigError);
  CHECK_THROWS_AS(AdmmState::from_point(inst, Vec::Zero(4)), InputError);
}

TEST_CASE("run record csv") {
  const BilevelInstance inst = coincidence(Vec::Ones(3));
  AdmmConfig cfg;
  cfg.max_iters = 3;
  cfg.tol_kkt = 0.0;
  const auto [st, rec] = admm_run(inst, cfg, AdmmState::zeros(inst));
  CHECK_FALSE(rec.converged);
  CHECK(rec.iterations == 3);
  const std::string csv = rec.to_csv();
  CHECK(csv.rfind("k,primal_z,primal_s,primal_A,dual,rel_err_x,objective_F\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
}
