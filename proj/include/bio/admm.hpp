#pragma once

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "bio/linop.hpp"
#include "bio/prox.hpp"

namespace bio {

/// f(x) = (eta/2)||x - center||^2
struct IsotropicQuadratic {
  double eta = 1.0;
  Vec center;
};

/// f(x) = 1/2 x^T Q x - q^T x, Q symmetric positive semidefinite.
struct DenseQuadratic {
  Mat Q;
  Vec q;
};

/// f known only through its proximal map; the x-update then runs an inner
/// accelerated prox-gradient loop to `inner_tol`.
struct ProxOnly {
  ProxFn prox;
  ValueFn value;  // optional
  double inner_tol = 1e-8;
  int inner_max_iters = 10000;
};

using UpperSmooth = std::variant<IsotropicQuadratic, DenseQuadratic, ProxOnly>;

/// min f(x) + g(x) + i_{X_phi}(x)  s.t.  A x = y_bar
struct BilevelInstance {
  UpperSmooth f;
  ProxFn g_prox = prox_zero();
  ValueFn g_value;  // optional, used for objective traces
  ProjectFn phi_project = project_none();
  LinearOperator forward = LinearOperator::identity(1);
  Vec y_bar;

  double upper_objective(const Vec& x) const;
};

struct AdmmState {
  Vec x, z, s;
  Vec lambda1, lambda2, lambda3;
  int k = 0;

  /// Everything zero, sized for the instance.
  static AdmmState zeros(const BilevelInstance& inst);
  /// x = z = s = x0, multipliers zero.
  static AdmmState from_point(const BilevelInstance& inst, const Vec& x0);
};

struct AdmmConfig {
  double beta = 1.0;
  double tau = 0.1;
  int max_iters = 5000;
  double tol_kkt = 1e-6;
};

struct KktResidual {
  double primal_z = 0;  // ||z - x||
  double primal_s = 0;  // ||s - x||
  double primal_A = 0;  // ||A x - y_bar||
  double dual = 0;      // beta (||dz|| + ||ds||)
  double total = 0;
};

struct AdmmTraceRow {
  int k = 0;
  KktResidual residual;
  double rel_err_x = 0;
  double objective_F = 0;
};

struct RunRecord {
  std::vector<AdmmTraceRow> rows;
  bool converged = false;
  int iterations = 0;

  /// CSV with header k,primal_z,primal_s,primal_A,dual,rel_err_x,objective_F
  std::string to_csv() const;
};

KktResidual kkt_residuals(const BilevelInstance& inst, const AdmmState& prev,
                          const AdmmState& cur, double beta);

/// Proximal ADMM with the x-update solver prepared once per instance.
class ProximalAdmm {
 public:
  ProximalAdmm(BilevelInstance inst, AdmmConfig cfg);
  ~ProximalAdmm();
  ProximalAdmm(ProximalAdmm&&) noexcept;
  ProximalAdmm& operator=(ProximalAdmm&&) noexcept;

  /// One pass of the updates z, s, x, lambda1, lambda2, lambda3 in that order.
  AdmmState step(const AdmmState& st) const;
  std::pair<AdmmState, RunRecord> run(AdmmState init) const;

  const BilevelInstance& instance() const { return inst_; }
  const AdmmConfig& config() const { return cfg_; }

 private:
  struct XSolver;
  Vec solve_x(const AdmmState& st, const Vec& z, const Vec& s) const;

  BilevelInstance inst_;
  AdmmConfig cfg_;
  std::unique_ptr<XSolver> xsolver_;
};

AdmmState admm_step(const BilevelInstance& inst, const AdmmState& st, const AdmmConfig& cfg);
std::pair<AdmmState, RunRecord> admm_run(const BilevelInstance& inst, const AdmmConfig& cfg,
                                         const AdmmState& init);

}  // namespace bio
