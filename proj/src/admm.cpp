#include "bio/admm.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "bio/errors.hpp"
#include "bio/spectral.hpp"

namespace bio {

double BilevelInstance::upper_objective(const Vec& x) const {
  double fval = std::visit(
      [&](const auto& f) -> double {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, IsotropicQuadratic>) {
          return 0.5 * f.eta * (x - f.center).squaredNorm();
        } else if constexpr (std::is_same_v<T, DenseQuadratic>) {
          return 0.5 * x.dot(f.Q * x) - f.q.dot(x);
        } else {
          return f.value ? f.value(x) : std::numeric_limits<double>::quiet_NaN();
        }
      },
      f);
  return fval + (g_value ? g_value(x) : 0.0);
}

AdmmState AdmmState::zeros(const BilevelInstance& inst) {
  const Eigen::Index n = inst.forward.input_dims();
  AdmmState st;
  st.x = st.z = st.s = st.lambda1 = st.lambda2 = Vec::Zero(n);
  st.lambda3 = Vec::Zero(inst.forward.output_dims());
  return st;
}

AdmmState AdmmState::from_point(const BilevelInstance& inst, const Vec& x0) {
  AdmmState st = zeros(inst);
  if (x0.size() != st.x.size()) throw InputError("admm: initial point has wrong length");
  st.x = st.z = st.s = x0;
  return st;
}

KktResidual kkt_residuals(const BilevelInstance& inst, const AdmmState& prev,
                          const AdmmState& cur, double beta) {
  KktResidual r;
  r.primal_z = (cur.z - cur.x).norm();
  r.primal_s = (cur.s - cur.x).norm();
  r.primal_A = (inst.forward.apply(cur.x) - inst.y_bar).norm();
  r.dual = beta * ((cur.z - prev.z).norm() + (cur.s - prev.s).norm());
  r.total = std::max({r.primal_z, r.primal_s, r.primal_A, r.dual});
  return r;
}

std::string RunRecord::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "k,primal_z,primal_s,primal_A,dual,rel_err_x,objective_F\n";
  for (const auto& row : rows) {
    os << row.k << ',' << row.residual.primal_z << ',' << row.residual.primal_s << ','
       << row.residual.primal_A << ',' << row.residual.dual << ',' << row.rel_err_x << ','
       << row.objective_F << '\n';
  }
  return os.str();
}

struct ProximalAdmm::XSolver {
  std::optional<SpectralSystem> spectral;
  std::optional<Eigen::LLT<Mat>> dense;
  double lipschitz = 0.0;  // ProxOnly inner loop
};

ProximalAdmm::~ProximalAdmm() = default;
ProximalAdmm::ProximalAdmm(ProximalAdmm&&) noexcept = default;
ProximalAdmm& ProximalAdmm::operator=(ProximalAdmm&&) noexcept = default;

ProximalAdmm::ProximalAdmm(BilevelInstance inst, AdmmConfig cfg)
    : inst_(std::move(inst)), cfg_(cfg), xsolver_(std::make_unique<XSolver>()) {
  if (!(cfg_.beta > 0.0)) throw ConfigError("admm: beta must be > 0");
  if (!(cfg_.tau > 0.0)) throw ConfigError("admm: tau must be > 0");
  if (cfg_.max_iters <= 0) throw ConfigError("admm: max_iters must be positive");
  if (inst_.y_bar.size() != inst_.forward.output_dims()) {
    throw InputError("admm: y_bar length does not match operator output");
  }
  const Eigen::Index n = inst_.forward.input_dims();
  const double beta = cfg_.beta;
  const double diag = 2.0 * beta + cfg_.tau;

  // (Q + (2 beta + tau) I + beta A^T A) x = rhs
  if (const auto* f = std::get_if<IsotropicQuadratic>(&inst_.f)) {
    if (f->center.size() != n) throw InputError("admm: quadratic centre has wrong length");
    if (inst_.forward.gram_symbol()) {
      SpectralSolveSpec spec{f->eta + diag, beta, 0.0, 0.0};
      xsolver_->spectral.emplace(spec, SpectralOperators{&inst_.forward, nullptr, nullptr});
      return;
    }
    const Mat A = to_dense(inst_.forward);
    Mat M = beta * A.transpose() * A;
    M.diagonal().array() += f->eta + diag;
    xsolver_->dense.emplace(M);
  } else if (const auto* f = std::get_if<DenseQuadratic>(&inst_.f)) {
    if (f->Q.rows() != n || f->Q.cols() != n || f->q.size() != n) {
      throw InputError("admm: quadratic term has wrong dimensions");
    }
    const Mat A = to_dense(inst_.forward);
    Mat M = f->Q + beta * A.transpose() * A;
    M.diagonal().array() += diag;
    xsolver_->dense.emplace(M);
  } else {
    xsolver_->lipschitz = diag + beta * operator_norm_sq(inst_.forward) * 1.02;
    return;
  }
  if (xsolver_->dense->info() != Eigen::Success) {
    throw NumericalError("x", "x-update system is not positive definite");
  }
}

Vec ProximalAdmm::solve_x(const AdmmState& st, const Vec& z, const Vec& s) const {
  const double beta = cfg_.beta;
  const double tau = cfg_.tau;
  const LinearOperator& A = inst_.forward;
  // Everything except the f-gradient, moved to the right-hand side.
  Vec rhs = st.lambda1 + st.lambda2 - A.adjoint(st.lambda3 - beta * inst_.y_bar) +
            beta * (z + s) + tau * st.x;

  if (const auto* f = std::get_if<IsotropicQuadratic>(&inst_.f)) {
    rhs += f->eta * f->center;
  } else if (const auto* f = std::get_if<DenseQuadratic>(&inst_.f)) {
    rhs += f->q;
  } else {
    // Inner FISTA on f(x) + h(x), h(x) = 1/2 x^T M x - rhs^T x with
    // M = (2 beta + tau) I + beta A^T A.
    const auto& po = std::get<ProxOnly>(inst_.f);
    const double L = xsolver_->lipschitz;
    const double diag = 2.0 * beta + tau;
    auto grad_h = [&](const Vec& u) -> Vec {
      return diag * u + beta * A.adjoint(A.apply(u)) - rhs;
    };
    Vec x = st.x;
    Vec v = x;
    double t = 1.0;
    for (int it = 0; it < po.inner_max_iters; ++it) {
      Vec x_next = po.prox(v - grad_h(v) / L, 1.0 / L);
      if (!x_next.allFinite()) throw NumericalError("x", "inner prox-gradient produced non-finite values");
      const double change = (x_next - x).norm();
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      v = x_next + ((t - 1.0) / t_next) * (x_next - x);
      x = std::move(x_next);
      t = t_next;
      if (change <= po.inner_tol * std::max(1.0, x.norm())) break;
    }
    return x;
  }

  Vec x = xsolver_->spectral ? xsolver_->spectral->solve(rhs) : Vec(xsolver_->dense->solve(rhs));
  if (!x.allFinite()) throw NumericalError("x", "x-update produced non-finite values");
  return x;
}

AdmmState ProximalAdmm::step(const AdmmState& st) const {
  const double beta = cfg_.beta;
  const double tau = cfg_.tau;
  const double denom = beta + tau;

  AdmmState next;
  next.z = inst_.g_prox((beta * st.x - st.lambda1 + tau * st.z) / denom, 1.0 / denom);
  if (!next.z.allFinite()) throw NumericalError("z", "g prox produced non-finite values");
  next.s = inst_.phi_project((beta * st.x - st.lambda2 + tau * st.s) / denom);
  if (!next.s.allFinite()) throw NumericalError("s", "projection produced non-finite values");
  next.x = solve_x(st, next.z, next.s);
  next.lambda1 = st.lambda1 + beta * (next.z - next.x);
  next.lambda2 = st.lambda2 + beta * (next.s - next.x);
  next.lambda3 = st.lambda3 + beta * (inst_.forward.apply(next.x) - inst_.y_bar);
  next.k = st.k + 1;
  return next;
}

std::pair<AdmmState, RunRecord> ProximalAdmm::run(AdmmState init) const {
  RunRecord rec;
  AdmmState cur = std::move(init);
  for (int it = 0; it < cfg_.max_iters; ++it) {
    AdmmState next = step(cur);
    AdmmTraceRow row;
    row.k = next.k;
    row.residual = kkt_residuals(inst_, cur, next, cfg_.beta);
    const double xn = next.x.norm();
    row.rel_err_x = (next.x - cur.x).norm() / (xn > 0.0 ? xn : 1.0);
    row.objective_F = inst_.upper_objective(next.x);
    rec.rows.push_back(row);
    cur = std::move(next);
    rec.iterations = it + 1;
    if (row.residual.total <= cfg_.tol_kkt) {
      rec.converged = true;
      break;
    }
  }
  return {std::move(cur), std::move(rec)};
}

AdmmState admm_step(const BilevelInstance& inst, const AdmmState& st, const AdmmConfig& cfg) {
  return ProximalAdmm(inst, cfg).step(st);
}

std::pair<AdmmState, RunRecord> admm_run(const BilevelInstance& inst, const AdmmConfig& cfg,
                                         const AdmmState& init) {
  return ProximalAdmm(inst, cfg).run(init);
}

}  // namespace bio
