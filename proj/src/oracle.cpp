#include "bio/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "bio/errors.hpp"

namespace bio::oracle {
namespace {

using Triplet = Eigen::Triplet<double>;

double max_step(const Vec& v, const Vec& dv) {
  double alpha = 1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (dv[i] < 0.0) alpha = std::min(alpha, -v[i] / dv[i]);
  }
  return alpha;
}

// Rows spanning the range of E, with b projected accordingly.
void reduce_equalities(const Mat& E, const Vec& b, Mat& Er, Vec& br) {
  if (E.rows() == 0) {
    Er.resize(0, E.cols());
    br.resize(0);
    return;
  }
  Eigen::JacobiSVD<Mat> svd(E, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec& sv = svd.singularValues();
  const double cutoff = 1e-10 * std::max(1.0, sv.size() ? sv[0] : 0.0);
  Eigen::Index rank = 0;
  while (rank < sv.size() && sv[rank] > cutoff) ++rank;
  const Mat Ur = svd.matrixU().leftCols(rank);
  Er = Ur.transpose() * E;
  br = Ur.transpose() * b;
}

}  // namespace

QpSolution solve_qp(const QpProblem& qp, double tol, int max_iters) {
  const Eigen::Index n = qp.H.rows();
  if (qp.H.cols() != n || qp.c.size() != n) throw InputError("solve_qp: objective dimensions");
  if (qp.E.rows() > 0 && qp.E.cols() != n) throw InputError("solve_qp: equality dimensions");
  if (qp.C.rows() > 0 && qp.C.cols() != n) throw InputError("solve_qp: inequality dimensions");

  Mat E;
  Vec b;
  reduce_equalities(qp.E.rows() ? qp.E : Mat(0, n), qp.E.rows() ? qp.b : Vec(0), E, b);
  const Eigen::Index me = E.rows();
  const Eigen::Index m = qp.C.rows();
  const SparseMat Ct = qp.C.transpose();

  Vec z = Vec::Zero(n);
  Vec nu = Vec::Zero(me);
  Vec s = Vec::Ones(m);
  Vec mu = Vec::Ones(m);
  if (m > 0) s = (qp.d - qp.C * z).cwiseMax(1.0);

  const double scale = 1.0 + std::max({qp.c.lpNorm<Eigen::Infinity>(),
                                       b.size() ? b.lpNorm<Eigen::Infinity>() : 0.0,
                                       m ? qp.d.lpNorm<Eigen::Infinity>() : 0.0});
  QpSolution sol;
  // Best iterate seen so far; once the gap is exhausted further Newton steps
  // only amplify round-off through the ill-conditioned scaling.
  struct Snapshot {
    Vec z, nu, s, mu;
    double merit = std::numeric_limits<double>::infinity();
  } best;
  int it = 0;
  for (; it < max_iters; ++it) {
    const Vec rd = qp.H * z + qp.c + E.transpose() * nu + (m ? Vec(Ct * mu) : Vec::Zero(n));
    const Vec re = E * z - b;
    const Vec ri = m ? Vec(qp.C * z + s - qp.d) : Vec(0);
    const double gap = m ? s.dot(mu) / static_cast<double>(m) : 0.0;
    const double res = std::max({rd.lpNorm<Eigen::Infinity>(), me ? re.lpNorm<Eigen::Infinity>() : 0.0,
                                 m ? ri.lpNorm<Eigen::Infinity>() : 0.0});
    const double merit = std::max(res / scale, gap);
    if (merit < best.merit) best = {z, nu, s, mu, merit};
    if (res <= tol * scale && gap <= tol) break;
    if (m > 0 && gap <= 1e-3 * tol) break;

    const Vec w = m ? Vec(mu.cwiseQuotient(s)) : Vec(0);
    Mat K = Mat::Zero(n + me, n + me);
    K.topLeftCorner(n, n) = qp.H;
    if (m) {
      SparseMat WC = w.asDiagonal() * qp.C;
      K.topLeftCorner(n, n) += Mat(Ct * WC);
    }
    K.topLeftCorner(n, n).diagonal().array() += 1e-14;
    if (me) {
      K.topRightCorner(n, me) = E.transpose();
      K.bottomLeftCorner(me, n) = E;
    }
    Eigen::PartialPivLU<Mat> lu(K);

    // Solves the Newton system for a complementarity residual rc.
    auto direction = [&](const Vec& rc, Vec& dz, Vec& dnu, Vec& ds, Vec& dmu) {
      Vec rhs(n + me);
      Vec top = -rd;
      if (m) top -= Ct * Vec((-rc + mu.cwiseProduct(ri)).cwiseQuotient(s));
      rhs.head(n) = top;
      if (me) rhs.tail(me) = -re;
      const Vec sol_vec = lu.solve(rhs);
      dz = sol_vec.head(n);
      dnu = sol_vec.tail(me);
      if (m) {
        ds = -ri - qp.C * dz;
        dmu = (-rc - mu.cwiseProduct(ds)).cwiseQuotient(s);
      }
    };

    Vec dz, dnu, ds(m), dmu(m);
    if (m == 0) {
      direction(Vec(0), dz, dnu, ds, dmu);
      z += dz;
      nu += dnu;
      continue;
    }
    // Predictor.
    direction(s.cwiseProduct(mu), dz, dnu, ds, dmu);
    const double a_aff = std::min(max_step(s, ds), max_step(mu, dmu));
    const double gap_aff =
        (s + a_aff * ds).dot(mu + a_aff * dmu) / static_cast<double>(m);
    const double sigma = std::pow(gap_aff / std::max(gap, 1e-300), 3.0);
    // Corrector.
    Vec rc = s.cwiseProduct(mu) + ds.cwiseProduct(dmu);
    rc.array() -= sigma * gap;
    direction(rc, dz, dnu, ds, dmu);
    const double alpha = std::min(1.0, 0.995 * std::min(max_step(s, ds), max_step(mu, dmu)));
    z += alpha * dz;
    nu += alpha * dnu;
    s += alpha * ds;
    mu += alpha * dmu;
    s = s.cwiseMax(1e-300);
    mu = mu.cwiseMax(1e-300);
  }

  if (best.merit < std::numeric_limits<double>::infinity()) {
    z = std::move(best.z);
    nu = std::move(best.nu);
    s = std::move(best.s);
    mu = std::move(best.mu);
  }

  // Certificate against the original (unreduced) constraints.
  double cert = 0.0;
  {
    Vec rd = qp.H * z + qp.c + E.transpose() * nu;
    if (m) rd += Ct * mu;
    cert = rd.lpNorm<Eigen::Infinity>();
    if (qp.E.rows()) cert = std::max(cert, (qp.E * z - qp.b).lpNorm<Eigen::Infinity>());
    if (m) {
      const Vec slack = qp.d - qp.C * z;
      cert = std::max(cert, (-slack).cwiseMax(0.0).maxCoeff());
      cert = std::max(cert, slack.cwiseMax(0.0).cwiseProduct(mu).maxCoeff());
    }
  }
  sol.z = std::move(z);
  sol.eq_multipliers = std::move(nu);
  sol.ineq_multipliers = std::move(mu);
  sol.kkt_residual = cert;
  sol.iterations = it;
  return sol;
}

Certified qp_reference(const DenseInstance& inst) {
  const Eigen::Index n = inst.Q.rows();
  if (n == 0 || inst.Q.cols() != n || inst.q.size() != n) {
    throw InputError("qp_reference: quadratic term must be n x n with n > 0");
  }
  const bool has_phi = inst.G.rows() > 0 && std::isfinite(inst.budget);
  const bool has_g = inst.T.rows() > 0 && inst.rho > 0.0;
  const bool has_box = inst.lo.size() > 0;
  const Eigen::Index p = has_phi ? inst.G.rows() : 0;
  const Eigen::Index t = has_g ? inst.T.rows() : 0;
  const Eigen::Index nz = n + p + t;

  QpProblem qp;
  qp.H = Mat::Zero(nz, nz);
  qp.H.topLeftCorner(n, n) = inst.Q;
  qp.c = Vec::Zero(nz);
  qp.c.head(n) = -inst.q;
  if (has_g) qp.c.tail(t).setConstant(inst.rho);
  if (inst.A.rows() > 0) {
    qp.E = Mat::Zero(inst.A.rows(), nz);
    qp.E.leftCols(n) = inst.A;
    qp.b = inst.y_bar;
  }

  std::vector<Triplet> trip;
  std::vector<double> rhs;
  Eigen::Index row = 0;
  auto add_abs_bound = [&](const Mat& M, Eigen::Index offset) {
    // +-M x - u <= 0
    for (int sign : {1, -1}) {
      for (Eigen::Index i = 0; i < M.rows(); ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
          if (M(i, j) != 0.0) trip.emplace_back(row, j, sign * M(i, j));
        }
        trip.emplace_back(row, offset + i, -1.0);
        rhs.push_back(0.0);
        ++row;
      }
    }
  };
  if (has_phi) {
    add_abs_bound(inst.G, n);
    for (Eigen::Index i = 0; i < p; ++i) trip.emplace_back(row, n + i, 1.0);
    rhs.push_back(inst.budget);
    ++row;
  }
  if (has_g) add_abs_bound(inst.T, n + p);
  if (has_box) {
    for (Eigen::Index j = 0; j < n; ++j) {
      trip.emplace_back(row, j, 1.0);
      rhs.push_back(inst.hi[j]);
      ++row;
      trip.emplace_back(row, j, -1.0);
      rhs.push_back(-inst.lo[j]);
      ++row;
    }
  }
  qp.C.resize(row, nz);
  qp.C.setFromTriplets(trip.begin(), trip.end());
  qp.d = Eigen::Map<Vec>(rhs.data(), static_cast<Eigen::Index>(rhs.size()));

  QpSolution sol = solve_qp(qp);
  if (!(sol.kkt_residual <= kCertificateTol)) {
    throw NumericalError("oracle", "qp_reference certificate " + std::to_string(sol.kkt_residual) +
                                       " exceeds tolerance after " +
                                       std::to_string(sol.iterations) + " iterations");
  }
  return {sol.z.head(n), sol.kkt_residual};
}

Certified lower_reference(const Mat& A, const Vec& y, double gamma, const Mat& G) {
  DenseInstance inst;
  inst.Q = A.transpose() * A;
  inst.q = A.transpose() * y;
  // gamma ||G x||_1 is the l1 term with T = G and rho = gamma.
  inst.T = G;
  inst.rho = gamma;
  return qp_reference(inst);
}

double solution_distance(const Vec& x, const std::vector<Vec>& samples) {
  if (samples.empty()) throw InputError("solution_distance: empty sample set");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& s : samples) {
    if (s.size() != x.size()) throw InputError("solution_distance: dimension mismatch");
    best = std::min(best, (x - s).norm());
  }
  return best;
}

}  // namespace bio::oracle
