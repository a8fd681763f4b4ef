#pragma once

#include <limits>
#include <vector>

#include <Eigen/Sparse>

#include "bio/image.hpp"

namespace bio::oracle {

using SparseMat = Eigen::SparseMatrix<double>;

/// min 1/2 z^T H z + c^T z  s.t.  E z = b,  C z <= d.
struct QpProblem {
  Mat H;
  Vec c;
  Mat E;
  Vec b;
  SparseMat C;
  Vec d;
};

struct QpSolution {
  Vec z;
  Vec eq_multipliers;
  Vec ineq_multipliers;
  double kkt_residual = 0;  // max of stationarity, feasibility, complementarity
  int iterations = 0;
};

/// Mehrotra predictor-corrector interior-point method with dense Newton
/// systems. Redundant equality rows are removed through an SVD.
QpSolution solve_qp(const QpProblem& qp, double tol = 1e-11, int max_iters = 200);

/// Small dense instance of
///   min 1/2 x^T Q x - q^T x + rho ||T x||_1
///   s.t. A x = y_bar, ||G x||_1 <= budget, lo <= x <= hi.
/// Empty matrices / vectors switch the corresponding term off.
struct DenseInstance {
  Mat Q;
  Vec q;
  Mat A;
  Vec y_bar;
  Mat G;
  double budget = std::numeric_limits<double>::infinity();
  Mat T;
  double rho = 0.0;
  Vec lo, hi;
};

struct Certified {
  Vec x;
  double certificate = 0;
};

/// Reference solution of the single-level reformulation; throws
/// NumericalError when the KKT certificate exceeds 1e-8.
Certified qp_reference(const DenseInstance& inst);

/// Reference minimizer of 1/2||A x - y||^2 + gamma ||G x||_1.
Certified lower_reference(const Mat& A, const Vec& y, double gamma, const Mat& G);

/// Minimum Euclidean distance from x to a finite sample of a solution set.
double solution_distance(const Vec& x, const std::vector<Vec>& samples);

inline constexpr double kCertificateTol = 1e-8;

}  // namespace bio::oracle
