#pragma once

#include "bio/linop.hpp"

namespace bio {

/// Coefficients of the system (a I + b A^T A + c grad^T grad + d T^T T).
struct SpectralSolveSpec {
  double identity = 1.0;        // a
  double forward_gram = 0.0;    // b, multiplies K^T K or F^T P^T P F
  double gradient_gram = 0.0;   // c
  double transform_gram = 0.0;  // d
};

/// Operators referenced by a SpectralSolveSpec. A null pointer is only
/// allowed when the matching coefficient is zero.
struct SpectralOperators {
  const LinearOperator* forward = nullptr;
  const LinearOperator* gradient = nullptr;
  const LinearOperator* transform = nullptr;
};

/// Pre-factored periodic system, diagonal in the DFT basis.
class SpectralSystem {
 public:
  SpectralSystem(const SpectralSolveSpec& spec, const SpectralOperators& ops);

  Vec solve(const Vec& rhs) const;
  /// Applies the system matrix through the operators themselves.
  Vec multiply(const Vec& x) const;

  const Vec& symbol() const { return symbol_; }

 private:
  SpectralSolveSpec spec_;
  SpectralOperators ops_;
  int height_ = 0;
  int width_ = 0;
  Vec symbol_;
};

Vec spectral_solve(const SpectralSolveSpec& spec, const SpectralOperators& ops, const Vec& rhs);

/// ((scale) I + beta e e^T)^{-1} b by Sherman-Morrison.
Vec rank_one_solve(double scale, double beta, const Vec& b);

}  // namespace bio
