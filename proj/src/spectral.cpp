#include "bio/spectral.hpp"

#include <string>

#include "bio/errors.hpp"
#include "bio/fft.hpp"

namespace bio {
namespace {

void adopt_grid(const LinearOperator* op, int& h, int& w) {
  if (!op || op->height() == 0) return;
  if (h == 0) {
    h = op->height();
    w = op->width();
  } else if (h != op->height() || w != op->width()) {
    throw InputError("spectral_solve: operators act on different grids");
  }
}

}  // namespace

SpectralSystem::SpectralSystem(const SpectralSolveSpec& spec, const SpectralOperators& ops)
    : spec_(spec), ops_(ops) {
  if (!(spec.identity > 0.0)) {
    throw ConfigError("spectral_solve: identity coefficient must be > 0, got " +
                      std::to_string(spec.identity));
  }
  if (spec.forward_gram < 0.0 || spec.gradient_gram < 0.0 || spec.transform_gram < 0.0) {
    throw ConfigError("spectral_solve: coefficients must be nonnegative");
  }
  if (spec.forward_gram > 0.0 && !ops.forward) throw ConfigError("spectral_solve: missing forward operator");
  if (spec.gradient_gram > 0.0 && !ops.gradient) throw ConfigError("spectral_solve: missing gradient operator");
  if (spec.transform_gram > 0.0 && !ops.transform) throw ConfigError("spectral_solve: missing transform");

  if (spec.forward_gram > 0.0) adopt_grid(ops.forward, height_, width_);
  if (spec.gradient_gram > 0.0) {
    if (ops.gradient->kind() != LinearOperator::Kind::Gradient) {
      throw UnsupportedError("spectral_solve: gradient slot must hold a Gradient operator");
    }
    adopt_grid(ops.gradient, height_, width_);
  }
  if (spec.transform_gram > 0.0) {
    if (!ops.transform->gram_is_identity()) {
      throw UnsupportedError("spectral_solve: transform must satisfy T^T T = I");
    }
    adopt_grid(ops.transform, height_, width_);
  }

  double constant = spec.identity + spec.transform_gram;
  if (height_ == 0) {
    // Nothing grid-bound: the system is a multiple of the identity, unless the
    // forward operator is gridless but has A^T A = I.
    if (spec.forward_gram > 0.0) {
      if (!ops.forward->gram_is_identity()) {
        throw UnsupportedError("spectral_solve: forward operator is not Fourier-diagonalizable");
      }
      constant += spec.forward_gram;
    }
    symbol_ = Vec::Constant(1, constant);
    return;
  }
  const Eigen::Index n = static_cast<Eigen::Index>(height_) * width_;
  symbol_ = Vec::Constant(n, constant);
  if (spec.forward_gram > 0.0) {
    auto s = ops.forward->gram_symbol();
    if (!s) throw UnsupportedError("spectral_solve: forward operator is not Fourier-diagonalizable");
    if (s->size() != n) throw InputError("spectral_solve: forward operator size mismatch");
    symbol_ += spec.forward_gram * *s;
  }
  if (spec.gradient_gram > 0.0) symbol_ += spec.gradient_gram * *ops.gradient->gram_symbol();
}

Vec SpectralSystem::solve(const Vec& rhs) const {
  if (height_ == 0) return rhs / symbol_[0];
  if (rhs.size() != symbol_.size()) {
    throw InputError("spectral_solve: rhs length " + std::to_string(rhs.size()) +
                     " does not match grid size " + std::to_string(symbol_.size()));
  }
  auto spec = fft::forward(rhs, height_, width_);
  for (size_t i = 0; i < spec.size(); ++i) spec[i] /= symbol_[static_cast<Eigen::Index>(i)];
  return fft::inverse_real(std::move(spec), height_, width_);
}

Vec SpectralSystem::multiply(const Vec& x) const {
  Vec out = spec_.identity * x;
  if (spec_.forward_gram > 0.0) out += spec_.forward_gram * ops_.forward->adjoint(ops_.forward->apply(x));
  if (spec_.gradient_gram > 0.0) {
    out += spec_.gradient_gram * ops_.gradient->adjoint(ops_.gradient->apply(x));
  }
  if (spec_.transform_gram > 0.0) {
    out += spec_.transform_gram * ops_.transform->adjoint(ops_.transform->apply(x));
  }
  return out;
}

Vec spectral_solve(const SpectralSolveSpec& spec, const SpectralOperators& ops, const Vec& rhs) {
  return SpectralSystem(spec, ops).solve(rhs);
}

Vec rank_one_solve(double scale, double beta, const Vec& b) {
  if (!(scale > 0.0)) {
    throw ConfigError("rank_one_solve: scale must be > 0, got " + std::to_string(scale));
  }
  if (beta < 0.0) throw ConfigError("rank_one_solve: beta must be >= 0");
  const double n = static_cast<double>(b.size());
  const double coef = beta * b.sum() / (scale + beta * n);
  return (b.array() - coef).matrix() / scale;
}

}  // namespace bio
