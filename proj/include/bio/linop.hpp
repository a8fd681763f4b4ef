#pragma once

#include <complex>
#include <cstdint>
#include <memory>
#include <optional>
#include <variant>
#include <vector>

#include "bio/image.hpp"

namespace bio {

enum class TransformBasis { Dct, Haar };

/// Linear map between real vectors. Image-domain kinds use periodic boundaries
/// and row-major pixel order. Values are immutable and cheap to copy.
class LinearOperator {
 public:
  enum class Kind { Identity, Convolution, MaskedFourier, Gradient, OrthoTransform, Dense };

  /// Identity on an h x w grid.
  static LinearOperator identity(int height, int width);
  /// Identity on R^n with no grid attached.
  static LinearOperator identity(Eigen::Index n);
  /// Circular convolution; the kernel centre is (rows/2, cols/2).
  static LinearOperator convolution(const Mat& kernel, int height, int width);
  /// u -> [Re(M .* F u); Im(M .* F u)] with F the unitary 2-D DFT and M a
  /// binary mask in FFT-native (unshifted) order. Output length is 2*h*w.
  static LinearOperator masked_fourier(const ImageGrid& mask);
  /// Forward differences, horizontal block first then vertical. Output 2*h*w.
  static LinearOperator gradient(int height, int width);
  /// Orthonormal DCT-II or single-level Haar (power-of-two sides).
  static LinearOperator ortho_transform(TransformBasis basis, int height, int width);
  static LinearOperator dense(Mat matrix);

  Kind kind() const;
  Eigen::Index input_dims() const { return in_; }
  Eigen::Index output_dims() const { return out_; }
  /// Grid of the input image, 0 x 0 for gridless kinds.
  int height() const { return height_; }
  int width() const { return width_; }

  Vec apply(const Vec& u) const;
  Vec adjoint(const Vec& v) const;

  /// Eigenvalues of A^T A over the unnormalized DFT grid when that Gram
  /// operator is circulant; nullopt otherwise.
  std::optional<Vec> gram_symbol() const;
  /// True when A^T A = I (Identity, OrthoTransform).
  bool gram_is_identity() const;

  /// Convolution kernel (empty for other kinds).
  const Mat& kernel() const;
  /// Mask samples in FFT order (empty for other kinds).
  const std::vector<std::uint8_t>& mask() const;
  const Mat& matrix() const;

 private:
  struct IdentityData {};
  struct ConvolutionData {
    Mat kernel;
    std::vector<std::complex<double>> symbol;
  };
  struct MaskData {
    std::vector<std::uint8_t> mask;
  };
  struct GradientData {};
  struct OrthoData {
    TransformBasis basis;
    Mat rows, cols;  // DCT matrices (unused for Haar)
  };
  struct DenseData {
    Mat matrix;
  };
  using Data = std::variant<IdentityData, ConvolutionData, MaskData, GradientData, OrthoData,
                            DenseData>;

  LinearOperator(std::shared_ptr<const Data> data, Eigen::Index in, Eigen::Index out, int h,
                 int w);

  std::shared_ptr<const Data> data_;
  Eigen::Index in_ = 0;
  Eigen::Index out_ = 0;
  int height_ = 0;
  int width_ = 0;
};

/// Column-by-column materialization; intended for small instances.
Mat to_dense(const LinearOperator& op);

/// Power-iteration estimate of ||A||^2 (largest eigenvalue of A^T A).
double operator_norm_sq(const LinearOperator& op, int iterations = 100);

/// Orthonormal DCT-II matrix of order n.
Mat dct_matrix(int n);

}  // namespace bio
