#include "bio/linop.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "bio/errors.hpp"
#include "bio/fft.hpp"

namespace bio {
namespace {

inline int wrap(int i, int n) {
  int r = i % n;
  return r < 0 ? r + n : r;
}

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

void check_length(const char* what, Eigen::Index got, Eigen::Index expected) {
  if (got != expected) {
    throw InputError(std::string(what) + ": vector length " + std::to_string(got) +
                     " does not match operator dimension " + std::to_string(expected));
  }
}

// One level of the orthonormal Haar analysis along rows (axis 1) or columns (axis 0).
void haar_axis(Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>& m,
               int axis, bool inverse) {
  const double s = std::numbers::sqrt2 / 2.0;
  if (axis == 1) {
    const int half = static_cast<int>(m.cols()) / 2;
    Eigen::VectorXd tmp(m.cols());
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (int j = 0; j < half; ++j) {
        if (!inverse) {
          tmp[j] = s * (m(i, 2 * j) + m(i, 2 * j + 1));
          tmp[half + j] = s * (m(i, 2 * j) - m(i, 2 * j + 1));
        } else {
          tmp[2 * j] = s * (m(i, j) + m(i, half + j));
          tmp[2 * j + 1] = s * (m(i, j) - m(i, half + j));
        }
      }
      m.row(i) = tmp.transpose();
    }
  } else {
    const int half = static_cast<int>(m.rows()) / 2;
    Eigen::VectorXd tmp(m.rows());
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      for (int i = 0; i < half; ++i) {
        if (!inverse) {
          tmp[i] = s * (m(2 * i, j) + m(2 * i + 1, j));
          tmp[half + i] = s * (m(2 * i, j) - m(2 * i + 1, j));
        } else {
          tmp[2 * i] = s * (m(i, j) + m(half + i, j));
          tmp[2 * i + 1] = s * (m(i, j) - m(half + i, j));
        }
      }
      m.col(j) = tmp;
    }
  }
}

using RowMajorMap = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstRowMajorMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

}  // namespace

Mat dct_matrix(int n) {
  Mat c(n, n);
  for (int k = 0; k < n; ++k) {
    const double alpha = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
    for (int i = 0; i < n; ++i) {
      c(k, i) = alpha * std::cos(std::numbers::pi * (2.0 * i + 1.0) * k / (2.0 * n));
    }
  }
  return c;
}

LinearOperator::LinearOperator(std::shared_ptr<const Data> data, Eigen::Index in,
                               Eigen::Index out, int h, int w)
    : data_(std::move(data)), in_(in), out_(out), height_(h), width_(w) {}

LinearOperator LinearOperator::identity(int height, int width) {
  if (height <= 0 || width <= 0) throw InputError("identity: grid must be positive");
  const Eigen::Index n = static_cast<Eigen::Index>(height) * width;
  return LinearOperator(std::make_shared<Data>(IdentityData{}), n, n, height, width);
}

LinearOperator LinearOperator::identity(Eigen::Index n) {
  if (n <= 0) throw InputError("identity: dimension must be positive");
  return LinearOperator(std::make_shared<Data>(IdentityData{}), n, n, 0, 0);
}

LinearOperator LinearOperator::convolution(const Mat& kernel, int height, int width) {
  if (height <= 0 || width <= 0) throw InputError("convolution: grid must be positive");
  if (kernel.size() == 0) throw InputError("convolution: empty kernel");
  if (!kernel.allFinite()) throw InputError("convolution: kernel has non-finite entries");
  ConvolutionData d{kernel, {}};
  const int kh = static_cast<int>(kernel.rows());
  const int kw = static_cast<int>(kernel.cols());
  const int ch = kh / 2;
  const int cw = kw / 2;
  // Embed the kernel with its centre at the origin and take the DFT.
  Vec embedded = Vec::Zero(static_cast<Eigen::Index>(height) * width);
  for (int a = 0; a < kh; ++a) {
    for (int b = 0; b < kw; ++b) {
      embedded[static_cast<Eigen::Index>(wrap(a - ch, height)) * width + wrap(b - cw, width)] +=
          kernel(a, b);
    }
  }
  d.symbol = fft::forward(embedded, height, width);
  const Eigen::Index n = static_cast<Eigen::Index>(height) * width;
  return LinearOperator(std::make_shared<Data>(std::move(d)), n, n, height, width);
}

LinearOperator LinearOperator::masked_fourier(const ImageGrid& mask) {
  if (mask.height <= 0 || mask.width <= 0) throw InputError("masked_fourier: empty mask");
  MaskData d;
  d.mask.resize(static_cast<size_t>(mask.size()));
  for (Eigen::Index i = 0; i < mask.size(); ++i) {
    const double m = mask.data[i];
    if (m != 0.0 && m != 1.0) throw InputError("masked_fourier: mask entries must be 0 or 1");
    d.mask[static_cast<size_t>(i)] = m == 1.0 ? 1 : 0;
  }
  const Eigen::Index n = mask.size();
  return LinearOperator(std::make_shared<Data>(std::move(d)), n, 2 * n, mask.height, mask.width);
}

LinearOperator LinearOperator::gradient(int height, int width) {
  if (height <= 0 || width <= 0) throw InputError("gradient: grid must be positive");
  const Eigen::Index n = static_cast<Eigen::Index>(height) * width;
  return LinearOperator(std::make_shared<Data>(GradientData{}), n, 2 * n, height, width);
}

LinearOperator LinearOperator::ortho_transform(TransformBasis basis, int height, int width) {
  if (height <= 0 || width <= 0) throw InputError("ortho_transform: grid must be positive");
  OrthoData d{basis, {}, {}};
  if (basis == TransformBasis::Haar) {
    if (!is_power_of_two(height) || !is_power_of_two(width) || height < 2 || width < 2) {
      throw ConfigError("Haar transform requires power-of-two sides >= 2, got " +
                        std::to_string(height) + "x" + std::to_string(width));
    }
  } else {
    d.rows = dct_matrix(height);
    d.cols = dct_matrix(width);
  }
  const Eigen::Index n = static_cast<Eigen::Index>(height) * width;
  return LinearOperator(std::make_shared<Data>(std::move(d)), n, n, height, width);
}

LinearOperator LinearOperator::dense(Mat matrix) {
  if (matrix.size() == 0) throw InputError("dense: empty matrix");
  const Eigen::Index in = matrix.cols();
  const Eigen::Index out = matrix.rows();
  return LinearOperator(std::make_shared<Data>(DenseData{std::move(matrix)}), in, out, 0, 0);
}

LinearOperator::Kind LinearOperator::kind() const {
  return static_cast<Kind>(data_->index());
}

Vec LinearOperator::apply(const Vec& u) const {
  check_length("apply", u.size(), in_);
  const int h = height_;
  const int w = width_;
  return std::visit(
      [&](const auto& d) -> Vec {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, IdentityData>) {
          return u;
        } else if constexpr (std::is_same_v<T, ConvolutionData>) {
          const int kh = static_cast<int>(d.kernel.rows());
          const int kw = static_cast<int>(d.kernel.cols());
          if (kh * kw > 49) {
            auto spec = fft::forward(u, h, w);
            for (size_t i = 0; i < spec.size(); ++i) spec[i] *= d.symbol[i];
            return fft::inverse_real(std::move(spec), h, w);
          }
          const int ch = kh / 2;
          const int cw = kw / 2;
          Vec out = Vec::Zero(in_);
          for (int i = 0; i < h; ++i) {
            for (int j = 0; j < w; ++j) {
              double acc = 0.0;
              for (int a = 0; a < kh; ++a) {
                const Eigen::Index row = static_cast<Eigen::Index>(wrap(i - a + ch, h)) * w;
                for (int b = 0; b < kw; ++b) acc += d.kernel(a, b) * u[row + wrap(j - b + cw, w)];
              }
              out[static_cast<Eigen::Index>(i) * w + j] = acc;
            }
          }
          return out;
        } else if constexpr (std::is_same_v<T, MaskData>) {
          auto spec = fft::forward(u, h, w);
          const double s = 1.0 / std::sqrt(static_cast<double>(in_));
          Vec out = Vec::Zero(out_);
          for (Eigen::Index i = 0; i < in_; ++i) {
            if (d.mask[static_cast<size_t>(i)]) {
              out[i] = s * spec[static_cast<size_t>(i)].real();
              out[in_ + i] = s * spec[static_cast<size_t>(i)].imag();
            }
          }
          return out;
        } else if constexpr (std::is_same_v<T, GradientData>) {
          Vec out(out_);
          const Eigen::Index n = in_;
          for (int i = 0; i < h; ++i) {
            const int ip = (i + 1) % h;
            for (int j = 0; j < w; ++j) {
              const Eigen::Index idx = static_cast<Eigen::Index>(i) * w + j;
              out[idx] = u[static_cast<Eigen::Index>(i) * w + (j + 1) % w] - u[idx];
              out[n + idx] = u[static_cast<Eigen::Index>(ip) * w + j] - u[idx];
            }
          }
          return out;
        } else if constexpr (std::is_same_v<T, OrthoData>) {
          Vec out = u;
          RowMajorMap m(out.data(), h, w);
          if (d.basis == TransformBasis::Haar) {
            haar_axis(m, 1, false);
            haar_axis(m, 0, false);
          } else {
            ConstRowMajorMap src(u.data(), h, w);
            m = d.rows * src * d.cols.transpose();
          }
          return out;
        } else {
          return d.matrix * u;
        }
      },
      *data_);
}

Vec LinearOperator::adjoint(const Vec& v) const {
  check_length("adjoint", v.size(), out_);
  const int h = height_;
  const int w = width_;
  return std::visit(
      [&](const auto& d) -> Vec {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, IdentityData>) {
          return v;
        } else if constexpr (std::is_same_v<T, ConvolutionData>) {
          const int kh = static_cast<int>(d.kernel.rows());
          const int kw = static_cast<int>(d.kernel.cols());
          if (kh * kw > 49) {
            auto spec = fft::forward(v, h, w);
            for (size_t i = 0; i < spec.size(); ++i) spec[i] *= std::conj(d.symbol[i]);
            return fft::inverse_real(std::move(spec), h, w);
          }
          const int ch = kh / 2;
          const int cw = kw / 2;
          Vec out = Vec::Zero(in_);
          for (int p = 0; p < h; ++p) {
            for (int q = 0; q < w; ++q) {
              double acc = 0.0;
              for (int a = 0; a < kh; ++a) {
                const Eigen::Index row = static_cast<Eigen::Index>(wrap(p + a - ch, h)) * w;
                for (int b = 0; b < kw; ++b) acc += d.kernel(a, b) * v[row + wrap(q + b - cw, w)];
              }
              out[static_cast<Eigen::Index>(p) * w + q] = acc;
            }
          }
          return out;
        } else if constexpr (std::is_same_v<T, MaskData>) {
          fft::Spectrum spec(static_cast<size_t>(in_));
          for (Eigen::Index i = 0; i < in_; ++i) {
            spec[static_cast<size_t>(i)] =
                d.mask[static_cast<size_t>(i)] ? fft::Complex(v[i], v[in_ + i]) : fft::Complex(0, 0);
          }
          fft::transform(spec, h, w, true);
          const double s = 1.0 / std::sqrt(static_cast<double>(in_));
          Vec out(in_);
          for (Eigen::Index i = 0; i < in_; ++i) out[i] = s * spec[static_cast<size_t>(i)].real();
          return out;
        } else if constexpr (std::is_same_v<T, GradientData>) {
          Vec out(in_);
          const Eigen::Index n = in_;
          for (int i = 0; i < h; ++i) {
            const int im = (i + h - 1) % h;
            for (int j = 0; j < w; ++j) {
              const Eigen::Index idx = static_cast<Eigen::Index>(i) * w + j;
              const Eigen::Index left = static_cast<Eigen::Index>(i) * w + (j + w - 1) % w;
              const Eigen::Index up = static_cast<Eigen::Index>(im) * w + j;
              out[idx] = v[left] - v[idx] + v[n + up] - v[n + idx];
            }
          }
          return out;
        } else if constexpr (std::is_same_v<T, OrthoData>) {
          Vec out = v;
          RowMajorMap m(out.data(), h, w);
          if (d.basis == TransformBasis::Haar) {
            haar_axis(m, 0, true);
            haar_axis(m, 1, true);
          } else {
            ConstRowMajorMap src(v.data(), h, w);
            m = d.rows.transpose() * src * d.cols;
          }
          return out;
        } else {
          return d.matrix.transpose() * v;
        }
      },
      *data_);
}

std::optional<Vec> LinearOperator::gram_symbol() const {
  const int h = height_;
  const int w = width_;
  const Eigen::Index n = in_;
  return std::visit(
      [&](const auto& d) -> std::optional<Vec> {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, IdentityData> || std::is_same_v<T, OrthoData>) {
          return Vec::Ones(n);
        } else if constexpr (std::is_same_v<T, ConvolutionData>) {
          Vec s(n);
          for (Eigen::Index i = 0; i < n; ++i) s[i] = std::norm(d.symbol[static_cast<size_t>(i)]);
          return s;
        } else if constexpr (std::is_same_v<T, MaskData>) {
          // Re(F^H M F u) for real u is circulant with symbol (M(k) + M(-k)) / 2.
          Vec s(n);
          for (int i = 0; i < h; ++i) {
            for (int j = 0; j < w; ++j) {
              const size_t k = static_cast<size_t>(i) * w + j;
              const size_t mk = static_cast<size_t>((h - i) % h) * w + (w - j) % w;
              s[static_cast<Eigen::Index>(k)] = 0.5 * (d.mask[k] + d.mask[mk]);
            }
          }
          return s;
        } else if constexpr (std::is_same_v<T, GradientData>) {
          Vec s(n);
          for (int i = 0; i < h; ++i) {
            const double sv = 2.0 - 2.0 * std::cos(2.0 * std::numbers::pi * i / h);
            for (int j = 0; j < w; ++j) {
              const double sh = 2.0 - 2.0 * std::cos(2.0 * std::numbers::pi * j / w);
              s[static_cast<Eigen::Index>(i) * w + j] = sv + sh;
            }
          }
          return s;
        } else {
          return std::nullopt;
        }
      },
      *data_);
}

bool LinearOperator::gram_is_identity() const {
  const Kind k = kind();
  return k == Kind::Identity || k == Kind::OrthoTransform;
}

const Mat& LinearOperator::kernel() const {
  static const Mat empty;
  if (const auto* d = std::get_if<ConvolutionData>(data_.get())) return d->kernel;
  return empty;
}

const std::vector<std::uint8_t>& LinearOperator::mask() const {
  static const std::vector<std::uint8_t> empty;
  if (const auto* d = std::get_if<MaskData>(data_.get())) return d->mask;
  return empty;
}

const Mat& LinearOperator::matrix() const {
  static const Mat empty;
  if (const auto* d = std::get_if<DenseData>(data_.get())) return d->matrix;
  return empty;
}

Mat to_dense(const LinearOperator& op) {
  if (op.kind() == LinearOperator::Kind::Dense) return op.matrix();
  Mat m(op.output_dims(), op.input_dims());
  Vec e = Vec::Zero(op.input_dims());
  for (Eigen::Index j = 0; j < op.input_dims(); ++j) {
    e[j] = 1.0;
    m.col(j) = op.apply(e);
    e[j] = 0.0;
  }
  return m;
}

double operator_norm_sq(const LinearOperator& op, int iterations) {
  if (auto sym = op.gram_symbol()) return sym->maxCoeff();
  std::mt19937_64 rng(0x5eed);
  std::normal_distribution<double> normal;
  Vec u(op.input_dims());
  for (auto& x : u) x = normal(rng);
  u.normalize();
  double lambda = 0.0;
  for (int it = 0; it < iterations; ++it) {
    Vec v = op.adjoint(op.apply(u));
    lambda = v.norm();
    if (lambda == 0.0) return 0.0;
    u = v / lambda;
  }
  return lambda;
}

}  // namespace bio
