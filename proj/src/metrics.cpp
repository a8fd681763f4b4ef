#include "bio/metrics.hpp"

#include <cmath>

#include "bio/errors.hpp"

namespace bio {
namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;

void check_same(const ImageGrid& a, const ImageGrid& b, const char* what) {
  if (!a.same_shape(b)) throw InputError(std::string(what) + ": image dimensions differ");
}

// 'valid' separable filtering with a normalized 1-D Gaussian.
Mat filter_valid(const Mat& img, const Vec& g) {
  const Eigen::Index oh = img.rows() - kWindow + 1;
  const Eigen::Index ow = img.cols() - kWindow + 1;
  Mat rows(img.rows(), ow);
  for (Eigen::Index i = 0; i < img.rows(); ++i) {
    for (Eigen::Index j = 0; j < ow; ++j) rows(i, j) = img.row(i).segment(j, kWindow).dot(g);
  }
  Mat out(oh, ow);
  for (Eigen::Index i = 0; i < oh; ++i) {
    for (Eigen::Index j = 0; j < ow; ++j) out(i, j) = rows.col(j).segment(i, kWindow).dot(g);
  }
  return out;
}

}  // namespace

double psnr(const ImageGrid& a, const ImageGrid& b, double peak) {
  check_same(a, b, "psnr");
  const double mse = (a.data - b.data).squaredNorm() / static_cast<double>(a.size());
  if (mse < 1e-10 * peak * peak) return kPsnrCap;
  return 10.0 * std::log10(peak * peak / mse);
}

double ssim(const ImageGrid& a, const ImageGrid& b, double dynamic_range) {
  check_same(a, b, "ssim");
  if (a.height < kWindow || a.width < kWindow) {
    throw InputError("ssim: images must be at least 11x11");
  }
  Vec g(kWindow);
  for (int i = 0; i < kWindow; ++i) {
    const double d = i - kWindow / 2;
    g[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
  }
  g /= g.sum();

  Mat A(a.height, a.width), B(a.height, a.width);
  for (int i = 0; i < a.height; ++i) {
    for (int j = 0; j < a.width; ++j) {
      A(i, j) = a.at(i, j);
      B(i, j) = b.at(i, j);
    }
  }
  const Mat mu_a = filter_valid(A, g);
  const Mat mu_b = filter_valid(B, g);
  const Mat aa = filter_valid(A.cwiseProduct(A), g);
  const Mat bb = filter_valid(B.cwiseProduct(B), g);
  const Mat ab = filter_valid(A.cwiseProduct(B), g);

  const double c1 = std::pow(0.01 * dynamic_range, 2);
  const double c2 = std::pow(0.03 * dynamic_range, 2);
  double total = 0.0;
  for (Eigen::Index i = 0; i < mu_a.rows(); ++i) {
    for (Eigen::Index j = 0; j < mu_a.cols(); ++j) {
      const double ma = mu_a(i, j);
      const double mb = mu_b(i, j);
      const double va = aa(i, j) - ma * ma;
      const double vb = bb(i, j) - mb * mb;
      const double cov = ab(i, j) - ma * mb;
      total += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
  }
  return total / static_cast<double>(mu_a.size());
}

}  // namespace bio
