#include <doctest.h>

#include <chrono>
#include <cmath>

#include "bio/dataop.hpp"
#include "bio/errors.hpp"
#include "support.hpp"

using namespace bio;
using namespace std::chrono_literals;

namespace {

// Images on the 16-bit grid survive a PGM round trip exactly.
ImageGrid quantized(testing::Gen& g, int h, int w) {
  ImageGrid img(h, w);
  for (Eigen::Index i = 0; i < img.size(); ++i) img.data[i] = g.integer(0, 65535) / 65535.0;
  return img;
}

}  // namespace

TEST_CASE("identity returns its input") {
  testing::Gen g(1);
  const ImageGrid y = g.image(5, 7);
  CHECK((apply_D(DataOperator::identity(), y).data - y.data).norm() == 0.0);
}

TEST_CASE("deconv with an identity kernel is the identity") {
  testing::Gen g(2);
  const ImageGrid y = g.image(8, 8);
  const auto D = DataOperator::deconv(LinearOperator::identity(8, 8));
  CHECK((D.apply(y).data - y.data).norm() < 1e-12);
}

TEST_CASE("deconv matches the dense normal equations and is stationary") {
  testing::Gen g(3);
  for (double alpha : {1e-4, 1e-2, 1.0}) {
    const auto K = LinearOperator::convolution(g.kernel(3, 4), 16, 16);
    const ImageGrid y = g.image(16, 16);
    const ImageGrid x = DataOperator::deconv(K, alpha).apply(y);
    const Mat Kd = to_dense(K);
    const Mat M = Kd.transpose() * Kd + alpha * Mat::Identity(256, 256);
    const Vec ref = M.ldlt().solve(Kd.transpose() * y.data + alpha * y.data);
    CHECK((x.data - ref).norm() <= 1e-8 * ref.norm());
    const Vec grad = K.adjoint(K.apply(x.data) - y.data) + alpha * (x.data - y.data);
    CHECK(grad.norm() <= 1e-8 * y.data.norm());
  }
  CHECK_THROWS_AS(DataOperator::deconv(LinearOperator::identity(4, 4), 0.0), ConfigError);
}

TEST_CASE("smoothing stand-in is a normalized gaussian blur") {
  const Mat k = gaussian_kernel(1.0);
  CHECK(k.rows() == 7);
  CHECK(k.sum() == doctest::Approx(1.0));
  CHECK(k(3, 3) == k.maxCoeff());
  const ImageGrid flat = ImageGrid::constant(9, 9, 0.3);
  CHECK((DataOperator::smoothing(1.0).apply(flat).data - flat.data).norm() < 1e-12);
  CHECK_THROWS_AS(DataOperator::smoothing(0.0), ConfigError);
}

TEST_CASE("plugin round trip through a copying command is lossless") {
  testing::Gen g(4);
  const ImageGrid y = quantized(g, 6, 9);
  const auto D = DataOperator::plugin("cp");
  CHECK(D.name() == "plugin");
  const ImageGrid out = D.apply(y);
  REQUIRE(out.same_shape(y));
  CHECK((out.data - y.data).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("plugin reads the dimension sidecar") {
  testing::Gen g(5);
  const ImageGrid y = quantized(g, 4, 5);
  const auto D = DataOperator::plugin("sh -c 'test \"$(cat \"$0.dims\")\" = \"4 5\" && cp \"$0\" \"$1\"'");
  CHECK(D.apply(y).same_shape(y));
}

TEST_CASE("plugin failures surface as external errors") {
  testing::Gen g(6);
  const ImageGrid y = quantized(g, 4, 4);
  CHECK_THROWS_AS(DataOperator::plugin("false").apply(y), ExternalError);
  CHECK_THROWS_AS(DataOperator::plugin("true").apply(y), ExternalError);
  try {
    DataOperator::plugin("sh -c 'echo broken >&2; exit 3'").apply(y);
    FAIL("expected an error");
  } catch (const ExternalError& e) {
    CHECK(std::string(e.what()).find("status 3") != std::string::npos);
    CHECK(e.diagnostics().find("broken") != std::string::npos);
  }
}

TEST_CASE("plugin timeout") {
  testing::Gen g(7);
  const ImageGrid y = quantized(g, 4, 4);
  const auto start = std::chrono::steady_clock::now();
  CHECK_THROWS_AS(DataOperator::plugin("sleep 10 #", 200ms).apply(y), ExternalError);
  CHECK(std::chrono::steady_clock::now() - start < 5s);
  CHECK_THROWS_AS(DataOperator::plugin(""), ConfigError);
}
