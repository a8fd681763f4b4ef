#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "bio/errors.hpp"
#include "bio/io.hpp"
#include "support.hpp"

using namespace bio;
namespace fs = std::filesystem;

namespace {

struct Scratch {
  fs::path dir = fs::temp_directory_path() / ("bio-io-test-" + std::to_string(::getpid()));
  Scratch() { fs::create_directories(dir); }
  ~Scratch() { fs::remove_all(dir); }
};

}  // namespace

TEST_CASE("16-bit PGM round trip is exact on the sample grid") {
  Scratch s;
  testing::Gen g(1);
  ImageGrid img(7, 5);
  for (Eigen::Index i = 0; i < img.size(); ++i) img.data[i] = g.integer(0, 65535) / 65535.0;
  io::write_pgm(s.dir / "a.pgm", img, 16);
  const ImageGrid back = io::read_image(s.dir / "a.pgm");
  REQUIRE(back.same_shape(img));
  CHECK((back.data - img.data).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("8-bit PGM and PNG quantize to 1/255") {
  Scratch s;
  testing::Gen g(2);
  const ImageGrid img = g.image(6, 9);
  io::write_pgm(s.dir / "b.pgm", img, 8);
  io::write_png(s.dir / "b.png", img, 8);
  for (const char* name : {"b.pgm", "b.png"}) {
    const ImageGrid back = io::read_image(s.dir / name);
    REQUIRE(back.same_shape(img));
    CHECK((back.data - img.data).lpNorm<Eigen::Infinity>() <= 0.5 / 255.0 + 1e-12);
  }
}

TEST_CASE("values outside [0, 1] are clamped on write") {
  Scratch s;
  ImageGrid img(1, 2);
  img.data << -0.5, 1.5;
  io::write_pgm(s.dir / "c.pgm", img);
  const ImageGrid back = io::read_image(s.dir / "c.pgm");
  CHECK(back.data[0] == 0.0);
  CHECK(back.data[1] == 1.0);
}

TEST_CASE("ASCII PGM") {
  Scratch s;
  std::ofstream(s.dir / "d.pgm") << "P2\n# comment\n3 2\n255\n0 51 255\n102 153 204\n";
  const ImageGrid img = io::read_image(s.dir / "d.pgm");
  CHECK(img.height == 2);
  CHECK(img.width == 3);
  CHECK(img.at(0, 1) == doctest::Approx(0.2));
  CHECK(img.at(1, 2) == doctest::Approx(0.8));
}

TEST_CASE("plain-text arrays") {
  Scratch s;
  testing::Gen g(3);
  const Mat m = g.mat(3, 4);
  io::write_array(s.dir / "k.txt", m);
  CHECK((io::read_array(s.dir / "k.txt") - m).norm() == 0.0);

  std::ofstream(s.dir / "bad.txt") << "2 2\n1 2\n3\n";
  CHECK_THROWS_AS(io::read_array(s.dir / "bad.txt"), InputError);
  CHECK_THROWS_AS(io::read_array(s.dir / "missing.txt"), InputError);
  CHECK_THROWS_AS(io::read_image(s.dir / "missing.pgm"), InputError);
}

TEST_CASE("matrix conversions and atomic writes") {
  Mat m(2, 3);
  m << 1, 2, 3, 4, 5, 6;
  const ImageGrid img = io::from_matrix(m);
  CHECK(img.at(1, 0) == 4.0);
  CHECK((io::to_matrix(img) - m).norm() == 0.0);

  Scratch s;
  io::atomic_write_text(s.dir / "t.txt", "first");
  io::atomic_write_text(s.dir / "t.txt", "second");
  std::ifstream in(s.dir / "t.txt");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(text == "second");
  int entries = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(s.dir)) ++entries;
  CHECK(entries == 1);
}
