#include "bio/io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>
#include <vector>

#include "bio/errors.hpp"

namespace bio::io {
namespace fs = std::filesystem;
namespace {

std::string lower_ext(const fs::path& p) {
  std::string e = p.extension().string();
  std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::tolower(c); });
  return e;
}

int quantize(double v, int maxval) {
  const double c = std::clamp(v, 0.0, 1.0);
  return static_cast<int>(std::lround(c * maxval));
}

// Skips whitespace and '#' comments in a PNM header.
int read_header_int(std::istream& in) {
  for (;;) {
    int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      break;
    }
  }
  int v = 0;
  if (!(in >> v)) throw InputError("malformed PGM header");
  return v;
}

ImageGrid read_pgm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open image: " + path.string());
  std::string magic(2, '\0');
  in.read(magic.data(), 2);
  if (magic != "P5" && magic != "P2") throw InputError("not a PGM file: " + path.string());
  const int w = read_header_int(in);
  const int h = read_header_int(in);
  const int maxval = read_header_int(in);
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535) {
    throw InputError("unsupported PGM header in " + path.string());
  }
  ImageGrid img(h, w);
  const Eigen::Index n = img.size();
  if (magic == "P2") {
    for (Eigen::Index i = 0; i < n; ++i) {
      int v;
      if (!(in >> v)) throw InputError("truncated PGM: " + path.string());
      img.data[i] = static_cast<double>(v) / maxval;
    }
    return img;
  }
  in.get();  // single whitespace after maxval
  const int bytes = maxval < 256 ? 1 : 2;
  std::vector<unsigned char> buf(static_cast<size_t>(n) * bytes);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (in.gcount() != static_cast<std::streamsize>(buf.size())) {
    throw InputError("truncated PGM: " + path.string());
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const size_t o = static_cast<size_t>(i) * bytes;
    const int v = bytes == 1 ? buf[o] : (buf[o] << 8) | buf[o + 1];
    img.data[i] = static_cast<double>(v) / maxval;
  }
  return img;
}

struct FileCloser {
  void operator()(FILE* f) const {
    if (f) std::fclose(f);
  }
};

ImageGrid read_png(const fs::path& path) {
  std::unique_ptr<FILE, FileCloser> fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw InputError("cannot open image: " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw InputError("malformed PNG: " + path.string());
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);
  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  const int depth = png_get_bit_depth(png, info);
  const int color = png_get_color_type(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA ||
      color == PNG_COLOR_TYPE_PALETTE) {
    png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  }
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);
  const int out_depth = png_get_bit_depth(png, info);
  const size_t rowbytes = png_get_rowbytes(png, info);
  std::vector<unsigned char> buf(rowbytes * static_cast<size_t>(h));
  std::vector<png_bytep> rows(static_cast<size_t>(h));
  for (int i = 0; i < h; ++i) rows[static_cast<size_t>(i)] = buf.data() + rowbytes * i;
  png_read_image(png, rows.data());
  png_destroy_read_struct(&png, &info, nullptr);

  ImageGrid img(h, w);
  const double maxval = out_depth == 16 ? 65535.0 : 255.0;
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      const unsigned char* p = rows[static_cast<size_t>(i)];
      const int v = out_depth == 16 ? (p[2 * j] << 8) | p[2 * j + 1] : p[j];
      img.at(i, j) = v / maxval;
    }
  }
  return img;
}

}  // namespace

Mat read_array(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open array file: " + path.string());
  long h = 0, w = 0;
  if (!(in >> h >> w) || h <= 0 || w <= 0) {
    throw InputError("array file must start with positive \"h w\": " + path.string());
  }
  Mat m(h, w);
  for (long i = 0; i < h; ++i) {
    for (long j = 0; j < w; ++j) {
      if (!(in >> m(i, j))) throw InputError("array file truncated: " + path.string());
    }
  }
  double extra;
  if (in >> extra) throw InputError("array file has trailing values: " + path.string());
  return m;
}

void write_array(const fs::path& path, const Mat& m) {
  std::ostringstream os;
  os.precision(17);
  os << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) os << (j ? " " : "") << m(i, j);
    os << '\n';
  }
  atomic_write_text(path, os.str());
}

ImageGrid read_image(const fs::path& path) {
  if (!fs::exists(path)) throw InputError("image not found: " + path.string());
  const std::string ext = lower_ext(path);
  if (ext == ".png") return read_png(path);
  return read_pgm(path);
}

void write_pgm(const fs::path& path, const ImageGrid& img, int bits) {
  if (bits != 8 && bits != 16) throw ConfigError("PGM bit depth must be 8 or 16");
  const int maxval = bits == 8 ? 255 : 65535;
  std::string out = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n" +
                    std::to_string(maxval) + "\n";
  for (Eigen::Index i = 0; i < img.size(); ++i) {
    const int v = quantize(img.data[i], maxval);
    if (bits == 16) out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>(v & 0xff));
  }
  atomic_write_text(path, out);
}

void write_png(const fs::path& path, const ImageGrid& img, int bits) {
  if (bits != 8 && bits != 16) throw ConfigError("PNG bit depth must be 8 or 16");
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::unique_ptr<FILE, FileCloser> fp(std::fopen(tmp.c_str(), "wb"));
    if (!fp) throw InputError("cannot write image: " + path.string());
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) {
      png_destroy_write_struct(&png, &info);
      throw InputError("PNG encoding failed: " + path.string());
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height),
                 bits, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    const int maxval = bits == 8 ? 255 : 65535;
    std::vector<unsigned char> row(static_cast<size_t>(img.width) * (bits / 8));
    for (int i = 0; i < img.height; ++i) {
      for (int j = 0; j < img.width; ++j) {
        const int v = quantize(img.at(i, j), maxval);
        if (bits == 16) {
          row[2 * static_cast<size_t>(j)] = static_cast<unsigned char>(v >> 8);
          row[2 * static_cast<size_t>(j) + 1] = static_cast<unsigned char>(v & 0xff);
        } else {
          row[static_cast<size_t>(j)] = static_cast<unsigned char>(v);
        }
      }
      png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
  }
  fs::rename(tmp, path);
}

void atomic_write_text(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write file: " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw InputError("write failed: " + path.string());
  }
  fs::rename(tmp, path);
}

ImageGrid from_matrix(const Mat& m) {
  ImageGrid img(static_cast<int>(m.rows()), static_cast<int>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) img.at(static_cast<int>(i), static_cast<int>(j)) = m(i, j);
  }
  return img;
}

Mat to_matrix(const ImageGrid& img) {
  Mat m(img.height, img.width);
  for (int i = 0; i < img.height; ++i) {
    for (int j = 0; j < img.width; ++j) m(i, j) = img.at(i, j);
  }
  return m;
}

}  // namespace bio::io
