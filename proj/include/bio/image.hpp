#pragma once

#include <Eigen/Dense>

namespace bio {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Real 2-D field stored row-major: pixel (i, j) lives at data[i * width + j].
struct ImageGrid {
  int height = 0;
  int width = 0;
  Vec data;

  ImageGrid() = default;
  ImageGrid(int h, int w);
  ImageGrid(int h, int w, Vec values);

  static ImageGrid constant(int h, int w, double value);

  Eigen::Index size() const { return data.size(); }
  double& at(int i, int j) { return data[static_cast<Eigen::Index>(i) * width + j]; }
  double at(int i, int j) const { return data[static_cast<Eigen::Index>(i) * width + j]; }
  bool same_shape(const ImageGrid& other) const {
    return height == other.height && width == other.width;
  }
  bool all_finite() const { return data.allFinite(); }
};

}  // namespace bio
