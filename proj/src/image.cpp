#include "bio/image.hpp"

#include <string>
#include <utility>

#include "bio/errors.hpp"

namespace bio {

ImageGrid::ImageGrid(int h, int w) : height(h), width(w) {
  if (h <= 0 || w <= 0) {
    throw InputError("image dimensions must be positive, got " + std::to_string(h) + "x" +
                     std::to_string(w));
  }
  data = Vec::Zero(static_cast<Eigen::Index>(h) * w);
}

ImageGrid::ImageGrid(int h, int w, Vec values) : ImageGrid(h, w) {
  if (values.size() != data.size()) {
    throw InputError("image data length " + std::to_string(values.size()) + " != " +
                     std::to_string(data.size()));
  }
  if (!values.allFinite()) throw InputError("image data contains non-finite entries");
  data = std::move(values);
}

ImageGrid ImageGrid::constant(int h, int w, double value) {
  ImageGrid g(h, w);
  g.data.setConstant(value);
  return g;
}

}  // namespace bio
