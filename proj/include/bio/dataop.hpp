#pragma once

#include <chrono>
#include <memory>
#include <mutex>
#include <string>
#include <variant>

#include "bio/image.hpp"
#include "bio/linop.hpp"

namespace bio {

/// The data-driven operator D applied once to the observation.
class DataOperator {
 public:
  struct Identity {};
  /// argmin_x ||K x - y||^2 + alpha ||x - y||^2
  struct Deconv {
    LinearOperator K;
    double alpha = 1e-4;
  };
  /// Runs `<command> <in.pgm> <out.pgm>` on 16-bit PGM files; a sidecar
  /// `<in.pgm>.dims` holds "h w".
  struct ExternalPlugin {
    std::string command;
    std::chrono::milliseconds timeout{30000};
  };
  /// Periodic Gaussian blur; a deterministic stand-in for a learned denoiser.
  struct SmoothingStandIn {
    double sigma = 1.0;
  };
  using Kind = std::variant<Identity, Deconv, ExternalPlugin, SmoothingStandIn>;

  static DataOperator identity();
  static DataOperator deconv(LinearOperator K, double alpha = 1e-4);
  static DataOperator plugin(std::string command,
                             std::chrono::milliseconds timeout = std::chrono::milliseconds(30000));
  static DataOperator smoothing(double sigma);

  const Kind& kind() const { return kind_; }
  std::string name() const;

  ImageGrid apply(const ImageGrid& y) const;

 private:
  explicit DataOperator(Kind k);

  Kind kind_;
  // One plugin invocation in flight per operator instance.
  std::shared_ptr<std::mutex> plugin_mutex_;
};

ImageGrid apply_D(const DataOperator& op, const ImageGrid& y);

/// Normalized (2*ceil(3 sigma)+1)^2 Gaussian stencil.
Mat gaussian_kernel(double sigma);

}  // namespace bio
