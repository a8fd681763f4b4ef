#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bio/dataop.hpp"
#include "bio/image.hpp"
#include "bio/linop.hpp"
#include "bio/lower.hpp"
#include "bio/masks.hpp"
#include "bio/tvscheme.hpp"

namespace bio {

enum class TaskKind { Deblur, CsMri };

/// Where the anchor (x_bar, y_bar) comes from.
struct AnchorSpec {
  enum class Source { Observation, Apg, Reference };
  Source source = Source::Apg;
  double rel_tol = 1e-4;  // Apg only

  static AnchorSpec observation() { return {Source::Observation, 0.0}; }
  static AnchorSpec apg(double tol) { return {Source::Apg, tol}; }
  static AnchorSpec reference() { return {Source::Reference, 0.0}; }
  /// "observation", "apg@1e-04", "reference"
  static AnchorSpec parse(const std::string& label);
  std::string label() const;
};

/// Recipe for the data operator; the forward model is bound at run time.
struct DSpec {
  enum class Kind { Identity, Deconv, StandIn, Plugin };
  Kind kind = Kind::Deconv;
  double alpha = 1e-4;
  double sigma = 1.0;
  std::string command;
  double timeout_seconds = 30.0;

  static DSpec parse(const std::string& label);
  std::string label() const;
};

struct TaskSpec {
  TaskKind task = TaskKind::Deblur;
  ImageGrid ground_truth;
  Mat kernel;                                   // deblur
  MaskKind mask_kind = MaskKind::Cartesian;     // csmri
  double rate = 0.3;
  ImageGrid mask;                               // csmri: used as given when non-empty
  TransformBasis basis = TransformBasis::Dct;
  double noise_sigma = 0.01;

  double gamma = 1e-3;
  double beta = 1.0;
  double tau = 0.1;
  double eta = 1.0;
  double rho = 1e-3;
  int max_iters = 2000;
  double tol = 1e-6;
  MultiplierScaling scaling = MultiplierScaling::Printed;

  ApgConfig apg;
  /// Tikhonov weight of the pseudo-inverse used when y itself is the anchor.
  double observation_eps = 1e-6;

  DSpec D;
  AnchorSpec anchor;
};

/// Forward model and observation for one seeded draw.
struct Degraded {
  LinearOperator forward = LinearOperator::identity(1);
  Vec observation;
  /// y for deblurring, the zero-filled inverse for CS-MRI; the input to D.
  ImageGrid observed_image;
};

/// Deblur: periodic convolution plus N(0, sigma^2) per pixel. CS-MRI: masked
/// unitary Fourier coefficients plus N(0, sigma^2) on each sampled real and
/// imaginary part. The mask and noise are drawn from `seed`.
Degraded degrade(const TaskSpec& spec, std::uint64_t seed);

/// Adjoint of P F applied to the data: the zero-filled reconstruction.
ImageGrid zero_filled(const LinearOperator& PF, const Vec& y);

/// Piecewise-constant test image with values in [0, 1].
ImageGrid phantom(int height, int width);

struct TimedAnchor {
  ApproxAnchor anchor;
  double seconds = 0.0;
};

TimedAnchor compute_anchor(const TaskSpec& spec, const Degraded& data, const AnchorSpec& which);

DataOperator make_data_operator(const TaskSpec& spec, const Degraded& data, const DSpec& d);

/// One ablation cell: Time1 is the anchor computation, Time2 the BIO iterations.
struct CellRecord {
  std::string d_label;
  std::string ybar_label;
  double time1 = 0.0;
  double time2 = 0.0;
  double psnr = 0.0;
  double ssim = 0.0;
  int anchor_iterations = 0;
  int bio_iterations = 0;
  bool converged = false;
  std::string error;  // non-empty when the cell failed
  ImageGrid recon;
  TvRunResult run;
  ApproxAnchor anchor;  // run_cell only

  bool ok() const { return error.empty(); }
  std::string cell_name() const;
};

/// Runs the split scheme for a prepared anchor and D(y).
TvRunResult run_bio(const TaskSpec& spec, const Degraded& data, const ApproxAnchor& anchor,
                    const ImageGrid& D_of_y);

CellRecord run_cell(const TaskSpec& spec, std::uint64_t seed);

struct AblationGrid {
  TaskSpec base;
  std::vector<AnchorSpec> anchors;
  std::vector<DSpec> data_ops;

  /// observation, apg@1e-2, apg@1e-4, apg@1e-6, reference x identity, Deconv, stand-in.
  static AblationGrid standard(const TaskSpec& base);
};

/// Anchors and D(y) are computed once each; cells run on up to `jobs` threads.
/// A failing cell records its error and does not affect the others.
std::vector<CellRecord> run_ablation(const AblationGrid& grid, std::uint64_t seed, int jobs = 1);

/// Columns D,ybar,Time1,Time2,PSNR,SSIM,bio_iters,converged,error. Without
/// timing the Time columns are left empty so the output is reproducible.
std::string ablation_csv(const std::vector<CellRecord>& cells, bool include_timing = true);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

LinearFit fit_line(const std::vector<double>& xs, const std::vector<double>& ys);

/// Nonnegative least squares D ~ c1 delta + c2 sqrt(delta).
struct StabilityFit {
  double c1 = 0.0;
  double c2 = 0.0;
  double rel_residual = 0.0;
};

StabilityFit fit_stability(const std::vector<double>& deltas, const std::vector<double>& distances);

struct StabilityRow {
  double delta = 0.0;
  double achieved_rel_err = 0.0;  // worst over repeats
  int anchor_iterations = 0;
  double distance = 0.0;          // worst over repeats
  bool converged = true;
};

struct StabilityResult {
  std::vector<StabilityRow> rows;
  StabilityFit fit;
  double d0 = 0.0;        // reference-anchor rerun against the sample set
  double ref_norm = 0.0;  // ||x_ref||
  bool vanishing = false; // smallest-delta distance <= 1e-3 ||x_ref||
  bool monotone = false;  // nonincreasing within a 10% band
  std::vector<std::string> warnings;

  std::string csv() const;
  std::string fit_json() const;
};

/// For each delta (APG rel_tol) and each repeat, anchors the perturbed problem
/// and runs BIO; D_delta is the distance to a multi-start sample of reference
/// solutions. Repeat r > 0 starts APG from a seeded perturbation of x0.
StabilityResult stability_sweep(const TaskSpec& spec, const std::vector<double>& deltas,
                                int n_repeats, std::uint64_t seed);

inline constexpr double kStabilityBand = 0.10;
inline constexpr double kVanishingFraction = 1e-3;

}  // namespace bio
