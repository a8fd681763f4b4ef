#include "bio/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <sstream>
#include <thread>

#include "bio/errors.hpp"
#include "bio/metrics.hpp"
#include "bio/oracle.hpp"
#include "bio/spectral.hpp"

namespace bio {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

int grid_height(const TaskSpec& spec) { return spec.ground_truth.height; }
int grid_width(const TaskSpec& spec) { return spec.ground_truth.width; }

LowerProblem lower_problem(const TaskSpec& spec, const Degraded& data) {
  return LowerProblem(data.forward, data.observation, spec.gamma, grid_height(spec),
                      grid_width(spec));
}

}  // namespace

AnchorSpec AnchorSpec::parse(const std::string& label) {
  if (label == "observation" || label == "y") return observation();
  if (label == "reference" || label == "x*") return reference();
  if (label.rfind("apg@", 0) == 0) {
    double tol = 0.0;
    try {
      tol = std::stod(label.substr(4));
    } catch (const std::exception&) {
      throw ConfigError("bad anchor tolerance in '" + label + "'");
    }
    if (!(tol > 0.0)) throw ConfigError("anchor tolerance must be positive: " + label);
    return apg(tol);
  }
  throw ConfigError("unknown anchor source: " + label);
}

std::string AnchorSpec::label() const {
  switch (source) {
    case Source::Observation: return "observation";
    case Source::Reference: return "reference";
    case Source::Apg: return "apg@" + fmt("%.0e", rel_tol);
  }
  return "unknown";
}

DSpec DSpec::parse(const std::string& label) {
  DSpec d;
  const auto at = label.find('@');
  const std::string head = label.substr(0, at);
  const bool has_arg = at != std::string::npos;
  auto arg = [&]() {
    try {
      return std::stod(label.substr(at + 1));
    } catch (const std::exception&) {
      throw ConfigError("bad parameter in data operator '" + label + "'");
    }
  };
  if (label.rfind("plugin:", 0) == 0) {
    d.kind = Kind::Plugin;
    d.command = label.substr(7);
    if (d.command.empty()) throw ConfigError("plugin data operator needs a command");
  } else if (head == "identity") {
    d.kind = Kind::Identity;
  } else if (head == "deconv") {
    d.kind = Kind::Deconv;
    if (has_arg) d.alpha = arg();
  } else if (head == "standin") {
    d.kind = Kind::StandIn;
    if (has_arg) d.sigma = arg();
  } else {
    throw ConfigError("unknown data operator: " + label);
  }
  return d;
}

std::string DSpec::label() const {
  switch (kind) {
    case Kind::Identity: return "identity";
    case Kind::Deconv: return "deconv";
    case Kind::StandIn: return "standin";
    case Kind::Plugin: return "plugin";
  }
  return "unknown";
}

ImageGrid zero_filled(const LinearOperator& PF, const Vec& y) {
  return ImageGrid(PF.height(), PF.width(), PF.adjoint(y));
}

ImageGrid phantom(int height, int width) {
  if (height <= 0 || width <= 0) throw InputError("phantom: dimensions must be positive");
  ImageGrid img(height, width);
  for (int i = 0; i < height; ++i) {
    for (int j = 0; j < width; ++j) {
      const double u = (i + 0.5) / height;
      const double v = (j + 0.5) / width;
      double value = 0.1;
      if (u >= 0.15 && u <= 0.45 && v >= 0.1 && v <= 0.5) value = 0.7;
      if (u >= 0.2 && u <= 0.4 && v >= 0.6 && v <= 0.9 && (v - 0.6) < 1.5 * (u - 0.2)) value = 0.3;
      const double r = std::hypot(u - 0.65, v - 0.65);
      if (r <= 0.2) value = 0.45;
      if (r <= 0.08) value = 0.95;
      if (u >= 0.7 && u <= 0.85 && v >= 0.12 && v <= 0.27) value = 0.9;
      img.at(i, j) = value;
    }
  }
  return img;
}

Degraded degrade(const TaskSpec& spec, std::uint64_t seed) {
  const ImageGrid& gt = spec.ground_truth;
  if (gt.size() == 0) throw ConfigError("task has no ground-truth image");
  if (spec.noise_sigma < 0.0) throw ConfigError("noise_sigma must be nonnegative");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  Degraded out;
  if (spec.task == TaskKind::Deblur) {
    if (spec.kernel.size() == 0) throw ConfigError("deblur task needs a kernel");
    out.forward = LinearOperator::convolution(spec.kernel, gt.height, gt.width);
    out.observation = out.forward.apply(gt.data);
    if (spec.noise_sigma > 0.0) {
      for (Eigen::Index i = 0; i < out.observation.size(); ++i) {
        out.observation[i] += spec.noise_sigma * noise(rng);
      }
    }
    out.observed_image = ImageGrid(gt.height, gt.width, out.observation);
  } else {
    const std::uint64_t mask_seed = rng();
    const ImageGrid mask = spec.mask.size() > 0
                               ? spec.mask
                               : make_mask(spec.mask_kind, spec.rate, gt.height, gt.width, mask_seed);
    if (!mask.same_shape(gt)) throw InputError("mask dimensions differ from the image");
    out.forward = LinearOperator::masked_fourier(mask);
    out.observation = out.forward.apply(gt.data);
    if (spec.noise_sigma > 0.0) {
      const Eigen::Index n = gt.size();
      for (Eigen::Index i = 0; i < n; ++i) {
        if (mask.data[i] == 0.0) continue;
        out.observation[i] += spec.noise_sigma * noise(rng);
        out.observation[n + i] += spec.noise_sigma * noise(rng);
      }
    }
    out.observed_image = zero_filled(out.forward, out.observation);
  }
  return out;
}

TimedAnchor compute_anchor(const TaskSpec& spec, const Degraded& data, const AnchorSpec& which) {
  const LowerProblem prob = lower_problem(spec, data);
  const auto start = Clock::now();
  TimedAnchor out;
  switch (which.source) {
    case AnchorSpec::Source::Observation: {
      // Least-squares fit of y with a vanishing Tikhonov term; no TV solve.
      if (!(spec.observation_eps > 0.0)) throw ConfigError("observation_eps must be positive");
      SpectralSolveSpec sys{spec.observation_eps, 1.0, 0.0, 0.0};
      const Vec x = spectral_solve(sys, {&data.forward, nullptr, nullptr},
                                   data.forward.adjoint(data.observation));
      out.anchor = make_anchor(prob, x);
      out.anchor.converged = true;
      break;
    }
    case AnchorSpec::Source::Apg: {
      ApgConfig cfg = spec.apg;
      cfg.rel_tol = which.rel_tol;
      out.anchor = apg_solve(prob, cfg);
      break;
    }
    case AnchorSpec::Source::Reference:
      out.anchor = reference_solve(prob);
      break;
  }
  out.seconds = seconds_since(start);
  return out;
}

DataOperator make_data_operator(const TaskSpec& spec, const Degraded& data, const DSpec& d) {
  switch (d.kind) {
    case DSpec::Kind::Identity: return DataOperator::identity();
    case DSpec::Kind::Deconv:
      if (spec.task != TaskKind::Deblur) {
        throw ConfigError("the deconv data operator is defined for deblurring only");
      }
      return DataOperator::deconv(data.forward, d.alpha);
    case DSpec::Kind::StandIn: return DataOperator::smoothing(d.sigma);
    case DSpec::Kind::Plugin:
      return DataOperator::plugin(
          d.command, std::chrono::milliseconds(static_cast<long long>(d.timeout_seconds * 1000.0)));
  }
  throw ConfigError("unknown data operator kind");
}

std::string CellRecord::cell_name() const {
  std::string name = d_label + "_" + ybar_label;
  for (char& c : name) {
    if (c == '@' || c == '+' || c == '-' || c == '.') c = '_';
  }
  return name;
}

TvRunResult run_bio(const TaskSpec& spec, const Degraded& data, const ApproxAnchor& anchor,
                    const ImageGrid& D_of_y) {
  if (spec.task == TaskKind::Deblur) {
    DeblurParams p;
    p.K = data.forward;
    p.anchor = anchor;
    p.D_of_y = D_of_y;
    p.beta = spec.beta;
    p.tau = spec.tau;
    p.max_iters = spec.max_iters;
    p.tol = spec.tol;
    p.scaling = spec.scaling;
    return run_deblur(p);
  }
  CsMriParams p;
  p.PF = data.forward;
  p.T = LinearOperator::ortho_transform(spec.basis, grid_height(spec), grid_width(spec));
  p.anchor = anchor;
  p.D_of_y = D_of_y;
  p.eta = spec.eta;
  p.rho = spec.rho;
  p.beta = spec.beta;
  p.tau = spec.tau;
  p.max_iters = spec.max_iters;
  p.tol = spec.tol;
  p.scaling = spec.scaling;
  return run_csmri(p);
}

namespace {

void finish_cell(CellRecord& cell, const TaskSpec& spec, const TimedAnchor& anchor,
                 const Degraded& data, const ImageGrid& D_of_y) {
  cell.time1 = anchor.seconds;
  cell.anchor_iterations = anchor.anchor.iterations;
  const auto start = Clock::now();
  cell.run = run_bio(spec, data, anchor.anchor, D_of_y);
  cell.time2 = seconds_since(start);
  cell.bio_iterations = cell.run.iterations;
  cell.converged = cell.run.converged;
  cell.recon = ImageGrid(grid_height(spec), grid_width(spec), cell.run.state.x);
  cell.psnr = psnr(cell.recon, spec.ground_truth);
  cell.ssim = ssim(cell.recon, spec.ground_truth);
}

}  // namespace

CellRecord run_cell(const TaskSpec& spec, std::uint64_t seed) {
  const Degraded data = degrade(spec, seed);
  CellRecord cell;
  cell.d_label = spec.D.label();
  cell.ybar_label = spec.anchor.label();
  const TimedAnchor anchor = compute_anchor(spec, data, spec.anchor);
  const ImageGrid D_of_y =
      make_data_operator(spec, data, spec.D).apply(data.observed_image);
  finish_cell(cell, spec, anchor, data, D_of_y);
  cell.anchor = anchor.anchor;
  return cell;
}

AblationGrid AblationGrid::standard(const TaskSpec& base) {
  AblationGrid g;
  g.base = base;
  g.anchors = {AnchorSpec::observation(), AnchorSpec::apg(1e-2), AnchorSpec::apg(1e-4),
               AnchorSpec::apg(1e-6), AnchorSpec::reference()};
  DSpec identity;
  identity.kind = DSpec::Kind::Identity;
  DSpec deconv;
  deconv.kind = DSpec::Kind::Deconv;
  DSpec standin;
  standin.kind = DSpec::Kind::StandIn;
  g.data_ops = {identity, deconv, standin};
  return g;
}

std::vector<CellRecord> run_ablation(const AblationGrid& grid, std::uint64_t seed, int jobs) {
  if (grid.anchors.empty() || grid.data_ops.empty()) throw ConfigError("ablation grid is empty");
  const TaskSpec& spec = grid.base;
  const Degraded data = degrade(spec, seed);

  struct Prepared {
    TimedAnchor anchor;
    std::string error;
  };
  std::vector<Prepared> anchors(grid.anchors.size());
  for (size_t a = 0; a < grid.anchors.size(); ++a) {
    try {
      anchors[a].anchor = compute_anchor(spec, data, grid.anchors[a]);
    } catch (const std::exception& e) {
      anchors[a].error = std::string("anchor: ") + e.what();
    }
  }
  std::vector<ImageGrid> targets(grid.data_ops.size());
  std::vector<std::string> target_errors(grid.data_ops.size());
  for (size_t d = 0; d < grid.data_ops.size(); ++d) {
    try {
      targets[d] = make_data_operator(spec, data, grid.data_ops[d]).apply(data.observed_image);
    } catch (const std::exception& e) {
      target_errors[d] = std::string("data operator: ") + e.what();
    }
  }

  const size_t n_anchor = grid.anchors.size();
  std::vector<CellRecord> cells(grid.data_ops.size() * n_anchor);
  for (size_t d = 0; d < grid.data_ops.size(); ++d) {
    for (size_t a = 0; a < n_anchor; ++a) {
      CellRecord& c = cells[d * n_anchor + a];
      c.d_label = grid.data_ops[d].label();
      c.ybar_label = grid.anchors[a].label();
    }
  }

  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (size_t idx = next.fetch_add(1); idx < cells.size(); idx = next.fetch_add(1)) {
      const size_t d = idx / n_anchor;
      const size_t a = idx % n_anchor;
      CellRecord& c = cells[idx];
      if (!anchors[a].error.empty()) {
        c.error = anchors[a].error;
        continue;
      }
      if (!target_errors[d].empty()) {
        c.error = target_errors[d];
        continue;
      }
      try {
        finish_cell(c, spec, anchors[a].anchor, data, targets[d]);
      } catch (const std::exception& e) {
        c.error = e.what();
      }
    }
  };
  const int n_threads = std::clamp(jobs, 1, static_cast<int>(cells.size()));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return cells;
}

std::string ablation_csv(const std::vector<CellRecord>& cells, bool include_timing) {
  std::ostringstream os;
  os << "D,ybar,Time1,Time2,PSNR,SSIM,bio_iters,converged,error\n";
  for (const auto& c : cells) {
    os << c.d_label << ',' << c.ybar_label << ',';
    if (include_timing && c.ok()) os << fmt("%.4f", c.time1) << ',' << fmt("%.4f", c.time2) << ',';
    else os << ",,";
    if (c.ok()) {
      os << fmt("%.6f", c.psnr) << ',' << fmt("%.6f", c.ssim) << ',' << c.bio_iterations << ','
         << (c.converged ? 1 : 0) << ",\n";
    } else {
      std::string msg = c.error;
      std::replace(msg.begin(), msg.end(), '"', '\'');
      std::replace(msg.begin(), msg.end(), '\n', ' ');
      os << ",,,0,\"" << msg << "\"\n";
    }
  }
  return os.str();
}

LinearFit fit_line(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2) throw InputError("fit_line needs >= 2 paired points");
  const double n = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0.0) throw InputError("fit_line: abscissae are all equal");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return f;
}

StabilityFit fit_stability(const std::vector<double>& deltas, const std::vector<double>& distances) {
  if (deltas.size() != distances.size() || deltas.empty()) {
    throw InputError("fit_stability needs paired, nonempty data");
  }
  const size_t n = deltas.size();
  Vec a(n), b(n), y(n);
  for (size_t i = 0; i < n; ++i) {
    a[i] = deltas[i];
    b[i] = std::sqrt(deltas[i]);
    y[i] = distances[i];
  }
  auto residual = [&](double c1, double c2) { return (y - c1 * a - c2 * b).norm(); };

  // Two unknowns: check the unconstrained optimum, then each face of the orthant.
  std::vector<std::pair<double, double>> candidates{{0.0, 0.0}};
  const double aa = a.squaredNorm(), bb = b.squaredNorm(), ab = a.dot(b);
  const double det = aa * bb - ab * ab;
  if (det > 1e-14 * aa * bb) {
    const double c1 = (bb * a.dot(y) - ab * b.dot(y)) / det;
    const double c2 = (aa * b.dot(y) - ab * a.dot(y)) / det;
    if (c1 >= 0.0 && c2 >= 0.0) candidates.emplace_back(c1, c2);
  }
  if (aa > 0.0) candidates.emplace_back(std::max(0.0, a.dot(y) / aa), 0.0);
  if (bb > 0.0) candidates.emplace_back(0.0, std::max(0.0, b.dot(y) / bb));

  StabilityFit best;
  double best_res = std::numeric_limits<double>::infinity();
  for (const auto& [c1, c2] : candidates) {
    const double r = residual(c1, c2);
    if (r < best_res) {
      best_res = r;
      best.c1 = c1;
      best.c2 = c2;
    }
  }
  const double scale = y.norm();
  best.rel_residual = scale > 0.0 ? best_res / scale : 0.0;
  return best;
}

std::string StabilityResult::csv() const {
  std::ostringstream os;
  os << "delta,achieved_rel_err,anchor_iters,distance,converged\n";
  for (const auto& r : rows) {
    os << fmt("%.17g", r.delta) << ',' << fmt("%.17g", r.achieved_rel_err) << ','
       << r.anchor_iterations << ',' << fmt("%.17g", r.distance) << ',' << (r.converged ? 1 : 0)
       << '\n';
  }
  return os.str();
}

std::string StabilityResult::fit_json() const {
  std::ostringstream os;
  os << "{\n  \"c1\": " << fmt("%.17g", fit.c1) << ",\n  \"c2\": " << fmt("%.17g", fit.c2)
     << ",\n  \"rel_residual\": " << fmt("%.17g", fit.rel_residual)
     << ",\n  \"d0\": " << fmt("%.17g", d0) << ",\n  \"ref_norm\": " << fmt("%.17g", ref_norm)
     << ",\n  \"vanishing\": " << (vanishing ? "true" : "false")
     << ",\n  \"monotone\": " << (monotone ? "true" : "false") << ",\n  \"warnings\": [";
  for (size_t i = 0; i < warnings.size(); ++i) {
    std::string w = warnings[i];
    std::replace(w.begin(), w.end(), '"', '\'');
    os << (i ? ", " : "") << '"' << w << '"';
  }
  os << "]\n}\n";
  return os.str();
}

StabilityResult stability_sweep(const TaskSpec& spec, const std::vector<double>& deltas,
                                int n_repeats, std::uint64_t seed) {
  if (deltas.empty()) throw ConfigError("stability sweep needs at least one delta");
  for (size_t i = 0; i < deltas.size(); ++i) {
    if (!(deltas[i] > 0.0)) throw ConfigError("deltas must be positive");
    if (i > 0 && !(deltas[i] < deltas[i - 1])) throw ConfigError("deltas must be decreasing");
  }
  if (n_repeats < 1) throw ConfigError("n_repeats must be >= 1");

  const Degraded data = degrade(spec, seed);
  const LowerProblem prob = lower_problem(spec, data);
  const ImageGrid D_of_y = make_data_operator(spec, data, spec.D).apply(data.observed_image);

  std::vector<Vec> inits;
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> noise(0.0, 0.05);
  const Vec x0 = default_initial_point(prob);
  for (int r = 0; r < n_repeats; ++r) {
    Vec init = x0;
    if (r > 0) {
      for (Eigen::Index i = 0; i < init.size(); ++i) init[i] += noise(rng);
    }
    inits.push_back(std::move(init));
  }

  StabilityResult out;
  std::vector<Vec> samples;
  for (const Vec& init : inits) {
    const ApproxAnchor ref = reference_solve(prob, &init);
    const TvRunResult run = run_bio(spec, data, ref, D_of_y);
    if (!run.converged) out.warnings.push_back("reference BIO run hit max_iters");
    samples.push_back(run.state.x);
  }
  out.ref_norm = samples.front().norm();
  for (size_t i = 0; i < samples.size() && samples.size() > 1; ++i) {
    std::vector<Vec> others;
    for (size_t j = 0; j < samples.size(); ++j) {
      if (j != i) others.push_back(samples[j]);
    }
    out.d0 = std::max(out.d0, oracle::solution_distance(samples[i], others));
  }

  for (double delta : deltas) {
    StabilityRow row;
    row.delta = delta;
    for (const Vec& init : inits) {
      ApgConfig cfg = spec.apg;
      cfg.rel_tol = delta;
      const ApproxAnchor anchor = apg_solve(prob, cfg, &init);
      const TvRunResult run = run_bio(spec, data, anchor, D_of_y);
      row.achieved_rel_err = std::max(row.achieved_rel_err, anchor.achieved_rel_err);
      row.anchor_iterations = std::max(row.anchor_iterations, anchor.iterations);
      row.distance = std::max(row.distance, oracle::solution_distance(run.state.x, samples));
      row.converged = row.converged && run.converged && anchor.converged;
    }
    out.rows.push_back(row);
  }

  std::vector<double> fit_d, fit_dist;
  for (const auto& r : out.rows) {
    if (!r.converged) {
      out.warnings.push_back("delta " + fmt("%.0e", r.delta) + " did not converge; excluded from fit");
      continue;
    }
    fit_d.push_back(r.delta);
    fit_dist.push_back(r.distance);
  }
  if (!fit_d.empty()) out.fit = fit_stability(fit_d, fit_dist);

  out.monotone = true;
  for (size_t i = 1; i < out.rows.size(); ++i) {
    if (out.rows[i].distance > (1.0 + kStabilityBand) * out.rows[i - 1].distance + 1e-12) {
      out.monotone = false;
    }
  }
  out.vanishing = out.rows.back().distance <= kVanishingFraction * out.ref_norm;
  return out;
}

}  // namespace bio
