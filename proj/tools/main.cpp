#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "bio/errors.hpp"
#include "bio/harness.hpp"
#include "bio/io.hpp"
#include "bio/metrics.hpp"
#include "run_config.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum Exit { kConverged = 0, kError = 1, kMaxIters = 2 };

std::string vector_text(const bio::Vec& v) {
  std::string out;
  char buf[32];
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g\n", v[i]);
    out += buf;
  }
  return out;
}

json residual_json(const bio::ConstraintResiduals& r) {
  return {{"forward", r.forward},     {"split_plus", r.split_plus},
          {"split_minus", r.split_minus}, {"budget", r.budget},
          {"transform", r.transform}, {"min_s1", r.min_s1},
          {"min_s2", r.min_s2},       {"max_violation", r.max_violation()}};
}

int run_single(const bio::cli::RunConfig& cfg, const fs::path& dir) {
  const bio::TaskSpec& spec = cfg.task;
  const bio::CellRecord cell = bio::run_cell(spec, cfg.seed);
  const bio::Degraded data = bio::degrade(spec, cfg.seed);

  bio::io::write_pgm(dir / "recon.pgm", cell.recon);
  bio::io::write_png(dir / "recon.png", cell.recon);
  bio::io::atomic_write_text(dir / "trace.csv", cell.run.to_csv());
  bio::io::atomic_write_text(dir / "x_bar.txt", vector_text(cell.anchor.x_bar.data));
  bio::io::atomic_write_text(dir / "y_bar.txt", vector_text(cell.anchor.y_bar));

  const json anchor = {{"source", cell.ybar_label},
                       {"gamma", cell.anchor.gamma},
                       {"tv_norm", cell.anchor.tv_norm},
                       {"t_bar", cell.anchor.t_bar},
                       {"achieved_rel_err", cell.anchor.achieved_rel_err},
                       {"iterations", cell.anchor.iterations},
                       {"converged", cell.anchor.converged},
                       {"seconds", cell.time1}};
  bio::io::atomic_write_text(dir / "anchor.json", anchor.dump(2) + "\n");

  json metrics = {{"D", cell.d_label},
                  {"ybar", cell.ybar_label},
                  {"psnr", cell.psnr},
                  {"ssim", cell.ssim},
                  {"psnr_input", bio::psnr(data.observed_image, spec.ground_truth)},
                  {"psnr_anchor", bio::psnr(cell.anchor.x_bar, spec.ground_truth)},
                  {"iterations", cell.bio_iterations},
                  {"converged", cell.converged},
                  {"time1", cell.time1},
                  {"time2", cell.time2},
                  {"config", cfg.resolved}};
  if (!cell.run.trace.empty()) {
    const auto& last = cell.run.trace.back();
    metrics["final_residuals"] = residual_json(last.residuals);
    metrics["final_rel_change"] = last.rel_change;
    metrics["objective_F"] = last.objective_F;
  }
  bio::io::atomic_write_text(dir / "metrics.json", metrics.dump(2) + "\n");

  std::cout << "PSNR " << cell.psnr << " dB, SSIM " << cell.ssim << ", " << cell.bio_iterations
            << " iterations, " << (cell.converged ? "converged" : "max-iters reached") << "\n";
  return cell.converged ? kConverged : kMaxIters;
}

int run_ablation(const bio::cli::RunConfig& cfg, const fs::path& dir) {
  bio::AblationGrid grid;
  grid.base = cfg.task;
  grid.anchors = cfg.anchors;
  grid.data_ops = cfg.data_ops;
  const auto cells = bio::run_ablation(grid, cfg.seed, cfg.jobs);
  bio::io::atomic_write_text(dir / "ablation.csv", bio::ablation_csv(cells, cfg.timing_columns));
  bool all_converged = true;
  for (const auto& c : cells) {
    if (!c.ok()) {
      std::cerr << "cell " << c.cell_name() << " failed: " << c.error << "\n";
      all_converged = false;
      continue;
    }
    bio::io::atomic_write_text(dir / ("trace_" + c.cell_name() + ".csv"), c.run.to_csv());
    bio::io::write_pgm(dir / ("recon_" + c.cell_name() + ".pgm"), c.recon);
    all_converged = all_converged && c.converged;
  }
  std::cout << cells.size() << " cells written to ablation.csv\n";
  return all_converged ? kConverged : kMaxIters;
}

int run_stability(const bio::cli::RunConfig& cfg, const fs::path& dir) {
  const auto result = bio::stability_sweep(cfg.task, cfg.deltas, cfg.repeats, cfg.seed);
  bio::io::atomic_write_text(dir / "stability.csv", result.csv());
  bio::io::atomic_write_text(dir / "stability_fit.json", result.fit_json());
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << "c1 " << result.fit.c1 << ", c2 " << result.fit.c2 << ", monotone "
            << (result.monotone ? "yes" : "no") << ", vanishing "
            << (result.vanishing ? "yes" : "no") << "\n";
  bool all_converged = true;
  for (const auto& r : result.rows) all_converged = all_converged && r.converged;
  return all_converged ? kConverged : kMaxIters;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bilevel TV reconstruction from approximate lower-level anchors"};
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  std::string out;
  int jobs = 0;
  bool derived = false, force = false, print_config = false;

  const std::pair<const char*, const char*> commands[] = {
      {"deblur", "one deblurring run"},
      {"csmri", "one compressed-sensing MRI run"},
      {"ablation", "grid over anchor sources and data operators"},
      {"stability", "distance to the reference solution set versus anchor accuracy"}};
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "JSON run configuration");
    sub->add_option("--seed", seed, "RNG seed (overrides the config)");
    sub->add_option("--out", out, "output directory (overrides the config)");
    sub->add_option("--jobs", jobs, "worker threads for ablation cells")->check(CLI::PositiveNumber);
    sub->add_flag("--derived-update", derived, "scale the multiplier update by beta");
    sub->add_flag("--force", force, "replace an existing output directory");
    sub->add_flag("--print-config", print_config, "print the resolved configuration and exit");
  }
  CLI11_PARSE(app, argc, argv);

  const CLI::App* sub = app.get_subcommands().front();
  fs::path staging;
  try {
    const auto command = bio::cli::parse_command(sub->get_name());
    bio::cli::RunConfig cfg =
        config_path.empty() ? bio::cli::load_config(command, json::object(), fs::current_path())
                            : bio::cli::load_config_file(command, config_path);
    if (sub->count("--seed")) cfg.seed = seed;
    if (!out.empty()) cfg.out = out;
    if (jobs > 0) cfg.jobs = jobs;
    if (derived) cfg.task.scaling = bio::MultiplierScaling::Derived;
    bio::cli::refresh_resolved(cfg);

    if (print_config) {
      std::cout << cfg.resolved.dump(2) << "\n";
      return kConverged;
    }

    const fs::path target = cfg.out;
    if (fs::exists(target) && !force) {
      throw bio::ConfigError("output directory exists (use --force): " + target.string());
    }
    staging = target;
    staging += ".partial-" + std::to_string(::getpid());
    fs::remove_all(staging);
    fs::create_directories(staging);
    bio::io::atomic_write_text(staging / "config.json", cfg.resolved.dump(2) + "\n");

    int code = kConverged;
    switch (command) {
      case bio::cli::Command::Deblur:
      case bio::cli::Command::CsMri: code = run_single(cfg, staging); break;
      case bio::cli::Command::Ablation: code = run_ablation(cfg, staging); break;
      case bio::cli::Command::Stability: code = run_stability(cfg, staging); break;
    }
    if (fs::exists(target)) fs::remove_all(target);
    fs::rename(staging, target);
    return code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    std::error_code ec;
    if (!staging.empty()) fs::remove_all(staging, ec);
    return kError;
  }
}
