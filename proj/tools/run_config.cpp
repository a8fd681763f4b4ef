#include "run_config.hpp"

#include <fstream>
#include <set>

#include "bio/errors.hpp"
#include "bio/io.hpp"

namespace bio::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::set<std::string> kCommon = {
    "image", "phantom", "noise_sigma", "gamma", "beta", "tau", "max_iters", "tol",
    "apg_max_iters", "tv_inner_iters", "observation_eps", "D", "plugin_timeout", "anchor",
    "derived_update", "seed", "out", "jobs"};
const std::set<std::string> kDeblur = {"kernel", "kernel_sigma"};
const std::set<std::string> kCsMri = {"mask", "mask_kind", "rate", "transform", "eta", "rho"};
const std::set<std::string> kAblation = {"task", "anchors", "data_ops", "timing_columns"};
const std::set<std::string> kStability = {"task", "deltas", "repeats"};

fs::path existing(const fs::path& base, const std::string& rel, const char* what) {
  fs::path p = fs::path(rel).is_absolute() ? fs::path(rel) : base / rel;
  if (!fs::exists(p)) throw ConfigError(std::string(what) + " not found: " + p.string());
  return p;
}

template <class T>
T get(const json& doc, const char* key, T fallback) {
  if (!doc.contains(key)) return fallback;
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

TransformBasis parse_basis(const std::string& s) {
  if (s == "dct") return TransformBasis::Dct;
  if (s == "haar") return TransformBasis::Haar;
  throw ConfigError("unknown transform: " + s);
}

std::string basis_name(TransformBasis b) { return b == TransformBasis::Dct ? "dct" : "haar"; }

}  // namespace

Command parse_command(const std::string& name) {
  if (name == "deblur") return Command::Deblur;
  if (name == "csmri") return Command::CsMri;
  if (name == "ablation") return Command::Ablation;
  if (name == "stability") return Command::Stability;
  throw ConfigError("unknown command: " + name);
}

std::string to_string(Command c) {
  switch (c) {
    case Command::Deblur: return "deblur";
    case Command::CsMri: return "csmri";
    case Command::Ablation: return "ablation";
    case Command::Stability: return "stability";
  }
  return "unknown";
}

RunConfig load_config(Command command, const json& doc, const fs::path& base_dir) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig cfg;
  cfg.command = command;
  TaskSpec& t = cfg.task;

  TaskKind kind = TaskKind::Deblur;
  if (command == Command::CsMri) kind = TaskKind::CsMri;
  if (command == Command::Ablation || command == Command::Stability) {
    const std::string task = get<std::string>(doc, "task", "deblur");
    if (task == "csmri") kind = TaskKind::CsMri;
    else if (task != "deblur") throw ConfigError("unknown task: " + task);
  }
  t.task = kind;

  std::set<std::string> allowed = kCommon;
  allowed.insert((kind == TaskKind::Deblur ? kDeblur : kCsMri).begin(),
                 (kind == TaskKind::Deblur ? kDeblur : kCsMri).end());
  if (command == Command::Ablation) allowed.insert(kAblation.begin(), kAblation.end());
  if (command == Command::Stability) allowed.insert(kStability.begin(), kStability.end());
  for (const auto& [key, value] : doc.items()) {
    if (!allowed.count(key)) {
      throw ConfigError("unknown config key '" + key + "' for command " + to_string(command));
    }
  }

  json source;
  if (doc.contains("image")) {
    const fs::path p = existing(base_dir, get<std::string>(doc, "image", ""), "image");
    t.ground_truth = io::read_image(p);
    source["image"] = p.string();
  } else {
    const int size = get<int>(doc, "phantom", 64);
    if (size < 8) throw ConfigError("phantom size must be >= 8");
    t.ground_truth = phantom(size, size);
    source["phantom"] = size;
  }

  if (kind == TaskKind::Deblur) {
    if (doc.contains("kernel")) {
      const fs::path p = existing(base_dir, get<std::string>(doc, "kernel", ""), "kernel");
      t.kernel = io::read_array(p);
      source["kernel"] = p.string();
    } else {
      const double sigma = get<double>(doc, "kernel_sigma", 1.6);
      if (!(sigma > 0.0)) throw ConfigError("kernel_sigma must be positive");
      t.kernel = gaussian_kernel(sigma);
      source["kernel_sigma"] = sigma;
    }
  } else {
    if (doc.contains("mask")) {
      const fs::path p = existing(base_dir, get<std::string>(doc, "mask", ""), "mask");
      t.mask = io::from_matrix(io::read_array(p));
      for (Eigen::Index i = 0; i < t.mask.size(); ++i) {
        if (t.mask.data[i] != 0.0 && t.mask.data[i] != 1.0) {
          throw ConfigError("mask entries must be 0 or 1: " + p.string());
        }
      }
      source["mask"] = p.string();
    }
    t.mask_kind = parse_mask_kind(get<std::string>(doc, "mask_kind", "cartesian"));
    t.rate = get<double>(doc, "rate", 0.3);
    t.basis = parse_basis(get<std::string>(doc, "transform", "dct"));
    t.eta = get<double>(doc, "eta", t.eta);
    t.rho = get<double>(doc, "rho", t.rho);
  }

  t.noise_sigma = get<double>(doc, "noise_sigma", t.noise_sigma);
  t.gamma = get<double>(doc, "gamma", t.gamma);
  t.beta = get<double>(doc, "beta", t.beta);
  t.tau = get<double>(doc, "tau", t.tau);
  t.max_iters = get<int>(doc, "max_iters", t.max_iters);
  t.tol = get<double>(doc, "tol", t.tol);
  t.apg.max_iters = get<int>(doc, "apg_max_iters", t.apg.max_iters);
  t.apg.tv_inner_iters = get<int>(doc, "tv_inner_iters", t.apg.tv_inner_iters);
  t.observation_eps = get<double>(doc, "observation_eps", t.observation_eps);
  if (get<bool>(doc, "derived_update", false)) t.scaling = MultiplierScaling::Derived;

  t.D = DSpec::parse(get<std::string>(doc, "D", kind == TaskKind::Deblur ? "deconv" : "identity"));
  t.D.timeout_seconds = get<double>(doc, "plugin_timeout", t.D.timeout_seconds);
  t.anchor = AnchorSpec::parse(get<std::string>(doc, "anchor", "apg@1e-4"));
  if (!(t.gamma > 0.0)) throw ConfigError("gamma must be positive");

  cfg.seed = get<std::uint64_t>(doc, "seed", cfg.seed);
  if (doc.contains("out")) cfg.out = get<std::string>(doc, "out", "out");
  cfg.jobs = get<int>(doc, "jobs", cfg.jobs);

  if (command == Command::Ablation) {
    const AblationGrid standard = AblationGrid::standard(t);
    if (doc.contains("anchors")) {
      for (const auto& a : get<std::vector<std::string>>(doc, "anchors", {})) {
        cfg.anchors.push_back(AnchorSpec::parse(a));
      }
    } else {
      cfg.anchors = standard.anchors;
    }
    if (doc.contains("data_ops")) {
      for (const auto& d : get<std::vector<std::string>>(doc, "data_ops", {})) {
        DSpec spec = DSpec::parse(d);
        spec.timeout_seconds = t.D.timeout_seconds;
        cfg.data_ops.push_back(spec);
      }
    } else {
      cfg.data_ops = standard.data_ops;
      if (kind == TaskKind::CsMri) {
        std::erase_if(cfg.data_ops, [](const DSpec& d) { return d.kind == DSpec::Kind::Deconv; });
      }
    }
    cfg.timing_columns = get<bool>(doc, "timing_columns", true);
  }
  if (command == Command::Stability) {
    cfg.deltas = get<std::vector<double>>(doc, "deltas", cfg.deltas);
    cfg.repeats = get<int>(doc, "repeats", cfg.repeats);
  }

  cfg.resolved = json::object();
  cfg.resolved["source"] = source;
  refresh_resolved(cfg);
  return cfg;
}

RunConfig load_config_file(Command command, const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  const fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");
  return load_config(command, doc, base);
}

void refresh_resolved(RunConfig& cfg) {
  const TaskSpec& t = cfg.task;
  json& r = cfg.resolved;
  r["command"] = to_string(cfg.command);
  r["task"] = t.task == TaskKind::Deblur ? "deblur" : "csmri";
  r["height"] = t.ground_truth.height;
  r["width"] = t.ground_truth.width;
  if (t.task == TaskKind::CsMri) {
    r["mask_kind"] = to_string(t.mask_kind);
    r["rate"] = t.rate;
    r["transform"] = basis_name(t.basis);
    r["eta"] = t.eta;
    r["rho"] = t.rho;
  }
  r["noise_sigma"] = t.noise_sigma;
  r["gamma"] = t.gamma;
  r["beta"] = t.beta;
  r["tau"] = t.tau;
  r["max_iters"] = t.max_iters;
  r["tol"] = t.tol;
  r["apg_max_iters"] = t.apg.max_iters;
  r["tv_inner_iters"] = t.apg.tv_inner_iters;
  r["observation_eps"] = t.observation_eps;
  r["derived_update"] = t.scaling == MultiplierScaling::Derived;
  r["D"] = t.D.kind == DSpec::Kind::Plugin ? "plugin:" + t.D.command : t.D.label();
  r["plugin_timeout"] = t.D.timeout_seconds;
  r["anchor"] = t.anchor.label();
  r["seed"] = cfg.seed;
  r["out"] = cfg.out.string();
  r["jobs"] = cfg.jobs;
  if (cfg.command == Command::Ablation) {
    json anchors = json::array(), ops = json::array();
    for (const auto& a : cfg.anchors) anchors.push_back(a.label());
    for (const auto& d : cfg.data_ops) {
      ops.push_back(d.kind == DSpec::Kind::Plugin ? "plugin:" + d.command : d.label());
    }
    r["anchors"] = anchors;
    r["data_ops"] = ops;
    r["timing_columns"] = cfg.timing_columns;
  }
  if (cfg.command == Command::Stability) {
    r["deltas"] = cfg.deltas;
    r["repeats"] = cfg.repeats;
  }
}

}  // namespace bio::cli
