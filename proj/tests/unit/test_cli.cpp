#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct Workspace {
  fs::path dir = fs::temp_directory_path() / ("bio-cli-test-" + std::to_string(::getpid()));
  Workspace() {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Workspace() { fs::remove_all(dir); }

  fs::path write(const std::string& name, const std::string& text) const {
    std::ofstream(dir / name) << text;
    return dir / name;
  }
  std::string read(const std::string& name) const {
    std::ifstream in(dir / name);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }
};

struct Outcome {
  int code = -1;
  std::string err;
};

Outcome run(const Workspace& ws, const std::string& args) {
  const fs::path err = ws.dir / "stderr.txt";
  const std::string cmd = "cd '" + ws.dir.string() + "' && '" BIO_CLI_PATH "' " + args +
                          " > /dev/null 2> '" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  Outcome o;
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  o.err = ws.read("stderr.txt");
  return o;
}

const char* kTinyCsMri = R"({"phantom": 16, "noise_sigma": 0, "anchor": "apg@1e-2",
  "max_iters": 20000, "seed": 5})";

bool has_partial(const Workspace& ws) {
  for (const auto& e : fs::directory_iterator(ws.dir)) {
    if (e.path().filename().string().find(".partial-") != std::string::npos) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("valid tiny configs run to completion and write every artifact") {
  Workspace ws;
  ws.write("mri.json", kTinyCsMri);
  const Outcome o = run(ws, "csmri --config mri.json --out mri");
  CHECK(o.code == 0);
  for (const char* f : {"recon.pgm", "recon.png", "trace.csv", "metrics.json", "anchor.json",
                        "x_bar.txt", "y_bar.txt", "config.json"}) {
    CHECK(fs::exists(ws.dir / "mri" / f));
  }
  const auto metrics = nlohmann::json::parse(ws.read("mri/metrics.json"));
  CHECK(metrics["converged"].get<bool>());
  CHECK(metrics["psnr"].get<double>() > metrics["psnr_input"].get<double>());

  ws.write("blur.json", R"({"phantom": 16, "kernel_sigma": 0.6, "anchor": "apg@1e-2", "max_iters": 20})");
  const Outcome b = run(ws, "deblur --config blur.json --out blur");
  CHECK(b.code == 2);
  CHECK(fs::exists(ws.dir / "blur" / "recon.png"));
}

TEST_CASE("missing input files are reported by path") {
  Workspace ws;
  ws.write("k.json", R"({"phantom": 16, "kernel": "kernels/nope.txt"})");
  const Outcome o = run(ws, "deblur --config k.json --out o");
  CHECK(o.code == 1);
  CHECK(o.err.find("kernels/nope.txt") != std::string::npos);
  CHECK_FALSE(fs::exists(ws.dir / "o"));

  ws.write("m.json", R"({"phantom": 16, "mask": "masks/gone.txt"})");
  const Outcome m = run(ws, "csmri --config m.json --out o");
  CHECK(m.code == 1);
  CHECK(m.err.find("masks/gone.txt") != std::string::npos);
}

TEST_CASE("kernel and mask files are loaded relative to the config") {
  Workspace ws;
  fs::create_directories(ws.dir / "cfg");
  ws.write("cfg/k.txt", "1 2\n0.5 0.5\n");
  ws.write("cfg/k.json", R"({"phantom": 16, "kernel": "k.txt", "max_iters": 5, "anchor": "apg@1e-1"})");
  CHECK(run(ws, "deblur --config cfg/k.json --out o").code == 2);

  std::string mask = "16 16\n";
  for (int i = 0; i < 16; ++i) {
    for (int j = 0; j < 16; ++j) mask += (i % 3 == 0 ? "1 " : "0 ");
    mask += "\n";
  }
  ws.write("cfg/mask.txt", mask);
  ws.write("cfg/m.json", R"({"phantom": 16, "mask": "mask.txt", "max_iters": 5})");
  CHECK(run(ws, "csmri --config cfg/m.json --out p").code == 2);
  ws.write("cfg/bad.txt", "2 2\n1 0\n0.5 1\n");
  ws.write("cfg/b.json", R"({"phantom": 16, "mask": "bad.txt"})");
  CHECK(run(ws, "csmri --config cfg/b.json --out q").code == 1);
}

TEST_CASE("unknown keys are rejected") {
  Workspace ws;
  ws.write("u.json", R"({"phantom": 16, "kernal_sigma": 1.0})");
  const Outcome o = run(ws, "deblur --config u.json");
  CHECK(o.code == 1);
  CHECK(o.err.find("kernal_sigma") != std::string::npos);
  ws.write("v.json", R"({"phantom": 16, "kernel_sigma": 1.0})");
  CHECK(run(ws, "csmri --config v.json").code == 1);
}

TEST_CASE("the derived-update flag selects the other multiplier scaling") {
  Workspace ws;
  ws.write("d.json", R"({"phantom": 16, "kernel_sigma": 0.6, "anchor": "apg@1e-2", "max_iters": 30, "beta": 2})");
  const Outcome a = run(ws, "deblur --config d.json --out printed");
  const Outcome b = run(ws, "deblur --config d.json --out derived --derived-update");
  CHECK(a.code == 2);
  CHECK(b.code == 2);
  const auto ja = nlohmann::json::parse(ws.read("printed/metrics.json"));
  const auto jb = nlohmann::json::parse(ws.read("derived/metrics.json"));
  CHECK_FALSE(ja["config"]["derived_update"].get<bool>());
  CHECK(jb["config"]["derived_update"].get<bool>());
  CHECK(ja["psnr"].get<double>() != jb["psnr"].get<double>());
}

TEST_CASE("one-cell ablation writes a single row") {
  Workspace ws;
  ws.write("a.json", R"({"phantom": 16, "kernel_sigma": 0.6, "max_iters": 20,
    "anchors": ["apg@1e-2"], "data_ops": ["deconv"], "timing_columns": false})");
  CHECK(run(ws, "ablation --config a.json --out abl").code == 2);
  const std::string csv = ws.read("abl/ablation.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
  CHECK(fs::exists(ws.dir / "abl" / "trace_deconv_apg_1e_02.csv"));
  CHECK(fs::exists(ws.dir / "abl" / "recon_deconv_apg_1e_02.pgm"));
  CHECK(run(ws, "ablation --config a.json --out abl2 --jobs 2").code == 2);
  CHECK(ws.read("abl2/ablation.csv") == csv);
}

TEST_CASE("three-delta sweep on 16x16 produces a fit") {
  Workspace ws;
  ws.write("s.json", R"({"phantom": 16, "kernel_sigma": 0.6, "max_iters": 3000, "tol": 1e-4,
    "deltas": [1e-1, 1e-2, 1e-3], "repeats": 1})");
  const Outcome o = run(ws, "stability --config s.json --out st");
  CHECK((o.code == 0 || o.code == 2));
  const auto fit = nlohmann::json::parse(ws.read("st/stability_fit.json"));
  CHECK(fit.contains("c1"));
  CHECK(fit.contains("c2"));
  CHECK(fit["c1"].get<double>() >= 0.0);
  CHECK(fit["c2"].get<double>() >= 0.0);
  const std::string csv = ws.read("st/stability.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
}

TEST_CASE("existing output directories need --force") {
  Workspace ws;
  ws.write("f.json", R"({"phantom": 16, "max_iters": 2, "anchor": "apg@1e-1"})");
  CHECK(run(ws, "deblur --config f.json --out same").code == 2);
  const Outcome o = run(ws, "deblur --config f.json --out same");
  CHECK(o.code == 1);
  CHECK(o.err.find("--force") != std::string::npos);
  CHECK(run(ws, "deblur --config f.json --out same --force").code == 2);
}

TEST_CASE("failures leave no partial output") {
  Workspace ws;
  ws.write("p.json", R"({"phantom": 16, "D": "plugin:false", "max_iters": 2})");
  const Outcome o = run(ws, "deblur --config p.json --out fail");
  CHECK(o.code == 1);
  CHECK(o.err.find("plugin") != std::string::npos);
  CHECK_FALSE(fs::exists(ws.dir / "fail"));
  CHECK_FALSE(has_partial(ws));
}

TEST_CASE("print-config resolves defaults and overrides") {
  Workspace ws;
  ws.write("c.json", R"({"phantom": 16, "gamma": 0.002})");
  const fs::path out = ws.dir / "printed.json";
  const std::string cmd = "cd '" + ws.dir.string() + "' && '" BIO_CLI_PATH
                          "' csmri --config c.json --seed 9 --print-config > '" + out.string() + "'";
  REQUIRE(std::system(cmd.c_str()) == 0);
  const auto j = nlohmann::json::parse(ws.read("printed.json"));
  CHECK(j["gamma"].get<double>() == 0.002);
  CHECK(j["seed"].get<std::uint64_t>() == 9);
  CHECK(j["task"] == "csmri");
  CHECK(j["mask_kind"] == "cartesian");
  CHECK(j["beta"].get<double>() == 1.0);
  CHECK_FALSE(fs::exists(ws.dir / "out"));
}
