#include "bio/dataop.hpp"

#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include "bio/errors.hpp"
#include "bio/io.hpp"
#include "bio/spectral.hpp"

namespace bio {
namespace fs = std::filesystem;
namespace {

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += "'\\''";
    else out.push_back(c);
  }
  return out + "'";
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    for (int attempt = 0; attempt < 16; ++attempt) {
      fs::path candidate = fs::temp_directory_path() / ("bio-plugin-" + std::to_string(rd()));
      if (fs::create_directory(candidate)) {
        path = candidate;
        return;
      }
    }
    throw ExternalError("plugin: cannot create temporary directory", "");
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

ImageGrid run_plugin(const DataOperator::ExternalPlugin& p, const ImageGrid& y) {
  TempDir dir;
  const fs::path in = dir.path / "in.pgm";
  const fs::path out = dir.path / "out.pgm";
  const fs::path log = dir.path / "stderr.log";
  io::write_pgm(in, y, 16);
  io::atomic_write_text(fs::path(in.string() + ".dims"),
                        std::to_string(y.height) + " " + std::to_string(y.width) + "\n");
  const std::string cmd = p.command + " " + shell_quote(in.string()) + " " + shell_quote(out.string());

  const pid_t pid = fork();
  if (pid < 0) throw ExternalError("plugin: fork failed", "");
  if (pid == 0) {
    setpgid(0, 0);
    FILE* f = std::freopen(log.c_str(), "w", stderr);
    (void)f;
    execl("/bin/sh", "sh", "-c", cmd.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  const auto deadline = std::chrono::steady_clock::now() + p.timeout;
  int status = 0;
  for (;;) {
    const pid_t r = waitpid(pid, &status, WNOHANG);
    if (r == pid) break;
    if (r < 0) throw ExternalError("plugin: waitpid failed", "");
    if (std::chrono::steady_clock::now() >= deadline) {
      kill(-pid, SIGKILL);
      kill(pid, SIGKILL);
      waitpid(pid, &status, 0);
      throw ExternalError("plugin timed out after " + std::to_string(p.timeout.count()) + " ms: " +
                              p.command,
                          slurp(log));
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    throw ExternalError("plugin exited with status " + std::to_string(code) + ": " + p.command,
                        slurp(log));
  }
  if (!fs::exists(out)) throw ExternalError("plugin produced no output: " + p.command, slurp(log));
  ImageGrid result = io::read_image(out);
  if (!result.same_shape(y)) {
    throw ExternalError("plugin changed image dimensions: " + p.command, slurp(log));
  }
  return result;
}

}  // namespace

Mat gaussian_kernel(double sigma) {
  if (!(sigma > 0.0)) throw ConfigError("gaussian kernel: sigma must be > 0");
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  const int size = 2 * radius + 1;
  Mat k(size, size);
  for (int i = 0; i < size; ++i) {
    for (int j = 0; j < size; ++j) {
      const double di = i - radius;
      const double dj = j - radius;
      k(i, j) = std::exp(-(di * di + dj * dj) / (2.0 * sigma * sigma));
    }
  }
  return k / k.sum();
}

DataOperator::DataOperator(Kind k) : kind_(std::move(k)), plugin_mutex_(std::make_shared<std::mutex>()) {}

DataOperator DataOperator::identity() { return DataOperator(Identity{}); }

DataOperator DataOperator::deconv(LinearOperator K, double alpha) {
  if (!(alpha > 0.0)) throw ConfigError("deconv: alpha must be > 0");
  return DataOperator(Deconv{std::move(K), alpha});
}

DataOperator DataOperator::plugin(std::string command, std::chrono::milliseconds timeout) {
  if (command.empty()) throw ConfigError("plugin: command must not be empty");
  if (timeout.count() <= 0) throw ConfigError("plugin: timeout must be positive");
  return DataOperator(ExternalPlugin{std::move(command), timeout});
}

DataOperator DataOperator::smoothing(double sigma) {
  if (!(sigma > 0.0)) throw ConfigError("smoothing: sigma must be > 0");
  return DataOperator(SmoothingStandIn{sigma});
}

std::string DataOperator::name() const {
  return std::visit(
      [](const auto& k) -> std::string {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, Identity>) return "identity";
        else if constexpr (std::is_same_v<T, Deconv>) return "deconv";
        else if constexpr (std::is_same_v<T, ExternalPlugin>) return "plugin";
        else return "smoothing";
      },
      kind_);
}

ImageGrid DataOperator::apply(const ImageGrid& y) const {
  return std::visit(
      [&](const auto& k) -> ImageGrid {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, Identity>) {
          return y;
        } else if constexpr (std::is_same_v<T, Deconv>) {
          if (k.K.input_dims() != y.size() || k.K.output_dims() != y.size()) {
            throw InputError("deconv: kernel operator does not match image size");
          }
          // (K^T K + alpha I) x = K^T y + alpha y
          const Vec rhs = k.K.adjoint(y.data) + k.alpha * y.data;
          Vec x = spectral_solve(SpectralSolveSpec{k.alpha, 1.0, 0.0, 0.0},
                                 SpectralOperators{&k.K, nullptr, nullptr}, rhs);
          return ImageGrid(y.height, y.width, std::move(x));
        } else if constexpr (std::is_same_v<T, ExternalPlugin>) {
          std::lock_guard lock(*plugin_mutex_);
          return run_plugin(k, y);
        } else {
          const auto blur = LinearOperator::convolution(gaussian_kernel(k.sigma), y.height, y.width);
          return ImageGrid(y.height, y.width, blur.apply(y.data));
        }
      },
      kind_);
}

ImageGrid apply_D(const DataOperator& op, const ImageGrid& y) { return op.apply(y); }

}  // namespace bio
