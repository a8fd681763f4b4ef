#include "bio/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>

namespace bio::fft {
namespace {

// FFTW planning is not thread-safe; execution with the new-array interface is.
struct PlanCache {
  std::mutex mu;
  std::map<std::tuple<int, int, bool>, fftw_plan> plans;

  fftw_plan get(int h, int w, bool inverse) {
    std::lock_guard lock(mu);
    auto key = std::make_tuple(h, w, inverse);
    if (auto it = plans.find(key); it != plans.end()) return it->second;
    Spectrum scratch(static_cast<size_t>(h) * w);
    auto* p = reinterpret_cast<fftw_complex*>(scratch.data());
    fftw_plan plan = fftw_plan_dft_2d(h, w, p, p, inverse ? FFTW_BACKWARD : FFTW_FORWARD,
                                      FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans.emplace(key, plan);
    return plan;
  }

  ~PlanCache() {
    for (auto& [key, plan] : plans) fftw_destroy_plan(plan);
  }
};

PlanCache& cache() {
  static PlanCache c;
  return c;
}

}  // namespace

void transform(Spectrum& buf, int h, int w, bool inverse) {
  fftw_plan plan = cache().get(h, w, inverse);
  auto* p = reinterpret_cast<fftw_complex*>(buf.data());
  fftw_execute_dft(plan, p, p);
}

Spectrum forward(const Vec& real, int h, int w) {
  Spectrum buf(static_cast<size_t>(real.size()));
  for (Eigen::Index i = 0; i < real.size(); ++i) buf[static_cast<size_t>(i)] = real[i];
  transform(buf, h, w, false);
  return buf;
}

Vec inverse_real(Spectrum spec, int h, int w) {
  transform(spec, h, w, true);
  const double scale = 1.0 / (static_cast<double>(h) * w);
  Vec out(static_cast<Eigen::Index>(spec.size()));
  for (size_t i = 0; i < spec.size(); ++i) out[static_cast<Eigen::Index>(i)] = spec[i].real() * scale;
  return out;
}

}  // namespace bio::fft
