#include <fftw3.h>

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>
#include <utility>

#include "rlens/signal.hpp"

namespace rlens {
namespace {

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};
using Buffer = std::unique_ptr<fftw_complex[], FftwFree>;

Buffer allocate(std::size_t n) {
  return Buffer(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n)));
}

// FFTW planning is not thread-safe; execution with new-array functions is.
// Plans live for the process lifetime.
fftw_plan plan_for(std::size_t n, int sign) {
  static std::mutex mutex;
  static std::map<std::pair<std::size_t, int>, fftw_plan> plans;
  std::lock_guard lock(mutex);
  auto key = std::make_pair(n, sign);
  if (auto it = plans.find(key); it != plans.end()) return it->second;
  Buffer in = allocate(n);
  Buffer out = allocate(n);
  fftw_plan p = fftw_plan_dft_1d(static_cast<int>(n), in.get(), out.get(), sign, FFTW_ESTIMATE);
  plans.emplace(key, p);
  return p;
}

std::vector<Complex> transform(std::span<const Complex> x, int sign) {
  const std::size_t n = x.size();
  if (n == 0) return {};
  Buffer in = allocate(n);
  Buffer out = allocate(n);
  for (std::size_t i = 0; i < n; ++i) {
    in[i][0] = x[i].real();
    in[i][1] = x[i].imag();
  }
  fftw_execute_dft(plan_for(n, sign), in.get(), out.get());
  std::vector<Complex> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = Complex(out[i][0], out[i][1]);
  return y;
}

}  // namespace

std::vector<Complex> dft(std::span<const Complex> x) { return transform(x, FFTW_FORWARD); }

std::vector<Complex> dft(std::span<const double> x) {
  std::vector<Complex> c(x.begin(), x.end());
  return transform(c, FFTW_FORWARD);
}

std::vector<Complex> idft(std::span<const Complex> spectrum) {
  auto y = transform(spectrum, FFTW_BACKWARD);
  const double scale = 1.0 / static_cast<double>(spectrum.size());
  for (auto& v : y) v *= scale;
  return y;
}

std::vector<double> irdft(std::span<const Complex> half_spectrum, std::size_t n) {
  if (half_spectrum.size() != n / 2 + 1) {
    throw ShapeError("irdft: half spectrum must have n/2 + 1 bins");
  }
  std::vector<Complex> full(n);
  for (std::size_t k = 0; k < half_spectrum.size() && k < n; ++k) full[k] = half_spectrum[k];
  for (std::size_t k = 1; k < (n + 1) / 2; ++k) full[n - k] = std::conj(half_spectrum[k]);
  auto y = idft(full);
  std::vector<double> out(n);
  std::transform(y.begin(), y.end(), out.begin(), [](const Complex& c) { return c.real(); });
  return out;
}

}  // namespace rlens
