#pragma once
// Thin FFTW wrapper. Plans are created once per (size, direction) under a lock;
// execution uses the new-array interface, which FFTW allows concurrently.

#include <complex>
#include <map>
#include <mutex>
#include <span>
#include <utility>
#include <vector>

#include <fftw3.h>

namespace pdlab::fft {

using cd = std::complex<double>;

class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  PlanCache(const PlanCache&) = delete;
  PlanCache& operator=(const PlanCache&) = delete;

  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(std::size_t n, int sign) {
    std::lock_guard lock(mu_);
    auto key = std::make_pair(n, sign);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    std::vector<cd> a(n), b(n);
    auto plan = fftw_plan_dft_1d(static_cast<int>(n), reinterpret_cast<fftw_complex*>(a.data()),
                                 reinterpret_cast<fftw_complex*>(b.data()), sign,
                                 FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  PlanCache() = default;
  std::mutex mu_;
  std::map<std::pair<std::size_t, int>, fftw_plan> plans_;
};

namespace detail {
inline std::vector<cd> run(std::vector<cd> in, int sign) {
  std::vector<cd> out(in.size());
  if (in.empty()) return out;
  auto plan = PlanCache::instance().get(in.size(), sign);
  fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(in.data()), reinterpret_cast<fftw_complex*>(out.data()));
  return out;
}
}  // namespace detail

inline std::vector<cd> forward(std::span<const cd> x) {
  return detail::run(std::vector<cd>(x.begin(), x.end()), FFTW_FORWARD);
}

inline std::vector<cd> forward(std::span<const double> x) {
  return detail::run(std::vector<cd>(x.begin(), x.end()), FFTW_FORWARD);
}

/// Normalized inverse (includes the 1/n factor).
inline std::vector<cd> inverse(std::span<const cd> X) {
  auto y = detail::run(std::vector<cd>(X.begin(), X.end()), FFTW_BACKWARD);
  const double s = y.empty() ? 1.0 : 1.0 / static_cast<double>(y.size());
  for (auto& v : y) v *= s;
  return y;
}

inline std::vector<double> inverse_real(std::span<const cd> X) {
  auto y = inverse(X);
  std::vector<double> r(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) r[i] = y[i].real();
  return r;
}

/// Cyclic filtering of a real signal by a frequency response of equal length.
inline std::vector<double> filter(std::span<const double> x, std::span<const cd> H) {
  auto X = forward(x);
  for (std::size_t i = 0; i < X.size(); ++i) X[i] *= H[i];
  return inverse_real(X);
}

}  // namespace pdlab::fft
