#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "pdlab/waveform.hpp"

using namespace pdlab;

namespace {

std::vector<double> random_pm1(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = (rng() & 1) ? 1.0 : -1.0;
  return v;
}

double round_trip_rms(double beta, int span, std::size_t n, std::uint64_t seed) {
  const auto f = rrc_taps(beta, span, 4);
  const auto sym = random_pm1(n, seed);
  const auto back = matched_downsample(shape(sym, f), f, 0);
  double e = 0.0;
  for (std::size_t k = 0; k < n; ++k) e += (back[k] - sym[k]) * (back[k] - sym[k]);
  return std::sqrt(e / static_cast<double>(n));
}

}  // namespace

TEST(Rrc, SymmetricUnitEnergy) {
  const auto f = rrc_taps(0.01, 64, 4);
  ASSERT_EQ(f.taps.size(), 257u);
  for (std::size_t i = 0; i < f.taps.size(); ++i) EXPECT_EQ(f.taps[i], f.taps[f.taps.size() - 1 - i]);
  double e = 0.0;
  for (double t : f.taps) e += t * t;
  EXPECT_NEAR(e, 1.0, 1e-12);
}

TEST(Rrc, EnergyOverGrid) {
  for (double beta : {0.01, 0.1, 0.5, 1.0})
    for (int span : {8, 16, 64, 128})
      for (int sps : {2, 4, 8}) {
        const auto f = rrc_taps(beta, span, sps);
        double e = 0.0;
        for (double t : f.taps) {
          ASSERT_TRUE(std::isfinite(t)) << beta << " " << span << " " << sps;
          e += t * t;
        }
        EXPECT_NEAR(e, 1.0, 1e-12);
      }
}

TEST(Rrc, SingularPointIsContinuous) {
  // beta = 0.25, sps = 4: t = 1/(4 beta) = 1 lands exactly on tap center+4
  const auto f = rrc_taps(0.25, 16, 4);
  const auto g = rrc_taps(0.25 + 1e-7, 16, 4);
  for (std::size_t i = 0; i < f.taps.size(); ++i) EXPECT_NEAR(f.taps[i], g.taps[i], 1e-6);
}

namespace {
// largest |h*h| at nonzero symbol lags; direct linear convolution, no FFT
double max_isi(const RrcFilter& f, double* center) {
  const auto& h = f.taps;
  std::vector<double> rc(2 * h.size() - 1, 0.0);
  for (std::size_t i = 0; i < h.size(); ++i)
    for (std::size_t j = 0; j < h.size(); ++j) rc[i + j] += h[i] * h[j];
  const std::size_t mid = h.size() - 1, sps = static_cast<std::size_t>(f.sps);
  *center = rc[mid];
  double worst = 0.0;
  for (std::size_t k = sps; k <= mid; k += sps) worst = std::max({worst, std::abs(rc[mid + k]), std::abs(rc[mid - k])});
  return worst;
}
}  // namespace

TEST(Rrc, SelfConvolutionIsNyquist) {
  double center = 0.0;
  // at beta = 0.01 the 1/t tail makes truncation leakage large until span ~ 256
  EXPECT_LT(max_isi(rrc_taps(0.01, 64, 4), &center), 2e-2);
  EXPECT_NEAR(center, 1.0, 1e-12);
  EXPECT_LT(max_isi(rrc_taps(0.01, 256, 4), &center), 2e-3);
  EXPECT_LT(max_isi(rrc_taps(0.01, 1024, 4), &center), 1e-4);
  EXPECT_LT(max_isi(rrc_taps(0.25, 64, 4), &center), 2e-3);
}

TEST(Rrc, BadRollOff) {
  for (double b : {0.0, -0.1, 1.5}) {
    try {
      rrc_taps(b, 64, 4);
      FAIL() << b;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::BadRollOff);
    }
  }
}

TEST(Shape, ImpulseGivesTaps) {
  const auto f = rrc_taps(0.1, 16, 4);
  std::vector<double> lane(64, 0.0);
  lane[0] = 1.0;
  const auto w = shape(lane, f);
  ASSERT_EQ(w.samples.size(), 256u);
  const std::size_t n = w.samples.size(), c = f.center();
  for (std::size_t j = 0; j < f.taps.size(); ++j) EXPECT_NEAR(w.samples[(j + n - c) % n], f.taps[j], 1e-14);
  double rest = 0.0;
  for (std::size_t i = c + 1; i < n - c; ++i) rest += std::abs(w.samples[i]);
  EXPECT_LT(rest, 1e-12);
}

TEST(Shape, ZeroLane) {
  const auto w = shape(std::vector<double>(32, 0.0), rrc_taps(0.01, 16, 4));
  for (double v : w.samples) EXPECT_EQ(v, 0.0);
}

TEST(Shape, RoundTripBeta025) { EXPECT_LT(round_trip_rms(0.25, 64, 4096, 1), 1e-3); }

TEST(Shape, RoundTripImprovesWithSpan) {
  double prev = INFINITY;
  for (int span : {16, 32, 64, 128}) {
    const double e = round_trip_rms(0.01, span, 8192, 2);
    EXPECT_LT(e, prev) << span;
    prev = e;
  }
}

TEST(Precomp, IdentityChannel) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  Waveform w{std::vector<double>(512), 4, 0.0};
  for (auto& v : w.samples) v = nd(rng);
  const LinearPrecomp p{std::vector<cd>(512, cd{1.0, 0.0}), 0.0};
  const auto out = apply_precomp(w, p);
  for (std::size_t i = 0; i < w.samples.size(); ++i) EXPECT_NEAR(out.samples[i], w.samples[i], 1e-13);
}

TEST(Precomp, ExactInverseWithoutRegularization) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> nd;
  const std::size_t n = 1024;
  std::vector<double> x(n);
  for (auto& v : x) v = nd(rng);
  const std::vector<double> fir{0.7, 0.2, 0.1};
  const auto p = LinearPrecomp::for_fir(fir, n, 0.0);
  const auto through = fft::filter(x, p.channel_response);
  // FIR applied in the time domain agrees with the spectrum
  for (std::size_t i = 0; i < n; ++i) {
    double y = 0.0;
    for (std::size_t j = 0; j < fir.size(); ++j) y += fir[j] * x[(i + n - j) % n];
    ASSERT_NEAR(through[i], y, 1e-12);
  }
  const auto back = apply_precomp(Waveform{through, 4, 0.0}, p);
  for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(back.samples[i], x[i], 1e-10);
}

TEST(Precomp, SpectralNull) {
  const std::size_t n = 64;
  auto p = LinearPrecomp::for_fir(std::vector<double>{0.5, 0.5}, n, 1e-2);
  const auto g = p.gain();
  EXPECT_LT(std::abs(p.channel_response[n / 2]), 1e-15);
  EXPECT_EQ(std::abs(g[n / 2]), 0.0);
  for (const auto& v : g) {
    EXPECT_TRUE(std::isfinite(v.real()) && std::isfinite(v.imag()));
    EXPECT_LE(std::abs(v), 1.0 / (2.0 * std::sqrt(p.epsilon)) + 1e-12);
  }
}

TEST(Precomp, SpectrumMismatch) {
  const auto p = LinearPrecomp::for_fir(std::vector<double>{1.0}, 16);
  try {
    apply_precomp(Waveform{std::vector<double>(32), 4, 0.0}, p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::SpectrumMismatch);
  }
}

TEST(Align, RotatedAndScaled) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  const std::size_t n = 1000;
  std::vector<double> tx(n), rx(n);
  for (auto& v : tx) v = nd(rng);
  for (std::size_t k = 0; k < n; ++k) rx[(k + 5) % n] = 2.0 * tx[k];
  const auto a = align(tx, rx);
  EXPECT_EQ(a.delay, 5u);
  EXPECT_NEAR(a.gain, 2.0, 1e-12);
  for (std::size_t k = 0; k < n; ++k) EXPECT_NEAR(a.rx_aligned[k], tx[k], 1e-12);

  const auto same = align(tx, tx);
  EXPECT_EQ(same.delay, 0u);
  EXPECT_NEAR(same.gain, 1.0, 1e-15);
}

TEST(Align, NoisyGain) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> nd;
  const std::size_t n = 1 << 14;
  std::vector<double> tx(n), rx(n);
  for (std::size_t k = 0; k < n; ++k) {
    tx[k] = (rng() & 1) ? 1.0 : -1.0;
    rx[k] = 0.9 * tx[k] + 1e-3 * nd(rng);
  }
  const auto a = align(tx, rx);
  EXPECT_EQ(a.delay, 0u);
  EXPECT_NEAR(a.gain, 0.9, 1e-3);
}

TEST(Align, Errors) {
  const std::vector<double> z(8, 0.0), one{1, 0, 0, 0, 0, 0, 0, 0}, neg{-1, 0, 0, 0, 0, 0, 0, 0};
  try {
    align(z, one);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ZeroSignal);
  }
  try {
    align(one, z);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ZeroSignal);
  }
  EXPECT_THROW(align(one, std::vector<double>(7, 1.0)), Error);
}
