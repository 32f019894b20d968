#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "pdlab/constellation.hpp"
#include "pdlab/sequence.hpp"

using namespace pdlab;

TEST(Prbs23, FullPeriod) {
  Prbs23 p(0);
  const auto s0 = p.state();
  std::uint64_t ones = 0;
  for (std::uint64_t i = 0; i < Prbs23::kPeriod; ++i) {
    ones += p.next();
    if (i + 1 < Prbs23::kPeriod) ASSERT_NE(p.state(), s0) << "short cycle at step " << i;
  }
  EXPECT_EQ(p.state(), s0);
  EXPECT_EQ(ones, std::uint64_t{1} << 22);  // m-sequence: 2^(n-1) ones per period
}

TEST(Prbs23, RunsTest) {
  // Wald-Wolfowitz runs test, two sided, alpha = 1e-3
  for (std::uint64_t seed : {1u, 2u, 12345u}) {
    for (std::size_t n : {std::size_t{1} << 12, std::size_t{1} << 16, std::size_t{1} << 20}) {
      Prbs23 p(seed);
      double n1 = 0, runs = 1;
      unsigned prev = p.next();
      n1 += prev;
      for (std::size_t i = 1; i < n; ++i) {
        const unsigned b = p.next();
        n1 += b;
        runs += b != prev;
        prev = b;
      }
      const double N = static_cast<double>(n), n0 = N - n1;
      const double mu = 2.0 * n0 * n1 / N + 1.0;
      const double var = (mu - 1.0) * (mu - 2.0) / (N - 1.0);
      EXPECT_LT(std::abs(runs - mu) / std::sqrt(var), 3.2905) << "seed " << seed << " n " << n;
    }
  }
}

TEST(Frame, SizesAndDeterminism) {
  const auto c = builtin_constellation("cross-qam128");
  const auto a = generate_frame(1, 1 << 16, c);
  EXPECT_EQ(a.size(), 65536u);
  EXPECT_EQ(a.bits.size(), 2u * 7u * 65536u);
  const auto b = generate_frame(1, 1 << 16, c);
  EXPECT_EQ(a.symbols, b.symbols);
  EXPECT_EQ(a.bits, b.bits);
  const auto d = generate_frame(2, 1 << 16, c);
  EXPECT_FALSE(a.symbols == d.symbols);
}

TEST(Frame, BitOrderIsXThenYMsbFirst) {
  const auto c = builtin_constellation("qam16");
  const auto f = generate_frame(9, 64, c);
  Prbs23 p(9);
  for (std::size_t k = 0; k < f.size(); ++k) {
    std::uint32_t lx = 0, ly = 0;
    for (int i = 0; i < 4; ++i) lx = lx << 1 | p.next();
    for (int i = 0; i < 4; ++i) ly = ly << 1 | p.next();
    ASSERT_EQ(f.x_labels[k], lx);
    ASSERT_EQ(f.y_labels[k], ly);
    ASSERT_EQ(f.symbols.x[k], c.point_for_label(lx));
  }
}

TEST(Frame, SymbolFrequenciesUniform) {
  const std::size_t N = 1 << 16;
  for (const auto& name : builtin_constellation_names()) {
    const auto c = builtin_constellation(name);
    const auto f = generate_frame(1, N, c);
    const double p = 1.0 / static_cast<double>(c.size());
    const double sd = std::sqrt(N * p * (1 - p));
    for (const auto* labels : {&f.x_labels, &f.y_labels}) {
      std::vector<double> count(c.size(), 0.0);
      for (auto l : *labels) count[l] += 1.0;
      for (std::size_t j = 0; j < c.size(); ++j) EXPECT_LT(std::abs(count[j] - N * p), 5.0 * sd) << name << " label " << j;
    }
  }
}

TEST(Lanes, SingleSymbol) {
  DualPol s{{cd{1, 2}}, {cd{3, -4}}};
  const auto l = lanes(s);
  EXPECT_EQ(l[0].id, Lane::XI);
  EXPECT_EQ(l[0].values, std::vector<double>{1});
  EXPECT_EQ(l[1].values, std::vector<double>{2});
  EXPECT_EQ(l[2].values, std::vector<double>{3});
  EXPECT_EQ(l[3].values, std::vector<double>{-4});
}

TEST(Lanes, ZeroFrame) {
  DualPol s{std::vector<cd>(5), std::vector<cd>(5)};
  for (const auto& l : lanes(s)) EXPECT_EQ(l.values, std::vector<double>(5, 0.0));
}

TEST(Lanes, RoundTripAnyOrder) {
  const auto f = generate_frame(4, 1000, builtin_constellation("qam64"));
  auto l = lanes(f.symbols);
  EXPECT_EQ(reassemble(l), f.symbols);
  std::swap(l[0], l[3]);
  std::swap(l[1], l[2]);
  EXPECT_EQ(reassemble(l), f.symbols);
}

TEST(Lanes, Mismatch) {
  auto l = lanes(DualPol{{cd{1, 2}, cd{0, 1}}, {cd{3, 4}, cd{1, 1}}});
  l[2].values.pop_back();
  try {
    reassemble(l);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::LaneMismatch);
  }
  l = lanes(DualPol{{cd{1, 2}}, {cd{3, 4}}});
  l[1].id = Lane::XI;
  EXPECT_THROW(reassemble(l), Error);
}

TEST(FrameFile, RoundTrip) {
  const auto f = generate_frame(5, 777, builtin_constellation("cross-qam128"));
  const auto path = std::filesystem::temp_directory_path() / "pdlab_test_frame.bin";
  save_frame(path, f);
  const auto r = load_frame(path);
  EXPECT_EQ(r.symbols, f.symbols);
  EXPECT_EQ(r.seed, 5u);
  EXPECT_EQ(r.constellation_name, "cross-qam128");
  EXPECT_EQ(std::filesystem::file_size(path), 4u * 777u * 8u);
  EXPECT_EQ(frame_hash(r.symbols), frame_hash(f.symbols));
}
