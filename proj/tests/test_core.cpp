#include <gtest/gtest.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <random>
#include <set>

#include "test_util.hpp"

using namespace rcldh;
using rcldh::test::scratch_dir;

namespace {

std::set<std::size_t> as_set(const std::vector<std::size_t>& v) { return {v.begin(), v.end()}; }

template <class Fn>
std::string error_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(BandBins, OneToThreeKilohertzOfEight) {
  EXPECT_EQ(as_set(band_bins(Band{1000, 3000}, 8, 8000)), (std::set<std::size_t>{1, 2, 6, 7}));
}

TEST(BandBins, FullBandTakesEverything) {
  EXPECT_EQ(band_bins(Band{0, 4000}, 8, 8000).size(), 8u);
}

TEST(BandBins, NyquistEdgeIsInclusive) {
  // f_k = {0, 1, -2, -1} kHz: |f| in [1, 2] with the Nyquist edge.
  EXPECT_EQ(as_set(band_bins(Band{1000, 2000}, 4, 4000)), (std::set<std::size_t>{1, 2, 3}));
}

TEST(BandBins, AboveNyquistIsRejected) {
  const auto msg = error_of([] { band_bins(Band{1000, 4001}, 8, 8000); });
  EXPECT_NE(msg.find("band exceeds Nyquist"), std::string::npos) << msg;
}

TEST(BandBins, InvertedBandIsRejected) {
  EXPECT_THROW(band_bins(Band{3000, 1000}, 8, 8000), Error);
}

TEST(BandBins, ConjugateSymmetry) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 * std::uniform_int_distribution<std::size_t>(1, 64)(rng);
    const double fs = 1000;
    std::uniform_real_distribution<double> u(0, fs / 2);
    double a = u(rng), b = u(rng);
    if (a > b) std::swap(a, b);
    if (a == b) continue;
    const auto bins = as_set(band_bins(Band{a, b}, n, fs));
    for (auto k : bins) EXPECT_TRUE(bins.count((n - k) % n)) << "n=" << n << " k=" << k;
  }
}

TEST(BandBins, AdjacentBandsPartitionTheAxis) {
  for (std::size_t n : {2u, 4u, 16u, 128u, 512u}) {
    const double fs = 64000;
    const auto full = band_bins(Band{0, fs / 2}, n, fs);
    EXPECT_EQ(full.size(), n);
    std::vector<double> edges{0, 200, 1000, 4000, 6000, fs / 2};
    std::multiset<std::size_t> all;
    for (std::size_t i = 0; i + 1 < edges.size(); ++i)
      for (auto k : band_bins(Band{edges[i], edges[i + 1]}, n, fs)) all.insert(k);
    EXPECT_EQ(all.size(), n);
    EXPECT_EQ(std::set<std::size_t>(all.begin(), all.end()).size(), n);
  }
}

TEST(BinFrequency, NegativeHalfMirrorsPositive) {
  for (std::size_t n : {4u, 8u, 10u, 512u})
    for (std::size_t k = 1; 2 * k < n; ++k)
      EXPECT_DOUBLE_EQ(bin_frequency(k, n, 1000), -bin_frequency(n - k, n, 1000));
  EXPECT_DOUBLE_EQ(bin_frequency(4, 8, 8000), -4000);
}

TEST(StackMeta, Validation) {
  StackMeta m;
  m.nx = 2;
  m.ny = 2;
  m.nt = 2;
  m.sample_rate_hz = 100;
  m.exposure_s = 0.01;
  EXPECT_NO_THROW(m.validate());
  m.exposure_s = 0.011;
  EXPECT_THROW(m.validate(), Error);
  m.exposure_s = 0;
  EXPECT_THROW(m.validate(), Error);
  m.exposure_s = 0.005;
  m.nt = 0;
  EXPECT_THROW(m.validate(), Error);
}

TEST(StackIo, HeaderSizeMatchesFieldSum) {
  // magic + 3 x u32 + u8 + 4 x f64
  EXPECT_EQ(kStackHeaderBytes, 6u + 3 * 4 + 1 + 4 * 8);
  auto s = test::make_frames(3, 2, 5);
  EXPECT_EQ(encode_stack(s).size(), 51u + 3 * 2 * 5 * sizeof(float));
  auto h = test::make_holo(3, 2, 5);
  EXPECT_EQ(encode_stack(h).size(), 51u + 3 * 2 * 5 * 2 * sizeof(float));
}

TEST(StackIo, DtypeCodes) {
  EXPECT_EQ(static_cast<int>(encode_stack(test::make_holo(1, 1, 1))[18]), 1);
  EXPECT_EQ(static_cast<int>(encode_stack(test::make_frames(1, 1, 1))[18]), 0);
}

TEST(StackIo, LittleEndianLayout) {
  auto s = test::make_frames(3, 2, 1, 500);
  const std::string b = encode_stack(s);
  EXPECT_EQ(b.substr(0, 6), "RCLDH1");
  EXPECT_EQ(static_cast<unsigned char>(b[6]), 3);
  EXPECT_EQ(static_cast<unsigned char>(b[10]), 2);
  EXPECT_EQ(static_cast<unsigned char>(b[14]), 1);
  double fs;
  std::memcpy(&fs, b.data() + 19, 8);
  EXPECT_EQ(fs, 500.0);
}

TEST(StackIo, RealRoundtrip) {
  const auto dir = scratch_dir("core_real");
  auto s = test::make_frames(2, 2, 2, 250);
  s.meta.origin_tag = "simulated";
  for (std::size_t i = 0; i < s.samples.size(); ++i) s.samples[i] = 0.5f * static_cast<float>(i) - 1.25f;
  write_stack(s, dir / "a.rcldh");
  EXPECT_EQ(std::get<FrameStack>(read_stack(dir / "a.rcldh")), s);
  EXPECT_TRUE(std::filesystem::exists(dir / "a.rcldh.meta.json"));
}

TEST(StackIo, BitExactRoundtripBothDtypes) {
  const auto dir = scratch_dir("core_bits");
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::uint32_t> bits;
  for (int trial = 0; trial < 6; ++trial) {
    const std::size_t nx = 1 + trial % 3, ny = 1 + trial / 3, nt = 1 + trial;
    auto r = test::make_frames(nx, ny, nt);
    for (auto& v : r.samples) {
      std::uint32_t u;
      do u = bits(rng); while (!std::isfinite(std::bit_cast<float>(u)));
      v = std::bit_cast<float>(u);
    }
    write_stack(r, dir / "r.rcldh");
    const auto rr = std::get<FrameStack>(read_stack(dir / "r.rcldh"));
    EXPECT_EQ(std::memcmp(rr.samples.data(), r.samples.data(), r.samples.size() * 4), 0);
    EXPECT_EQ(rr.meta, r.meta);

    auto h = test::make_holo(nx, ny, nt);
    for (auto& v : h.samples) v = {r.samples[0] * 3, -r.samples[0]};
    write_stack(h, dir / "h.rcldh");
    EXPECT_EQ(std::get<HologramStack>(read_stack(dir / "h.rcldh")), h);
  }
}

TEST(StackIo, SidecarRepeatsHeader) {
  const auto dir = scratch_dir("core_sidecar");
  auto h = test::make_holo(4, 3, 2, 64000);
  h.meta.exposure_s = 1e-5;
  write_stack(h, dir / "h.rcldh");
  const auto j = nlohmann::json::parse(std::ifstream(dir / "h.rcldh.meta.json"));
  EXPECT_EQ(j.at("nx"), 4);
  EXPECT_EQ(j.at("ny"), 3);
  EXPECT_EQ(j.at("nt"), 2);
  EXPECT_EQ(j.at("dtype"), 1);
  EXPECT_EQ(j.at("sample_rate_hz"), 64000.0);
  EXPECT_EQ(j.at("exposure_s"), 1e-5);
}

TEST(StackIo, BadMagic) {
  std::string b = encode_stack(test::make_frames(2, 2, 2));
  b.replace(0, 6, "XXXXXX");
  const auto msg = error_of([&] { decode_stack(b, "external"); });
  EXPECT_NE(msg.find("unrecognized format"), std::string::npos) << msg;
}

TEST(StackIo, TruncatedPayload) {
  std::string b = encode_stack(test::make_frames(2, 2, 2));
  b.resize(b.size() - 4);
  const auto msg = error_of([&] { decode_stack(b, "external"); });
  EXPECT_NE(msg.find("size mismatch"), std::string::npos) << msg;
  EXPECT_NE(msg.find(std::to_string(51 + 32)), std::string::npos) << msg;
  EXPECT_NE(msg.find(std::to_string(51 + 28)), std::string::npos) << msg;
}

TEST(StackIo, RefusesNonFinite) {
  auto s = test::make_frames(2, 1, 1);
  s.samples[1] = std::numeric_limits<float>::quiet_NaN();
  EXPECT_THROW(encode_stack(s), Error);
}

TEST(StackIo, MissingFileNamesPath) {
  const auto msg = error_of([] { read_stack("/nonexistent/dir/x.rcldh"); });
  EXPECT_NE(msg.find("/nonexistent/dir/x.rcldh"), std::string::npos) << msg;
}

TEST(Stats, PercentileAndPearson) {
  EXPECT_DOUBLE_EQ(percentile({1, 2, 3, 4, 5}, 50), 3);
  EXPECT_DOUBLE_EQ(percentile({1, 2, 3, 4, 5}, 25), 2);
  EXPECT_DOUBLE_EQ(percentile({0, 10}, 5), 0.5);
  const std::vector<double> a{1, 2, 3, 4}, b{2, 4, 6, 8}, c{4, 3, 2, 1};
  EXPECT_NEAR(pearson(a, b), 1, 1e-12);
  EXPECT_NEAR(pearson(a, c), -1, 1e-12);
  EXPECT_DOUBLE_EQ(pstdev_of(std::vector<double>{1, 3}), 1);
}

TEST(Threads, ParallelForVisitsEachIndexOnce) {
  for (unsigned t : {1u, 2u, 5u}) {
    set_num_threads(t);
    std::vector<int> hits(37, 0);
    parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; });
    for (int h : hits) EXPECT_EQ(h, 1);
  }
  set_num_threads(0);
}

TEST(Threads, ParallelForRethrows) {
  set_num_threads(3);
  EXPECT_THROW(parallel_for(10, [](std::size_t i) {
                 if (i == 7) fail(ErrorKind::numerical, "boom");
               }),
               Error);
  set_num_threads(0);
}
