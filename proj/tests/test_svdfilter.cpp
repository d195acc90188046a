#include <gtest/gtest.h>

#include <Eigen/SVD>

#include "test_util.hpp"

using namespace rcldh;

namespace {

using Mat = Eigen::MatrixXcd;

Mat casorati(const ComplexWindow& w) {
  return Eigen::Map<const Mat>(w.data.data(), static_cast<Eigen::Index>(w.pixels()),
                               static_cast<Eigen::Index>(w.n_win));
}

double energy(const ComplexWindow& w) { return w.energy(); }

SvdFilterSpec with_rank(std::size_t k) {
  SvdFilterSpec s;
  s.rank_override = k;
  return s;
}

}  // namespace

TEST(CutoffToRank, Examples) {
  EXPECT_EQ(cutoff_to_rank(200, 67000, 512), 3u);
  EXPECT_EQ(cutoff_to_rank(200, 8000, 512), 26u);
  EXPECT_EQ(cutoff_to_rank(0, 8000, 512), 1u);
  EXPECT_EQ(cutoff_to_rank(0, 64000, 16), 1u);
}

TEST(CutoffToRank, UpperClamp) {
  EXPECT_EQ(cutoff_to_rank(3000, 8000, 64), 16u);
}

TEST(CutoffToRank, CutoffAtNyquistIsRejected) {
  EXPECT_THROW(cutoff_to_rank(4000, 8000, 64), Error);
  EXPECT_THROW(cutoff_to_rank(-1, 8000, 64), Error);
}

TEST(SvdFilter, RankOverrideZeroIsIdentity) {
  const auto w = test::random_window(16, 4, 4, 1);
  EXPECT_EQ(svd_clutter_filter(w, with_rank(0), 1000).data, w.data);
}

TEST(SvdFilter, RankOverrideMustBeBelowWindow) {
  const auto w = test::random_window(8, 4, 4, 1);
  EXPECT_THROW(svd_clutter_filter(w, with_rank(8), 1000), Error);
}

TEST(SvdFilter, RankOneWindowIsAnnihilated) {
  // Static speckle modulated by a common temporal factor.
  const auto img = test::random_window(1, 8, 8, 2);
  const auto mod = test::random_window(32, 1, 1, 3);
  ComplexWindow w;
  w.n_win = 32;
  w.ny = w.nx = 8;
  w.data.resize(32 * 64);
  for (std::size_t t = 0; t < 32; ++t)
    for (std::size_t p = 0; p < 64; ++p) w.at(t, p) = img.data[p] * mod.data[t];
  const auto out = svd_clutter_filter(w, with_rank(1), 1000);
  EXPECT_LT(energy(out), 1e-10 * energy(w));
}

TEST(SvdFilter, MatchesBdcsvdTruncation) {
  for (std::size_t k : {1u, 3u, 7u}) {
    const auto w = test::random_window(24, 10, 12, 10 + k);
    const auto split = svd_split(w, k);
    const Mat a = casorati(w);
    Eigen::BDCSVD<Mat> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto kk = static_cast<Eigen::Index>(k);
    const Mat low = svd.matrixU().leftCols(kk) * svd.singularValues().head(kk).asDiagonal() *
                    svd.matrixV().leftCols(kk).adjoint();
    const Mat expect = a - low;
    const double scale = a.norm();
    EXPECT_LT((casorati(split.filtered) - expect).norm() / scale, 1e-9);
    ASSERT_EQ(split.singular_values.size(), 24u);
    for (Eigen::Index i = 0; i < 24; ++i)
      EXPECT_NEAR(split.singular_values[static_cast<std::size_t>(i)], svd.singularValues()(i),
                  1e-8 * svd.singularValues()(0));
  }
}

TEST(SvdFilter, SingularValuesNonIncreasing) {
  const auto s = svd_split(test::random_window(32, 6, 6, 4), 2).singular_values;
  for (std::size_t i = 1; i < s.size(); ++i) EXPECT_LE(s[i], s[i - 1]);
}

TEST(SvdFilter, FilteredPlusRejectedIsOriginal) {
  const auto w = test::random_window(20, 7, 9, 5);
  const auto split = svd_split(w, 4);
  const Mat sum = casorati(split.filtered) + casorati(split.rejected);
  EXPECT_LT((sum - casorati(w)).norm() / casorati(w).norm(), 1e-6);
}

TEST(SvdFilter, EnergyStrictlyDecreasesWithRank) {
  const auto w = test::random_window(16, 8, 8, 6);
  double prev = energy(w);
  for (std::size_t k = 1; k < 16; ++k) {
    const double e = energy(svd_split(w, k).filtered);
    EXPECT_LT(e, prev) << "k=" << k;
    prev = e;
  }
}

TEST(SvdFilter, RejectedRankAtMostK) {
  const auto w = test::random_window(20, 6, 6, 7);
  for (std::size_t k : {1u, 2u, 5u}) {
    const Mat r = casorati(svd_split(w, k).rejected);
    Eigen::BDCSVD<Mat> svd(r);
    const auto& s = svd.singularValues();
    for (Eigen::Index i = static_cast<Eigen::Index>(k); i < s.size(); ++i)
      EXPECT_LT(s(i), 1e-8 * s(0));
  }
}

TEST(SvdFilter, CommutesWithScaling) {
  const auto w = test::random_window(16, 5, 5, 8);
  const std::complex<double> c{-2.5, 0.75};
  ComplexWindow cw = w;
  for (auto& v : cw.data) v *= c;
  const auto a = svd_split(w, 3).filtered;
  const auto b = svd_split(cw, 3).filtered;
  Mat diff = casorati(b) - c * casorati(a);
  EXPECT_LT(diff.norm() / casorati(b).norm(), 1e-9);
}

TEST(SvdFilter, RejectsNonFinite) {
  auto w = test::random_window(8, 2, 2, 9);
  w.data[5] = {0, std::numeric_limits<double>::infinity()};
  EXPECT_THROW(svd_split(w, 1), Error);
}

TEST(SvdFilter, SuppressesGlobalPhaseClutter) {
  constexpr double fs = 64000;
  SceneSpec scene = default_scene(32, 32);
  scene.seed = 77;
  scene.paint(Region::static_tissue, 0, 0, 32, 16);
  scene.paint(Region::artery, 6, 16, 6, 16);
  scene.paint(Region::vein, 20, 16, 6, 16);
  SceneSpec dirty_scene = scene;
  dirty_scene.bulk = BulkMotion{3.0, 250.0, 2};
  const auto clean = gen_field_stack(scene, fs, 1024);
  const auto dirty = gen_field_stack(dirty_scene, fs, 1024);
  const StftPlan plan{};
  SvdFilterSpec svd;
  const Band low{0, 1000}, high{1000, fs / 2};
  const auto stat = clean.truth.region_mask(Region::static_tissue);
  const auto artery = clean.truth.region_mask(Region::artery);
  const auto vein = clean.truth.region_mask(Region::vein);

  auto band_level = [&](const SpectralCube& c, const Band& b, const RoiMask& m) {
    double s = 0;
    for (std::size_t k : band_bins(b, c.nbins, fs))
      for (std::size_t p = 0; p < c.frame_size(); ++p)
        if (m.mask.data[p]) s += c.power[k * c.frame_size() + p];
    return s;
  };
  double raw = 0, filt = 0, vessel_clean = 0, vessel_filt = 0;
  const auto dw = make_windows(dirty.stack, plan);
  const auto cw = make_windows(clean.stack, plan);
  for (std::size_t m = 0; m < dw.size(); ++m) {
    const auto d_raw = dpsd(dw[m], fs);
    const auto d_filt = dpsd(svd_clutter_filter(dw[m], svd, fs), fs);
    const auto c_raw = dpsd(cw[m], fs);
    raw += band_level(d_raw, low, stat);
    filt += band_level(d_filt, low, stat);
    vessel_filt += band_level(d_filt, high, artery) + band_level(d_filt, high, vein);
    vessel_clean += band_level(c_raw, high, artery) + band_level(c_raw, high, vein);
  }
  EXPECT_GE(10 * std::log10(raw / filt), 20.0);
  EXPECT_LT(std::abs(10 * std::log10(vessel_filt / vessel_clean)), 1.0);
}
