#include <gtest/gtest.h>

#include <fstream>
#include <numeric>
#include <random>

#include "test_util.hpp"

using namespace rcldh;

namespace {

constexpr double kFs = 64000;

/// Single-region scene, noiseless, no bulk motion.
SceneSpec plain_scene(std::size_t nx, std::size_t ny, RegionParams tissue) {
  SceneSpec s;
  s.resize(ny, nx);
  s.params(Region::tissue) = tissue;
  s.noise_snr_db.reset();
  return s;
}

std::vector<std::complex<double>> pixel_series(const HologramStack& s, std::size_t p) {
  std::vector<std::complex<double>> v(s.meta.nt);
  for (std::size_t t = 0; t < s.meta.nt; ++t) v[t] = std::complex<double>(s.frame(t)[p]);
  return v;
}

double lag1_autocorr(const std::vector<std::complex<double>>& g) {
  std::complex<double> num = 0;
  double den = 0;
  for (std::size_t n = 0; n + 1 < g.size(); ++n) num += g[n + 1] * std::conj(g[n]);
  for (const auto& v : g) den += std::norm(v);
  return num.real() / den;
}

double region_mean(const RealImage& img, const RoiMask& m) {
  double s = 0;
  for (std::size_t p = 0; p < img.size(); ++p)
    if (m.mask.data[p]) s += img.data[p];
  return s / static_cast<double>(m.count());
}

}  // namespace

TEST(Cardiac, Periodic) {
  const double hr = 31.25, period = 1 / hr;
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 0.5);
  std::vector<double> t(200), shifted(200);
  for (std::size_t i = 0; i < t.size(); ++i) {
    t[i] = u(rng);
    shifted[i] = t[i] + period;
  }
  const auto a = cardiac_waveform(hr, t), b = cardiac_waveform(hr, shifted);
  for (std::size_t i = 0; i < t.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-9);
}

TEST(Cardiac, SpansZeroToOne) {
  std::vector<double> t(1 << 18);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(i) / t.size();
  const auto p = cardiac_waveform(1.0, t);
  const auto [lo, hi] = std::minmax_element(p.begin(), p.end());
  EXPECT_NEAR(*lo, 0.0, 1e-6);
  EXPECT_NEAR(*hi, 1.0, 1e-6);
}

TEST(Cardiac, TwoMaximaPerCycleAtOneKilohertz) {
  std::vector<double> t(1000);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(i) / 1000;
  const auto p = cardiac_waveform(1.0, t);
  std::vector<std::size_t> maxima;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double prev = p[(i + p.size() - 1) % p.size()], next = p[(i + 1) % p.size()];
    if (p[i] > prev && p[i] > next) maxima.push_back(i);
  }
  ASSERT_EQ(maxima.size(), 2u);
  EXPECT_NEAR(p[maxima[0]], 1.0, 1e-3);
  EXPECT_NEAR(static_cast<double>(maxima[1]) / 1000, 0.45, 0.005);
  EXPECT_NEAR(p[maxima[1]], 0.25, 0.005);
}

TEST(Cardiac, RejectsNonPositiveRate) {
  const std::vector<double> t{0.0};
  EXPECT_THROW(cardiac_waveform(0, t), Error);
}

TEST(GenField, InfiniteTauFreezesSpeckle) {
  auto scene = plain_scene(4, 3, {std::numeric_limits<double>::infinity(), 0, 0, 1});
  const auto sim = gen_field_stack(scene, kFs, 50);
  for (std::size_t p = 0; p < 12; ++p) {
    const auto s = pixel_series(sim.stack, p);
    for (const auto& v : s) EXPECT_EQ(v, s[0]);
    EXPECT_GT(std::abs(s[0]), 0.0);
  }
}

TEST(GenField, FastDecorrelationIsWhite) {
  auto scene = plain_scene(1, 1, {1e-9, 0, 0, 1});
  const auto sim = gen_field_stack(scene, kFs, 100000);
  EXPECT_LT(std::abs(lag1_autocorr(pixel_series(sim.stack, 0))), 0.02);
}

TEST(GenField, LagOneAutocorrelationMatchesCoefficient) {
  const double a = 0.9;
  auto scene = plain_scene(1, 1, {-1 / (kFs * std::log(a)), 0, 0, 1});
  const auto sim = gen_field_stack(scene, kFs, 100000);
  EXPECT_NEAR(lag1_autocorr(pixel_series(sim.stack, 0)), a, 0.01);
}

TEST(GenField, UnitVarianceTimesReflectivitySquared) {
  auto scene = plain_scene(8, 8, {tau_from_linewidth(3000), 0, 0, 2.0});
  const auto sim = gen_field_stack(scene, kFs, 4000);
  double e = 0;
  for (const auto& v : sim.stack.samples) e += std::norm(std::complex<double>(v));
  EXPECT_NEAR(e / static_cast<double>(sim.stack.samples.size()), 4.0, 0.1);
}

TEST(GenField, NoiseVarianceFollowsSnr) {
  SceneSpec scene = default_scene(16, 16);
  scene.noise_snr_db = 20;
  const auto sim = gen_field_stack(scene, kFs, 8);
  double r2 = 0;
  for (double r : sim.truth.reflectivity.data) r2 += r * r;
  r2 /= static_cast<double>(sim.truth.reflectivity.size());
  EXPECT_NEAR(sim.truth.noise_variance, r2 / 100, 1e-12);
}

TEST(GenField, DeterministicAcrossThreadCounts) {
  SceneSpec scene = default_scene(24, 20);
  scene.seed = 99;
  scene.bulk = BulkMotion{0.5, 100, 3};
  set_num_threads(1);
  const auto a = gen_field_stack(scene, kFs, 300);
  set_num_threads(4);
  const auto b = gen_field_stack(scene, kFs, 300);
  set_num_threads(0);
  EXPECT_EQ(encode_stack(a.stack), encode_stack(b.stack));
  scene.seed = 100;
  EXPECT_NE(gen_field_stack(scene, kFs, 300).stack.samples, a.stack.samples);
}

TEST(GenField, RegionSpectrumMatchesClosedForm) {
  // 256-sample windows, 200 per pixel, 256 pixels; a 8 kHz linewidth keeps
  // the finite-window bias well below the tolerance.
  const double linewidth = 8000;
  const std::size_t n = 256, windows = 200;
  auto scene = plain_scene(16, 16, {tau_from_linewidth(linewidth), 0, 0, 1});
  scene.seed = 5;
  const auto sim = gen_field_stack(scene, kFs, n * windows);
  std::vector<double> avg(n, 0.0);
  for (const auto& w : make_windows(sim.stack, StftPlan{n, n})) {
    const auto c = dpsd(w, kFs);
    for (std::size_t k = 0; k < n; ++k)
      for (double v : c.bin(k)) avg[k] += v;
  }
  const double a = std::exp(-2 * std::numbers::pi * linewidth / kFs);
  std::vector<double> oracle(n);
  for (std::size_t k = 0; k < n; ++k)
    oracle[k] = 1.0 / std::norm(1.0 - a * std::polar(1.0, -2 * std::numbers::pi * k / n));
  const double sa = std::accumulate(avg.begin(), avg.end(), 0.0);
  const double so = std::accumulate(oracle.begin(), oracle.end(), 0.0);
  for (std::size_t k = 0; k < n; ++k)
    EXPECT_LT(test::rel_err(avg[k] / sa, oracle[k] / so), 0.05) << "bin " << k;
}

TEST(GenField, EqualReflectivityConservesEnergyAcrossLinewidths) {
  SceneSpec scene = plain_scene(32, 32, {tau_from_linewidth(400), 0, 0, 1});
  scene.params(Region::artery) = {tau_from_linewidth(2500), 0, 0, 1};
  scene.paint(Region::artery, 16, 0, 16, 32);
  scene.seed = 8;
  const auto sim = gen_field_stack(scene, kFs, 4096);
  WindowSpec spec;
  spec.svd_enabled = false;
  spec.bands = {{"full", {0, kFs / 2}, false}, {"low", {200, 1000}, false}};
  const auto out = process_windows(sim.stack, spec);
  const auto slow = sim.truth.region_mask(Region::tissue);
  const auto fast = sim.truth.region_mask(Region::artery);
  const RealImage full = temporal_mean(out.movies[0]), low = temporal_mean(out.movies[1]);
  EXPECT_LT(test::rel_err(region_mean(full, fast), region_mean(full, slow)), 0.02);
  const double frac_slow = region_mean(low, slow) / region_mean(full, slow);
  const double frac_fast = region_mean(low, fast) / region_mean(full, fast);
  EXPECT_GT(frac_slow, 2 * frac_fast);
}

TEST(GenField, BulkPhaseInvisibleToFullBandButNotLowBand) {
  SceneSpec scene = default_scene(16, 16);
  scene.noise_snr_db.reset();
  scene.seed = 12;
  scene.paint(Region::static_tissue, 0, 0, 16, 4);
  SceneSpec moving = scene;
  moving.bulk = BulkMotion{3.0, 250, 2};
  const auto a = gen_field_stack(scene, kFs, 2048);
  const auto b = gen_field_stack(moving, kFs, 2048);
  WindowSpec spec;
  spec.svd_enabled = false;
  spec.bands = {{"full", {0, kFs / 2}, false}, {"low", {200, 1000}, false}};
  const auto ma = process_windows(a.stack, spec), mb = process_windows(b.stack, spec);
  for (std::size_t i = 0; i < ma.movies[0].frames.size(); ++i)
    EXPECT_LT(test::rel_err(mb.movies[0].frames[i], ma.movies[0].frames[i]), 1e-5);
  // Static speckle sits at DC until the bulk phase spreads it into the band.
  const auto stat = a.truth.region_mask(Region::static_tissue);
  const double la = region_mean(temporal_mean(ma.movies[1]), stat);
  const double lb = region_mean(temporal_mean(mb.movies[1]), stat);
  EXPECT_GT(10 * std::log10(lb / la), 20.0);
}

TEST(GenField, SceneValidation) {
  SceneSpec s = default_scene(8, 8);
  s.params(Region::vein).pulsatility = 1.2;
  try {
    s.validate();
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("pulsatility"), std::string::npos);
    EXPECT_EQ(e.kind(), ErrorKind::config);
  }
  s = default_scene(64, 64);
  s.params(Region::absorber).reflectivity = 1.0;
  EXPECT_THROW(s.validate(), Error);
  s = default_scene(8, 8);
  s.params(Region::tissue).tau_c_s = 0;
  EXPECT_THROW(s.validate(), Error);
  s = default_scene(8, 8);
  s.params(Region::artery).reflectivity = -1;
  EXPECT_THROW(gen_field_stack(s, kFs, 4), Error);
}

TEST(GenField, DefaultSceneLayout) {
  const auto s = default_scene();
  EXPECT_EQ(s.label(0, 12), Region::artery);
  EXPECT_EQ(s.label(63, 19), Region::artery);
  EXPECT_EQ(s.label(10, 40), Region::vein);
  EXPECT_EQ(s.label(45, 55), Region::absorber);
  EXPECT_EQ(s.label(5, 55), Region::tissue);
  EXPECT_FALSE(uniform_scene().has_region(Region::absorber));
}

TEST(Decimate, FactorOneIsIdentity) {
  const auto sim = gen_field_stack(default_scene(8, 8), kFs, 16);
  EXPECT_EQ(integrate_decimate(sim.stack, 1), sim.stack);
}

TEST(Decimate, ConstantStackUnchanged) {
  auto s = test::make_holo(3, 2, 16, kFs);
  for (auto& v : s.samples) v = {0.75f, -2.5f};
  const auto d = integrate_decimate(s, 4);
  EXPECT_EQ(d.meta.nt, 4u);
  EXPECT_DOUBLE_EQ(d.meta.sample_rate_hz, kFs / 4);
  EXPECT_DOUBLE_EQ(d.meta.exposure_s, 4 / kFs);
  for (const auto& v : d.samples) EXPECT_EQ(v, std::complex<float>(0.75f, -2.5f));
}

TEST(Decimate, NonDivisorIsAnError) {
  EXPECT_THROW(integrate_decimate(test::make_holo(1, 1, 10), 3), Error);
  EXPECT_THROW(integrate_decimate(test::make_holo(1, 1, 10), 0), Error);
}

TEST(Decimate, DirichletResponse) {
  const double f = 0.3 * kFs;
  const std::size_t d = 8, nt = 64;
  auto s = test::make_holo(1, 1, nt, kFs);
  for (std::size_t t = 0; t < nt; ++t) {
    const auto v = std::polar(1.0, 2 * std::numbers::pi * f * static_cast<double>(t) / kFs);
    s.frame(t)[0] = {static_cast<float>(v.real()), static_cast<float>(v.imag())};
  }
  const auto out = integrate_decimate(s, d);
  const double x = std::numbers::pi * f / kFs;
  const double expect = std::abs(std::sin(x * d) / (d * std::sin(x)));
  for (const auto& v : out.samples) EXPECT_NEAR(std::abs(std::complex<double>(v)), expect, 1e-6);
}

TEST(GroundTruthExport, WritesJsonAndMaps) {
  const auto dir = test::scratch_dir("truth");
  const auto sim = gen_field_stack(default_scene(16, 12), kFs, 32);
  const auto written = write_ground_truth(sim.truth, dir / "s");
  for (const auto& p : written) EXPECT_TRUE(std::filesystem::exists(p)) << p;
  const auto j = nlohmann::json::parse(std::ifstream(dir / "s.truth.json"));
  EXPECT_EQ(j.at("nx"), 16);
  EXPECT_EQ(j.at("ny"), 12);
  EXPECT_EQ(j.at("nt"), 32);
  EXPECT_EQ(j.at("regions").at("static").at("tau_c_s"), "inf");
  EXPECT_EQ(std::filesystem::file_size(dir / "s.truth.reflectivity.f32"), 16u * 12 * 4);
  EXPECT_EQ(read_truth_labels(dir / "s.truth.json"), sim.truth.labels);
}

TEST(GroundTruthExport, TauFollowsCardiacDrive) {
  SceneSpec scene = default_scene(8, 8);
  const auto sim = gen_field_stack(scene, kFs, 4096);
  const auto& truth = sim.truth;
  const double tau0 = scene.params(Region::artery).tau_c_s;
  const auto peak = static_cast<std::size_t>(
      std::max_element(truth.cardiac.begin(), truth.cardiac.end()) - truth.cardiac.begin());
  const double beta = scene.params(Region::artery).pulsatility;
  EXPECT_NEAR(truth.tau_c(Region::artery, peak),
              tau0 / (1 + beta * truth.cardiac[peak] * (scene.tau_ratio - 1)), 1e-15);
  EXPECT_LT(truth.tau_c(Region::artery, peak), tau0 / (1 + beta * 1.99));
}
