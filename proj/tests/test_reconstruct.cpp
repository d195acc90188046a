#include <gtest/gtest.h>

#include <random>

#include "test_util.hpp"

using namespace rcldh;

namespace {

constexpr double kLambda = 785e-9;
constexpr double kPitch = 20e-6;

ComplexImage random_field(std::size_t ny, std::size_t nx, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  ComplexImage f(ny, nx);
  for (auto& v : f.data) v = {nd(rng), nd(rng)};
  return f;
}

double energy(const ComplexImage& f) {
  double e = 0;
  for (const auto& v : f.data) e += std::norm(v);
  return e;
}

double max_diff(const ComplexImage& a, const ComplexImage& b) {
  double d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a.data[i] - b.data[i]));
  return d;
}

/// Pearson correlation of complex images, real and imaginary parts pooled.
double complex_corr(const ComplexImage& a, const ComplexImage& b) {
  std::vector<double> x, y;
  for (std::size_t i = 0; i < a.size(); ++i) {
    x.push_back(a.data[i].real());
    x.push_back(a.data[i].imag());
    y.push_back(b.data[i].real());
    y.push_back(b.data[i].imag());
  }
  return pearson(x, y);
}

}  // namespace

TEST(Demodulate, ZerosGiveZeros) {
  const auto out = demodulate_offaxis(RealImage(32, 32, 0.0), CarrierSpec{});
  for (const auto& v : out.data) EXPECT_EQ(v, std::complex<double>(0));
}

TEST(Demodulate, CosineFringeGivesHalfModulus) {
  const std::size_t n = 64;
  const CarrierSpec c{0.25, 0.125, 0.1};
  RealImage f(n, n);
  for (std::size_t y = 0; y < n; ++y)
    for (std::size_t x = 0; x < n; ++x)
      f(y, x) = 1 + std::cos(2 * std::numbers::pi * (c.kx_cyc_per_px * x + c.ky_cyc_per_px * y));
  const auto out = demodulate_offaxis(f, c);
  for (const auto& v : out.data) EXPECT_NEAR(std::abs(v), 0.5, 1e-6);
}

TEST(Demodulate, DcIsRejected) {
  const double c = 7.5;
  const auto out = demodulate_offaxis(RealImage(48, 64, c), CarrierSpec{0.3, 0.25, 0.12});
  for (const auto& v : out.data) EXPECT_LT(std::abs(v), 1e-9 * c);
}

TEST(Demodulate, WindowOutsideNyquistSquare) {
  try {
    demodulate_offaxis(RealImage(32, 32, 1.0), CarrierSpec{0.45, 0.1, 0.1});
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("carrier window out of range"), std::string::npos);
  }
}

TEST(Demodulate, Linear) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  RealImage f(32, 32), g(32, 32), h(32, 32);
  const double a = 1.7, b = -0.3;
  for (std::size_t i = 0; i < f.size(); ++i) {
    f.data[i] = nd(rng);
    g.data[i] = nd(rng);
    h.data[i] = a * f.data[i] + b * g.data[i];
  }
  const CarrierSpec c;
  const auto df = demodulate_offaxis(f, c), dg = demodulate_offaxis(g, c), dh = demodulate_offaxis(h, c);
  for (std::size_t i = 0; i < f.size(); ++i)
    EXPECT_NEAR(std::abs(dh.data[i] - (a * df.data[i] + b * dg.data[i])), 0, 1e-12);
}

TEST(Propagate, ZeroDistanceIsIdentity) {
  const auto f = random_field(16, 24, 1);
  EXPECT_EQ(angular_spectrum_propagate(f, 0, kLambda, kPitch), f);
}

TEST(Propagate, PlaneWaveGainsOnlyPhase) {
  const double z = 3.3e-3;
  ComplexImage f(16, 16, {0.6, -0.8});
  const auto out = angular_spectrum_propagate(f, z, kLambda, kPitch);
  const std::complex<double> expect =
      f.data[0] * std::polar(1.0, 2 * std::numbers::pi * z / kLambda);
  for (const auto& v : out.data) {
    EXPECT_NEAR(std::abs(v), 1.0, 1e-12);
    EXPECT_NEAR(std::abs(v - expect), 0, 1e-9);
  }
}

TEST(Propagate, EnergyConservedWithoutEvanescentContent) {
  const auto f = random_field(32, 32, 2);
  const auto out = angular_spectrum_propagate(f, 5e-3, kLambda, kPitch);
  EXPECT_LT(test::rel_err(energy(out), energy(f)), 1e-6);
}

TEST(Propagate, EvanescentComponentsAreRemoved) {
  // Pitch below half a wavelength puts the outer spectrum beyond k.
  const auto f = random_field(32, 32, 3);
  const auto out = angular_spectrum_propagate(f, 1e-6, 785e-9, 300e-9);
  EXPECT_LT(energy(out), energy(f) * 0.99);
}

TEST(Propagate, ForwardThenBackReturnsInput) {
  const auto f = random_field(24, 40, 4);
  for (double z : {1e-4, 2e-3, -7e-3}) {
    const auto back = angular_spectrum_propagate(angular_spectrum_propagate(f, z, kLambda, kPitch),
                                                 -z, kLambda, kPitch);
    EXPECT_LT(std::sqrt(energy([&] {
                ComplexImage d = back;
                for (std::size_t i = 0; i < d.size(); ++i) d.data[i] -= f.data[i];
                return d;
              }()) / energy(f)),
              1e-6);
  }
}

TEST(Propagate, PaddedPathKeepsShape) {
  const auto f = random_field(20, 30, 6);
  PropagationOptions o;
  o.pad_pow2 = true;
  const auto out = angular_spectrum_propagate(f, 1e-3, kLambda, kPitch, o);
  EXPECT_EQ(out.ny, 20u);
  EXPECT_EQ(out.nx, 30u);
  for (const auto& v : out.data) EXPECT_TRUE(std::isfinite(v.real()));
}

TEST(ReconstructStack, ZeroFramesGiveZeroHolograms) {
  const auto frames = test::make_frames(32, 32, 3);
  const auto h = reconstruct_stack(frames, CarrierSpec{}, 1e-3);
  for (const auto& v : h.samples) EXPECT_EQ(v, std::complex<float>(0));
  EXPECT_EQ(h.meta, frames.meta);
}

TEST(ReconstructStack, ZeroDistanceEqualsDemodulation) {
  auto frames = test::make_frames(32, 32, 2);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<float> u(0, 10);
  for (auto& v : frames.samples) v = u(rng);
  const CarrierSpec c;
  const auto h = reconstruct_stack(frames, c, 0);
  for (std::size_t t = 0; t < 2; ++t) {
    const auto d = demodulate_offaxis(frame_image(frames, t), c);
    for (std::size_t i = 0; i < d.size(); ++i) {
      EXPECT_EQ(h.frame(t)[i].real(), static_cast<float>(d.data[i].real()));
      EXPECT_EQ(h.frame(t)[i].imag(), static_cast<float>(d.data[i].imag()));
    }
  }
}

TEST(ReconstructStack, RecoversReflectivityOfStaticScene) {
  // Static reflectivity map under dynamic speckle, band-limited by a pupil,
  // defocused, rendered off-axis; refocusing and temporal RMS should track
  // the reflectivity map.
  SceneSpec scene = default_scene(64, 64);
  scene.labels = Grid2<std::uint8_t>(64, 64, 0);
  scene.params(Region::tissue) = {1e-6, 0.0, 0.0, 1.0};
  scene.params(Region::absorber) = {1e-6, 0.0, 0.0, 0.25};
  scene.paint(Region::absorber, 0, 0, 32, 64);
  scene.noise_snr_db.reset();
  scene.seed = 12;
  const auto sim = gen_field_stack(scene, 64000, 256);
  InterferogramSpec spec;
  spec.ref_amplitude = 20;
  spec.pupil_radius_cyc_per_px = 0.1;
  spec.defocus_m = 4e-3;
  const FrameStack frames = simulate_interferograms(sim.stack, spec);
  const HologramStack h = reconstruct_stack(frames, spec.carrier, spec.defocus_m);

  RealImage rms(64, 64);
  for (std::size_t t = 0; t < h.meta.nt; ++t)
    for (std::size_t p = 0; p < rms.size(); ++p) rms.data[p] += std::norm(std::complex<double>(h.frame(t)[p]));
  for (auto& v : rms.data) v = std::sqrt(v / static_cast<double>(h.meta.nt));
  EXPECT_GT(pearson(rms.data, sim.truth.reflectivity.data), 0.95);
}

TEST(Interferograms, ZeroObjectGivesReferenceIntensity) {
  const auto h = test::make_holo(16, 16, 2);
  const auto f = render_interferograms(h, CarrierSpec{}, 3.0);
  for (float v : f.samples) EXPECT_NEAR(v, 9.0f, 1e-5);
}

TEST(Interferograms, NonNegative) {
  SceneSpec scene = default_scene(32, 32);
  const auto sim = gen_field_stack(scene, 64000, 8);
  const auto f = render_interferograms(sim.stack, CarrierSpec{}, 0.5);
  for (float v : f.samples) EXPECT_GE(v, 0.0f);
}

TEST(Interferograms, DemodulationRecoversFieldTimesReference) {
  SceneSpec scene = default_scene(64, 64);
  scene.seed = 21;
  const auto sim = gen_field_stack(scene, 64000, 4);
  const HologramStack h = apply_pupil(sim.stack, 0.08);
  const double amp = 10;
  const CarrierSpec c;
  const FrameStack f = render_interferograms(h, c, amp);
  for (std::size_t t = 0; t < 4; ++t) {
    const ComplexImage rec = demodulate_offaxis(frame_image(f, t), c);
    ComplexImage ref = frame_image(h, t);
    for (auto& v : ref.data) v *= amp;
    EXPECT_GT(complex_corr(rec, ref), 0.99);
    EXPECT_LT(max_diff(rec, ref), 0.05 * amp);
  }
}
