#ifndef RCLDH_SIMULATOR_HPP
#define RCLDH_SIMULATOR_HPP

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <algorithm>
#include <span>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rcldh/core.hpp"
#include "rcldh/fft.hpp"
#include "rcldh/reconstruct.hpp"

namespace rcldh {

enum class Region : std::uint8_t { tissue = 0, artery = 1, vein = 2, static_tissue = 3, absorber = 4 };
inline constexpr std::size_t kRegionCount = 5;
inline constexpr std::array<const char*, kRegionCount> kRegionNames{"tissue", "artery", "vein",
                                                                    "static", "absorber"};

inline const char* region_name(Region r) { return kRegionNames[static_cast<std::size_t>(r)]; }

inline std::optional<Region> region_from_name(const std::string& name) {
  for (std::size_t i = 0; i < kRegionCount; ++i)
    if (name == kRegionNames[i]) return static_cast<Region>(i);
  return std::nullopt;
}

/// Decorrelation time for a Lorentzian half-width at half-maximum.
inline double tau_from_linewidth(double hwhm_hz) { return 1.0 / (2 * std::numbers::pi * hwhm_hz); }

struct RegionParams {
  double tau_c_s = 1e-3;          // diastolic decorrelation time
  double pulsatility = 0;         // modulation depth beta in [0, 1)
  double phase_lag_cycles = 0;    // delay of the cardiac drive, in cycles
  double reflectivity = 1;        // field amplitude
};

/// Bulk axial motion phase: A * sum_h sin(2 pi h f t) / h.
struct BulkMotion {
  double amplitude_rad = 0;
  double frequency_hz = 0;
  unsigned harmonics = 1;

  double phase(double t_s) const {
    if (amplitude_rad == 0 || frequency_hz == 0) return 0;
    double s = 0;
    for (unsigned h = 1; h <= harmonics; ++h)
      s += std::sin(2 * std::numbers::pi * h * frequency_hz * t_s) / h;
    return amplitude_rad * s;
  }
};

struct SceneSpec {
  std::size_t nx = 64;
  std::size_t ny = 64;
  Grid2<std::uint8_t> labels{64, 64, 0};
  std::array<RegionParams, kRegionCount> regions{};
  double heart_rate_hz = 31.25;
  double tau_ratio = 3;
  BulkMotion bulk;
  std::optional<double> noise_snr_db = 30;  // nullopt: noiseless
  std::uint64_t seed = 1;
  double wavelength_m = 785e-9;
  double pixel_pitch_m = 20e-6;

  RegionParams& params(Region r) { return regions[static_cast<std::size_t>(r)]; }
  const RegionParams& params(Region r) const { return regions[static_cast<std::size_t>(r)]; }

  Region label(std::size_t y, std::size_t x) const { return static_cast<Region>(labels(y, x)); }

  void resize(std::size_t rows, std::size_t cols) {
    ny = rows;
    nx = cols;
    labels = Grid2<std::uint8_t>(rows, cols, 0);
  }

  /// Labels an axis-aligned rectangle (clipped to the frame).
  void paint(Region r, std::size_t x0, std::size_t y0, std::size_t w, std::size_t h) {
    for (std::size_t y = y0; y < std::min(ny, y0 + h); ++y)
      for (std::size_t x = x0; x < std::min(nx, x0 + w); ++x)
        labels(y, x) = static_cast<std::uint8_t>(r);
  }

  bool has_region(Region r) const {
    return std::find(labels.data.begin(), labels.data.end(), static_cast<std::uint8_t>(r)) !=
           labels.data.end();
  }

  RealImage reflectivity_map() const {
    RealImage img(ny, nx);
    for (std::size_t i = 0; i < img.size(); ++i)
      img.data[i] = regions[labels.data[i]].reflectivity;
    return img;
  }

  void validate() const {
    if (nx < 1 || ny < 1) fail(ErrorKind::config, "scene dimensions must be >= 1");
    if (labels.ny != ny || labels.nx != nx)
      fail(ErrorKind::config, "scene label map does not match nx/ny");
    for (auto v : labels.data)
      if (v >= kRegionCount) fail(ErrorKind::config, "scene label out of range");
    for (std::size_t i = 0; i < kRegionCount; ++i) {
      const auto& p = regions[i];
      const std::string name = kRegionNames[i];
      if (!(p.tau_c_s > 0)) fail(ErrorKind::config, name + ".tau_c_s must be > 0");
      if (!(p.pulsatility >= 0 && p.pulsatility < 1))
        fail(ErrorKind::config, name + ".pulsatility must lie in [0, 1)");
      if (!(p.reflectivity >= 0) || !std::isfinite(p.reflectivity))
        fail(ErrorKind::config, name + ".reflectivity must be >= 0");
      if (!std::isfinite(p.phase_lag_cycles))
        fail(ErrorKind::config, name + ".phase_lag_cycles must be finite");
    }
    if (has_region(Region::absorber) &&
        !(params(Region::absorber).reflectivity < params(Region::tissue).reflectivity))
      fail(ErrorKind::config, "absorber.reflectivity must be below tissue.reflectivity");
    if (!(heart_rate_hz > 0)) fail(ErrorKind::config, "heart_rate_hz must be > 0");
    if (!(tau_ratio >= 1)) fail(ErrorKind::config, "tau_ratio must be >= 1");
    if (!(wavelength_m > 0) || !(pixel_pitch_m > 0))
      fail(ErrorKind::config, "wavelength_m and pixel_pitch_m must be > 0");
    if (noise_snr_db && !std::isfinite(*noise_snr_db))
      fail(ErrorKind::config, "noise_snr_db must be finite (omit for noiseless)");
  }
};

namespace detail {
inline std::size_t scaled(std::size_t n, std::size_t num) { return n * num / 64; }
inline std::size_t scaled_extent(std::size_t n, std::size_t num) {
  return std::max<std::size_t>(1, n * num / 64);
}
}  // namespace detail

/// Desk-scale fundus analog: tissue background, one artery and one vein
/// running vertically, and an absorbing patch clear of both vessels. The
/// layout is given for 64x64 and scales with the frame size.
inline SceneSpec default_scene(std::size_t nx = 64, std::size_t ny = 64) {
  using detail::scaled;
  using detail::scaled_extent;
  SceneSpec s;
  s.resize(ny, nx);
  s.params(Region::tissue) = {tau_from_linewidth(400), 0.05, 0.0, 1.0};
  s.params(Region::artery) = {tau_from_linewidth(2500), 0.8, 0.0, 1.0};
  s.params(Region::vein) = {tau_from_linewidth(2000), 0.3, 0.1, 1.0};
  s.params(Region::static_tissue) = {std::numeric_limits<double>::infinity(), 0.0, 0.0, 1.0};
  s.params(Region::absorber) = {tau_from_linewidth(400), 0.05, 0.0, 0.25};
  s.paint(Region::artery, scaled(nx, 12), 0, scaled_extent(nx, 8), ny);
  s.paint(Region::vein, scaled(nx, 36), 0, scaled_extent(nx, 8), ny);
  s.paint(Region::absorber, scaled(nx, 50), scaled(ny, 40), scaled_extent(nx, 12),
          scaled_extent(ny, 12));
  return s;
}

/// default_scene() without the absorber: reflectivity is uniform.
inline SceneSpec uniform_scene(std::size_t nx = 64, std::size_t ny = 64) {
  SceneSpec s = default_scene(nx, ny);
  for (auto& v : s.labels.data)
    if (v == static_cast<std::uint8_t>(Region::absorber)) v = static_cast<std::uint8_t>(Region::tissue);
  return s;
}

// ---------------------------------------------------------------------------
// Cardiac drive

namespace detail {

inline double wrapped_gaussian(double phase, double center, double width) {
  double s = 0;
  for (int shift = -1; shift <= 1; ++shift) {
    const double d = phase - center + shift;
    s += std::exp(-0.5 * d * d / (width * width));
  }
  return s;
}

inline constexpr double kSystoleCenter = 0.15;
inline constexpr double kSystoleWidth = 0.07;
inline constexpr double kDicroticCenter = 0.45;
inline constexpr double kDicroticWidth = 0.06;
inline constexpr double kDicroticHeight = 0.25;

inline double raw_pulse(double phase) {
  return wrapped_gaussian(phase, kSystoleCenter, kSystoleWidth) +
         kDicroticHeight * wrapped_gaussian(phase, kDicroticCenter, kDicroticWidth);
}

struct PulseRange {
  double lo, hi;
};

inline const PulseRange& pulse_range() {
  static const PulseRange range = [] {
    constexpr int n = 1 << 17;
    double lo = raw_pulse(0), hi = lo;
    for (int i = 1; i < n; ++i) {
      const double v = raw_pulse(static_cast<double>(i) / n);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    return PulseRange{lo, hi};
  }();
  return range;
}

}  // namespace detail

/// Normalized pulse shape on [0, 1) cycle phase: systolic peak near 0.15 and
/// a dicrotic bump at 0.45 with a quarter of the systolic height.
inline double cardiac_pulse(double phase) {
  const auto& r = detail::pulse_range();
  phase -= std::floor(phase);
  return (detail::raw_pulse(phase) - r.lo) / (r.hi - r.lo);
}

inline std::vector<double> cardiac_waveform(double heart_rate_hz, std::span<const double> t_s) {
  if (!(heart_rate_hz > 0)) fail(ErrorKind::config, "heart_rate_hz must be > 0");
  std::vector<double> p(t_s.size());
  for (std::size_t i = 0; i < t_s.size(); ++i) p[i] = cardiac_pulse(t_s[i] * heart_rate_hz);
  return p;
}

// ---------------------------------------------------------------------------
// Ground truth

/// Stationary AR(1) Doppler spectrum at DFT bin k of N, unit variance:
/// (1 - a^2) / |1 - a exp(-2 pi i k / N)|^2.
inline std::vector<double> ar1_spectrum(double a, std::size_t nbins) {
  std::vector<double> s(nbins);
  for (std::size_t k = 0; k < nbins; ++k) {
    const double w = 2 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(nbins);
    s[k] = (1 - a * a) / (1 - 2 * a * std::cos(w) + a * a);
  }
  return s;
}

struct GroundTruth {
  Grid2<std::uint8_t> labels;
  RealImage reflectivity;
  std::array<RegionParams, kRegionCount> regions{};
  double sample_rate_hz = 1;
  double heart_rate_hz = 1;
  double tau_ratio = 3;
  double noise_variance = 0;
  std::vector<double> cardiac;     // p(t_n), zero phase lag
  std::vector<double> bulk_phase;  // phi(t_n), radians

  /// tau_c0 / (1 + beta p (tau_ratio - 1)) with the region's phase lag.
  double tau_c(Region r, std::size_t n) const {
    const auto& p = regions[static_cast<std::size_t>(r)];
    const double t = static_cast<double>(n) / sample_rate_hz;
    const double drive = cardiac_pulse(t * heart_rate_hz - p.phase_lag_cycles);
    return p.tau_c_s / (1 + p.pulsatility * drive * (tau_ratio - 1));
  }

  double ar_coefficient(Region r, std::size_t n) const {
    return std::exp(-1.0 / (sample_rate_hz * tau_c(r, n)));
  }

  RoiMask region_mask(Region r) const {
    RoiMask m{Grid2<std::uint8_t>(labels.ny, labels.nx, 0)};
    for (std::size_t i = 0; i < labels.size(); ++i)
      m.mask.data[i] = labels.data[i] == static_cast<std::uint8_t>(r) ? 1 : 0;
    return m;
  }

  /// Analytic spectrum of a non-pulsatile region at its diastolic tau_c.
  std::vector<double> region_spectrum(Region r, std::size_t nbins) const {
    const auto& p = regions[static_cast<std::size_t>(r)];
    const double a = std::exp(-1.0 / (sample_rate_hz * p.tau_c_s));
    return ar1_spectrum(a, nbins);
  }
};

struct SimulatedStack {
  HologramStack stack;
  GroundTruth truth;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Independent stream seed for (scene seed, pixel, stream id).
inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t pixel, std::uint64_t stream) {
  return splitmix64(splitmix64(splitmix64(seed) ^ pixel) ^ (stream + 0x5851F42D4C957F2DULL));
}

struct ComplexGaussian {
  std::mt19937_64 engine;
  std::normal_distribution<double> normal{0.0, 1.0};

  explicit ComplexGaussian(std::uint64_t seed) : engine(seed) {}

  /// Circular complex Gaussian with unit variance.
  std::complex<double> operator()() {
    const double re = normal(engine);
    const double im = normal(engine);
    return {re * std::numbers::sqrt2 / 2, im * std::numbers::sqrt2 / 2};
  }
};

}  // namespace detail

/// Per pixel h[n] = r g[n] exp(i phi(n)) + noise, where g is a unit-variance
/// complex AR(1) process with coefficient exp(-dt / tau_c(t_n)).
inline SimulatedStack gen_field_stack(const SceneSpec& scene, double sample_rate_hz,
                                      std::size_t nt) {
  scene.validate();
  if (!(sample_rate_hz > 0)) fail(ErrorKind::config, "sample_rate_hz must be > 0");
  if (nt < 1) fail(ErrorKind::config, "nt must be >= 1");

  SimulatedStack out;
  auto& truth = out.truth;
  truth.labels = scene.labels;
  truth.reflectivity = scene.reflectivity_map();
  truth.regions = scene.regions;
  truth.sample_rate_hz = sample_rate_hz;
  truth.heart_rate_hz = scene.heart_rate_hz;
  truth.tau_ratio = scene.tau_ratio;
  truth.cardiac.resize(nt);
  truth.bulk_phase.resize(nt);
  for (std::size_t n = 0; n < nt; ++n) {
    const double t = static_cast<double>(n) / sample_rate_hz;
    truth.cardiac[n] = cardiac_pulse(t * scene.heart_rate_hz);
    truth.bulk_phase[n] = scene.bulk.phase(t);
  }
  double mean_power = 0;
  for (double r : truth.reflectivity.data) mean_power += r * r;
  mean_power /= static_cast<double>(truth.reflectivity.size());
  truth.noise_variance =
      scene.noise_snr_db ? mean_power * std::pow(10.0, -*scene.noise_snr_db / 10.0) : 0.0;

  // AR coefficients and innovation gains depend only on (region, frame).
  std::array<std::vector<double>, kRegionCount> coef, gain;
  for (std::size_t r = 0; r < kRegionCount; ++r) {
    coef[r].resize(nt);
    gain[r].resize(nt);
    for (std::size_t n = 0; n < nt; ++n) {
      const double a = truth.ar_coefficient(static_cast<Region>(r), n);
      coef[r][n] = a;
      gain[r][n] = std::sqrt(std::max(0.0, 1 - a * a));
    }
  }
  std::vector<std::complex<double>> rotor(nt);
  for (std::size_t n = 0; n < nt; ++n)
    rotor[n] = {std::cos(truth.bulk_phase[n]), std::sin(truth.bulk_phase[n])};

  StackMeta meta;
  meta.nx = scene.nx;
  meta.ny = scene.ny;
  meta.nt = nt;
  meta.sample_rate_hz = sample_rate_hz;
  meta.exposure_s = 1.0 / sample_rate_hz;
  meta.wavelength_m = scene.wavelength_m;
  meta.pixel_pitch_m = scene.pixel_pitch_m;
  meta.origin_tag = "simulated";
  out.stack = HologramStack::zeros(meta);

  const std::size_t npx = meta.frame_size();
  constexpr std::size_t kBlock = 64;
  const std::size_t blocks = (npx + kBlock - 1) / kBlock;
  const double noise_sd = std::sqrt(truth.noise_variance);
  parallel_for(blocks, [&](std::size_t b) {
    const std::size_t p0 = b * kBlock;
    const std::size_t p1 = std::min(npx, p0 + kBlock);
    std::vector<detail::ComplexGaussian> speckle, noise;
    std::vector<std::complex<double>> state(p1 - p0);
    for (std::size_t p = p0; p < p1; ++p) {
      speckle.emplace_back(detail::stream_seed(scene.seed, p, 0));
      noise.emplace_back(detail::stream_seed(scene.seed, p, 1));
      state[p - p0] = speckle.back()();  // stationary start
    }
    for (std::size_t n = 0; n < nt; ++n) {
      auto frame = out.stack.frame(n);
      for (std::size_t p = p0; p < p1; ++p) {
        const std::size_t r = scene.labels.data[p];
        auto& g = state[p - p0];
        if (n > 0) g = coef[r][n] * g + gain[r][n] * speckle[p - p0]();
        std::complex<double> h = truth.reflectivity.data[p] * g * rotor[n];
        if (noise_sd > 0) h += noise_sd * noise[p - p0]();
        frame[p] = {static_cast<float>(h.real()), static_cast<float>(h.imag())};
      }
    }
  });
  return out;
}

/// Exposure integration: frame m is the mean of input frames
/// [m*factor, (m+1)*factor); the sample rate drops by `factor`.
inline HologramStack integrate_decimate(const HologramStack& stack, std::size_t factor) {
  if (factor < 1 || stack.meta.nt % factor != 0)
    fail(ErrorKind::config, str_cat("decimation factor ", factor,
                                    " must be >= 1 and divide nt=", stack.meta.nt));
  StackMeta meta = stack.meta;
  meta.nt = stack.meta.nt / factor;
  meta.sample_rate_hz = stack.meta.sample_rate_hz / static_cast<double>(factor);
  meta.exposure_s = stack.meta.exposure_s * static_cast<double>(factor);
  HologramStack out = HologramStack::zeros(meta);
  const std::size_t npx = meta.frame_size();
  parallel_for(meta.nt, [&](std::size_t m) {
    std::vector<std::complex<double>> acc(npx);
    for (std::size_t j = 0; j < factor; ++j) {
      auto f = stack.frame(m * factor + j);
      for (std::size_t p = 0; p < npx; ++p) acc[p] += std::complex<double>(f[p]);
    }
    auto dst = out.frame(m);
    const double inv = 1.0 / static_cast<double>(factor);
    for (std::size_t p = 0; p < npx; ++p)
      dst[p] = {static_cast<float>(acc[p].real() * inv), static_cast<float>(acc[p].imag() * inv)};
  });
  return out;
}

/// |O + R|^2 with R = ref_amplitude * exp(i 2 pi (kx x + ky y)).
inline FrameStack render_interferograms(const HologramStack& stack, const CarrierSpec& carrier,
                                        double ref_amplitude) {
  carrier.validate();
  if (!(ref_amplitude > 0)) fail(ErrorKind::config, "ref_amplitude must be > 0");
  const auto& meta = stack.meta;
  std::vector<std::complex<double>> ref(meta.frame_size());
  for (std::size_t y = 0; y < meta.ny; ++y)
    for (std::size_t x = 0; x < meta.nx; ++x) {
      const double ph = 2 * std::numbers::pi *
                        (carrier.kx_cyc_per_px * static_cast<double>(x) +
                         carrier.ky_cyc_per_px * static_cast<double>(y));
      ref[y * meta.nx + x] = std::polar(ref_amplitude, ph);
    }
  FrameStack out = FrameStack::zeros(meta);
  parallel_for(meta.nt, [&](std::size_t t) {
    auto src = stack.frame(t);
    auto dst = out.frame(t);
    for (std::size_t p = 0; p < src.size(); ++p)
      dst[p] = static_cast<float>(std::norm(std::complex<double>(src[p]) + ref[p]));
  });
  return out;
}

/// Circular pupil: removes spatial frequencies above `radius_cyc_per_px`.
inline HologramStack apply_pupil(const HologramStack& stack, double radius_cyc_per_px) {
  if (!(radius_cyc_per_px > 0)) fail(ErrorKind::config, "pupil radius must be > 0");
  HologramStack out = stack;
  const auto& meta = stack.meta;
  parallel_for(meta.nt, [&](std::size_t t) {
    ComplexImage img = frame_image(stack, t);
    fft2(img, FftDirection::forward);
    const double norm = 1.0 / static_cast<double>(img.size());
    for (std::size_t y = 0; y < meta.ny; ++y) {
      const double fy = static_cast<double>(signed_bin(y, meta.ny)) / static_cast<double>(meta.ny);
      for (std::size_t x = 0; x < meta.nx; ++x) {
        const double fx = static_cast<double>(signed_bin(x, meta.nx)) / static_cast<double>(meta.nx);
        img(y, x) *= (fx * fx + fy * fy <= radius_cyc_per_px * radius_cyc_per_px) ? norm : 0.0;
      }
    }
    fft2(img, FftDirection::backward);
    store_frame(out, t, img);
  });
  return out;
}

struct InterferogramSpec {
  CarrierSpec carrier;
  double ref_amplitude = 10;
  double pupil_radius_cyc_per_px = 0.08;
  double defocus_m = 0;
};

/// Camera-plane interferograms: pupil band-limit, defocus by -defocus_m,
/// then interference with the tilted reference.
inline FrameStack simulate_interferograms(const HologramStack& stack,
                                          const InterferogramSpec& spec) {
  HologramStack field = apply_pupil(stack, spec.pupil_radius_cyc_per_px);
  if (spec.defocus_m != 0) {
    parallel_for(field.meta.nt, [&](std::size_t t) {
      store_frame(field, t,
                  angular_spectrum_propagate(frame_image(field, t), -spec.defocus_m,
                                             field.meta.wavelength_m, field.meta.pixel_pitch_m));
    });
  }
  return render_interferograms(field, spec.carrier, spec.ref_amplitude);
}

// ---------------------------------------------------------------------------
// Ground-truth export

namespace detail {
template <class T>
void write_raw(const std::filesystem::path& path, const std::vector<T>& v) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::data, str_cat("cannot open for writing: ", path.string()));
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(T)));
  if (!out) fail(ErrorKind::data, str_cat("write failed: ", path.string()));
}

inline std::vector<float> to_f32(const std::vector<double>& v) {
  return {v.begin(), v.end()};
}
}  // namespace detail

/// Writes `<base>.truth.json` plus raw maps and series next to it.
/// Returns every written path.
inline std::vector<std::filesystem::path> write_ground_truth(const GroundTruth& truth,
                                                             const std::filesystem::path& base) {
  const std::string stem = base.string();
  const std::filesystem::path labels = stem + ".truth.labels.u8";
  const std::filesystem::path refl = stem + ".truth.reflectivity.f32";
  const std::filesystem::path cardiac = stem + ".truth.cardiac.f32";
  const std::filesystem::path bulk = stem + ".truth.bulk_phase.f32";
  const std::filesystem::path json = stem + ".truth.json";
  detail::write_raw(labels, truth.labels.data);
  detail::write_raw(refl, detail::to_f32(truth.reflectivity.data));
  detail::write_raw(cardiac, detail::to_f32(truth.cardiac));
  detail::write_raw(bulk, detail::to_f32(truth.bulk_phase));

  nlohmann::json j;
  j["nx"] = truth.labels.nx;
  j["ny"] = truth.labels.ny;
  j["nt"] = truth.cardiac.size();
  j["sample_rate_hz"] = truth.sample_rate_hz;
  j["heart_rate_hz"] = truth.heart_rate_hz;
  j["tau_ratio"] = truth.tau_ratio;
  j["noise_variance"] = truth.noise_variance;
  j["label_codes"] = nlohmann::json::object();
  for (std::size_t i = 0; i < kRegionCount; ++i) {
    const auto& p = truth.regions[i];
    j["label_codes"][kRegionNames[i]] = i;
    const double a = std::exp(-1.0 / (truth.sample_rate_hz * p.tau_c_s));
    j["regions"][kRegionNames[i]] = {
        {"tau_c_s", std::isfinite(p.tau_c_s) ? nlohmann::json(p.tau_c_s) : nlohmann::json("inf")},
        {"pulsatility", p.pulsatility},
        {"phase_lag_cycles", p.phase_lag_cycles},
        {"reflectivity", p.reflectivity},
        {"diastolic_ar_coefficient", a},
        {"spectrum", "(1 - a^2) / |1 - a exp(-2 pi i k / N)|^2"}};
  }
  j["files"] = {{"labels_u8", labels.filename().string()},
                {"reflectivity_f32", refl.filename().string()},
                {"cardiac_f32", cardiac.filename().string()},
                {"bulk_phase_f32", bulk.filename().string()}};
  std::ofstream out(json, std::ios::trunc);
  if (!out) fail(ErrorKind::data, str_cat("cannot open for writing: ", json.string()));
  out << j.dump(2) << "\n";
  return {json, labels, refl, cardiac, bulk};
}

/// Reads the label map written by write_ground_truth.
inline Grid2<std::uint8_t> read_truth_labels(const std::filesystem::path& truth_json) {
  std::ifstream in(truth_json);
  if (!in) fail(ErrorKind::data, str_cat("cannot open ground truth: ", truth_json.string()));
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::data, str_cat("malformed ground truth ", truth_json.string(), ": ", e.what()));
  }
  const std::size_t nx = j.at("nx"), ny = j.at("ny");
  const auto path = truth_json.parent_path() / j.at("files").at("labels_u8").get<std::string>();
  std::ifstream raw(path, std::ios::binary);
  if (!raw) fail(ErrorKind::data, str_cat("cannot open label map: ", path.string()));
  Grid2<std::uint8_t> labels(ny, nx);
  raw.read(reinterpret_cast<char*>(labels.data.data()), static_cast<std::streamsize>(nx * ny));
  if (raw.gcount() != static_cast<std::streamsize>(nx * ny))
    fail(ErrorKind::data, str_cat("size mismatch in label map ", path.string()));
  return labels;
}

}  // namespace rcldh

#endif  // RCLDH_SIMULATOR_HPP
