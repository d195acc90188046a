#ifndef RCLDH_DOPPLER_HPP
#define RCLDH_DOPPLER_HPP

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "rcldh/core.hpp"

namespace rcldh {

struct TracePair {
  std::vector<double> t_s;
  std::vector<double> artery;
  std::vector<double> vein;
  bool normalized = false;
};

/// Mean spectrum per window over a mask, stored (f_bin, window).
struct Spectrogram {
  std::size_t nbins = 0;
  std::size_t nwindows = 0;
  double sample_rate_hz = 1;
  std::vector<double> t_s;
  std::vector<double> power;
  bool residual = false;  // whole-field mean spectrum subtracted

  double at(std::size_t k, std::size_t m) const { return power[k * nwindows + m]; }
  double& at(std::size_t k, std::size_t m) { return power[k * nwindows + m]; }
};

/// Sum of S over the selected bins, per pixel.
inline RealImage band_power(const SpectralCube& cube, std::span<const std::size_t> bins) {
  RealImage img(cube.ny, cube.nx);
  for (std::size_t k : bins) {
    auto plane = cube.bin(k);
    for (std::size_t p = 0; p < plane.size(); ++p) img.data[p] += plane[p];
  }
  return img;
}

inline PowerDopplerMovie empty_movie(std::size_t n, std::size_t ny, std::size_t nx,
                                     const Band& band, double hop_s, double t_first_s) {
  PowerDopplerMovie movie;
  movie.n = n;
  movie.ny = ny;
  movie.nx = nx;
  movie.frames.assign(n * ny * nx, 0.0);
  movie.band = band;
  movie.hop_s = hop_s;
  movie.t_first_s = t_first_s;
  return movie;
}

/// M0 = sum of S over band_bins(band) for every window and pixel.
inline PowerDopplerMovie power_doppler(std::span<const SpectralCube> cubes, const Band& band,
                                       double hop_s) {
  if (cubes.empty()) fail(ErrorKind::data, "power_doppler: no spectral cubes");
  if (!(hop_s > 0)) fail(ErrorKind::config, "power_doppler: hop_s must be positive");
  const auto& first = cubes.front();
  const auto bins = band_bins(band, first.nbins, first.sample_rate_hz);
  auto movie = empty_movie(cubes.size(), first.ny, first.nx, band, hop_s, first.t_center_s);
  for (std::size_t m = 0; m < cubes.size(); ++m) {
    const RealImage img = band_power(cubes[m], bins);
    std::copy(img.data.begin(), img.data.end(), movie.frame(m).begin());
  }
  return movie;
}

inline PowerDopplerMovie reverse_contrast(PowerDopplerMovie movie) {
  if (movie.rc_flag) fail(ErrorKind::data, "already reverse-contrast");
  for (auto& v : movie.frames) v = -v;
  movie.rc_flag = true;
  return movie;
}

/// Separable Gaussian blur truncated at 3 sigma. Weights are renormalized
/// over the in-bounds taps, so constant images are reproduced exactly.
inline RealImage gaussian_blur(const RealImage& img, double sigma_px) {
  if (!(sigma_px > 0)) fail(ErrorKind::config, "gaussian_blur: sigma must be positive");
  const auto radius = static_cast<long>(std::ceil(3 * sigma_px));
  std::vector<double> taps(static_cast<std::size_t>(2 * radius + 1));
  for (long i = -radius; i <= radius; ++i)
    taps[static_cast<std::size_t>(i + radius)] =
        std::exp(-0.5 * static_cast<double>(i * i) / (sigma_px * sigma_px));

  auto pass = [&](const RealImage& src, bool along_x) {
    RealImage dst(src.ny, src.nx);
    const auto len = static_cast<long>(along_x ? src.nx : src.ny);
    for (std::size_t y = 0; y < src.ny; ++y)
      for (std::size_t x = 0; x < src.nx; ++x) {
        const long c = static_cast<long>(along_x ? x : y);
        double acc = 0, wsum = 0;
        for (long d = -radius; d <= radius; ++d) {
          const long j = c + d;
          if (j < 0 || j >= len) continue;
          const double w = taps[static_cast<std::size_t>(d + radius)];
          acc += w * (along_x ? src(y, static_cast<std::size_t>(j))
                              : src(static_cast<std::size_t>(j), x));
          wsum += w;
        }
        dst(y, x) = acc / wsum;
      }
    return dst;
  };
  return pass(pass(img, true), false);
}

inline RealImage temporal_mean(const PowerDopplerMovie& movie) {
  RealImage img(movie.ny, movie.nx);
  for (std::size_t m = 0; m < movie.n; ++m) {
    auto f = movie.frame(m);
    for (std::size_t p = 0; p < f.size(); ++p) img.data[p] += f[p];
  }
  for (auto& v : img.data) v /= static_cast<double>(movie.n);
  return img;
}

/// Divides each frame by the blurred temporal-mean image and rescales by
/// that reference's spatial mean. Default scale is nx/8.
inline PowerDopplerMovie flat_field(PowerDopplerMovie movie,
                                    std::optional<double> sigma_px = std::nullopt) {
  if (movie.rc_flag) fail(ErrorKind::data, "flat_field requires a non-reverse-contrast movie");
  const double sigma = sigma_px.value_or(static_cast<double>(movie.nx) / 8.0);
  if (!(sigma > 0)) fail(ErrorKind::config, "flat_field: sigma_px must be positive");
  const RealImage ref = gaussian_blur(temporal_mean(movie), sigma);
  const double ref_mean = mean_of(ref.data);
  if (!(ref_mean > 0))
    fail(ErrorKind::data, "flat_field: illumination reference is zero");
  const double floor = 1e-6 * ref_mean;
  for (std::size_t m = 0; m < movie.n; ++m) {
    auto f = movie.frame(m);
    for (std::size_t p = 0; p < f.size(); ++p)
      f[p] = f[p] / std::max(ref.data[p], floor) * ref_mean;
  }
  return movie;
}

/// Subtracts each pixel's temporal `pct` percentile (default 5th).
inline PowerDopplerMovie baseline_subtract(PowerDopplerMovie movie, double pct = 5.0) {
  if (movie.n < 8)
    fail(ErrorKind::data, str_cat("baseline_subtract needs >= 8 windows, got ", movie.n));
  const std::size_t npx = movie.frame_size();
  std::vector<double> series(movie.n);
  for (std::size_t p = 0; p < npx; ++p) {
    for (std::size_t m = 0; m < movie.n; ++m) series[m] = movie.frames[m * npx + p];
    const double base = percentile(series, pct);
    for (std::size_t m = 0; m < movie.n; ++m) movie.frames[m * npx + p] -= base;
  }
  return movie;
}

/// Temporal coefficient of variation (population std / mean) per pixel.
inline RealImage cov_map(const PowerDopplerMovie& movie) {
  if (movie.n < 2) fail(ErrorKind::data, "cov_map needs >= 2 windows");
  if (movie.rc_flag) fail(ErrorKind::data, "cov_map requires a non-reverse-contrast movie");
  const std::size_t npx = movie.frame_size();
  RealImage out(movie.ny, movie.nx);
  std::vector<double> series(movie.n);
  for (std::size_t p = 0; p < npx; ++p) {
    for (std::size_t m = 0; m < movie.n; ++m) series[m] = movie.frames[m * npx + p];
    const double mu = mean_of(series);
    out.data[p] = mu <= 1e-12 ? 0.0 : pstdev_of(series) / mu;
  }
  return out;
}

/// Spatial mean over the mask per window. RC movies already carry negated
/// values, so their trace is the negative power Doppler.
inline std::vector<double> roi_trace(const PowerDopplerMovie& movie, const RoiMask& mask) {
  if (mask.mask.ny != movie.ny || mask.mask.nx != movie.nx)
    fail(ErrorKind::config, "roi_trace: mask shape does not match movie");
  const std::size_t count = mask.count();
  if (count == 0) fail(ErrorKind::config, "roi_trace: empty mask");
  std::vector<double> trace(movie.n, 0.0);
  for (std::size_t m = 0; m < movie.n; ++m) {
    auto f = movie.frame(m);
    double s = 0;
    for (std::size_t p = 0; p < f.size(); ++p)
      if (mask.mask.data[p]) s += f[p];
    trace[m] = s / static_cast<double>(count);
  }
  return trace;
}

inline std::vector<double> movie_times(const PowerDopplerMovie& movie) {
  std::vector<double> t(movie.n);
  for (std::size_t m = 0; m < movie.n; ++m) t[m] = movie.time_of(m);
  return t;
}

/// Centers and scales both series by the artery's mean and population std.
inline TracePair normalize_trace_pair(std::span<const double> artery,
                                      std::span<const double> vein,
                                      std::vector<double> t_s = {}) {
  if (artery.size() != vein.size())
    fail(ErrorKind::data, "normalize_trace_pair: series lengths differ");
  const double mu = mean_of(artery);
  const double sd = pstdev_of(artery);
  if (!(sd > 0)) fail(ErrorKind::data, "normalize_trace_pair: artery std is zero");
  TracePair pair;
  pair.t_s = std::move(t_s);
  pair.artery.reserve(artery.size());
  pair.vein.reserve(vein.size());
  for (double v : artery) pair.artery.push_back((v - mu) / sd);
  for (double v : vein) pair.vein.push_back((v - mu) / sd);
  pair.normalized = true;
  return pair;
}

inline std::vector<double> mask_mean_spectrum(const SpectralCube& cube, const RoiMask& mask) {
  if (mask.mask.ny != cube.ny || mask.mask.nx != cube.nx)
    fail(ErrorKind::config, "spectrogram: mask shape does not match cube");
  const std::size_t count = mask.count();
  if (count == 0) fail(ErrorKind::config, "spectrogram: empty mask");
  std::vector<double> spec(cube.nbins, 0.0);
  for (std::size_t k = 0; k < cube.nbins; ++k) {
    auto plane = cube.bin(k);
    double s = 0;
    for (std::size_t p = 0; p < plane.size(); ++p)
      if (mask.mask.data[p]) s += plane[p];
    spec[k] = s / static_cast<double>(count);
  }
  return spec;
}

inline std::vector<double> field_mean_spectrum(const SpectralCube& cube) {
  std::vector<double> spec(cube.nbins, 0.0);
  for (std::size_t k = 0; k < cube.nbins; ++k) spec[k] = mean_of(cube.bin(k));
  return spec;
}

/// Assembles a spectrogram from per-window ROI spectra (and, for residual
/// spectrograms, the matching whole-field spectra).
inline Spectrogram spectrogram_from_columns(const std::vector<std::vector<double>>& roi,
                                            const std::vector<std::vector<double>>* field,
                                            std::vector<double> t_s, double sample_rate_hz) {
  Spectrogram sg;
  sg.nwindows = roi.size();
  sg.nbins = roi.empty() ? 0 : roi.front().size();
  sg.sample_rate_hz = sample_rate_hz;
  sg.t_s = std::move(t_s);
  sg.residual = field != nullptr;
  sg.power.assign(sg.nbins * sg.nwindows, 0.0);
  for (std::size_t m = 0; m < sg.nwindows; ++m)
    for (std::size_t k = 0; k < sg.nbins; ++k)
      sg.at(k, m) = roi[m][k] - (field ? (*field)[m][k] : 0.0);
  return sg;
}

inline Spectrogram spectrogram(std::span<const SpectralCube> cubes, const RoiMask& mask,
                               bool subtract_spatial_mean) {
  if (mask.count() == 0) fail(ErrorKind::config, "spectrogram: empty mask");
  std::vector<std::vector<double>> roi, field;
  std::vector<double> t;
  for (const auto& c : cubes) {
    roi.push_back(mask_mean_spectrum(c, mask));
    if (subtract_spatial_mean) field.push_back(field_mean_spectrum(c));
    t.push_back(c.t_center_s);
  }
  const double fs = cubes.empty() ? 1.0 : cubes.front().sample_rate_hz;
  return spectrogram_from_columns(roi, subtract_spatial_mean ? &field : nullptr,
                                  std::move(t), fs);
}

/// Sum of spectrogram rows whose bins fall in `band`, per window.
inline std::vector<double> spectrogram_band_sum(const Spectrogram& sg, const Band& band) {
  std::vector<double> out(sg.nwindows, 0.0);
  for (std::size_t k : band_bins(band, sg.nbins, sg.sample_rate_hz))
    for (std::size_t m = 0; m < sg.nwindows; ++m) out[m] += sg.at(k, m);
  return out;
}

}  // namespace rcldh

#endif  // RCLDH_DOPPLER_HPP
