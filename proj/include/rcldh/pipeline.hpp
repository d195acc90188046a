#ifndef RCLDH_PIPELINE_HPP
#define RCLDH_PIPELINE_HPP

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rcldh/core.hpp"
#include "rcldh/doppler.hpp"
#include "rcldh/stft.hpp"
#include "rcldh/svdfilter.hpp"

namespace rcldh {

struct NamedBand {
  std::string name;
  Band band;
  bool rc = false;  // also emit a reverse-contrast version
};

struct NamedRoi {
  std::string name;
  RoiMask mask;
};

struct WindowSpec {
  StftPlan plan;
  bool svd_enabled = true;
  SvdFilterSpec svd;
  std::vector<NamedBand> bands;
  std::vector<NamedRoi> spectrogram_rois;
  bool spectrogram_subtract_mean = true;
  std::size_t batch_windows = 0;  // 0: a few windows per worker
};

struct WindowOutputs {
  std::vector<PowerDopplerMovie> movies;  // one raw M0 movie per band
  std::vector<Spectrogram> spectrograms;  // one per spectrogram ROI
  std::vector<double> window_energy;      // per window, after filtering
  std::size_t svd_rank = 0;
};

/// Streams the stack through SVD filter -> DPSD -> band M0 in bounded
/// batches, keeping only per-band movies and ROI spectra. Errors carry the
/// stage name and window index.
inline WindowOutputs process_windows(const HologramStack& stack, const WindowSpec& spec) {
  const auto& meta = stack.meta;
  const double fs = meta.sample_rate_hz;
  const std::size_t count = spec.plan.window_count(meta.nt);
  if (spec.bands.empty() && spec.spectrogram_rois.empty())
    fail(ErrorKind::config, "nothing to compute: no bands and no spectrogram ROIs");

  std::vector<std::vector<std::size_t>> bins;
  for (const auto& b : spec.bands) {
    try {
      bins.push_back(band_bins(b.band, spec.plan.n_win, fs));
    } catch (const Error& e) {
      throw Error(e.kind(), str_cat("band '", b.name, "': ", e.what()));
    }
  }
  for (const auto& r : spec.spectrogram_rois) {
    if (r.mask.mask.ny != meta.ny || r.mask.mask.nx != meta.nx)
      fail(ErrorKind::config, str_cat("ROI '", r.name, "' does not match the frame size"));
    if (r.mask.count() == 0) fail(ErrorKind::config, str_cat("ROI '", r.name, "' is empty"));
  }
  const std::size_t rank = spec.svd_enabled ? rejection_rank(spec.svd, fs, spec.plan.n_win) : 0;

  WindowOutputs out;
  out.svd_rank = rank;
  const double hop_s = spec.plan.hop_s(fs);
  const double t0 = spec.plan.center_time(0, fs);
  for (const auto& b : spec.bands)
    out.movies.push_back(empty_movie(count, meta.ny, meta.nx, b.band, hop_s, t0));
  out.window_energy.assign(count, 0.0);

  const std::size_t nroi = spec.spectrogram_rois.size();
  std::vector<std::vector<std::vector<double>>> roi_cols(nroi,
                                                         std::vector<std::vector<double>>(count));
  std::vector<std::vector<double>> field_cols(count);
  std::vector<double> times(count);

  const std::size_t batch =
      spec.batch_windows > 0 ? spec.batch_windows : std::max<std::size_t>(4, 2 * num_threads());
  for (std::size_t first = 0; first < count; first += batch) {
    const std::size_t n = std::min(batch, count - first);
    parallel_for(n, [&](std::size_t i) {
      const std::size_t m = first + i;
      const char* stage = "stft";
      try {
        ComplexWindow w = extract_window(stack, spec.plan, m);
        if (rank > 0) {
          stage = "svd";
          w = svd_split(w, rank).filtered;
        }
        out.window_energy[m] = w.energy();
        stage = "dpsd";
        const SpectralCube cube = dpsd(w, fs, spec.plan.apodization);
        stage = "m0";
        for (std::size_t b = 0; b < bins.size(); ++b) {
          const RealImage img = band_power(cube, bins[b]);
          std::copy(img.data.begin(), img.data.end(), out.movies[b].frame(m).begin());
        }
        stage = "spectrogram";
        for (std::size_t r = 0; r < nroi; ++r)
          roi_cols[r][m] = mask_mean_spectrum(cube, spec.spectrogram_rois[r].mask);
        if (nroi > 0 && spec.spectrogram_subtract_mean) field_cols[m] = field_mean_spectrum(cube);
        times[m] = cube.t_center_s;
      } catch (const Error& e) {
        throw Error(e.kind(), str_cat("stage ", stage, ", window ", m, ": ", e.what()));
      }
    });
  }
  for (std::size_t r = 0; r < nroi; ++r)
    out.spectrograms.push_back(spectrogram_from_columns(
        roi_cols[r], spec.spectrogram_subtract_mean ? &field_cols : nullptr, times, fs));
  return out;
}

/// Convenience for single-band use.
inline PowerDopplerMovie band_movie(const HologramStack& stack, const StftPlan& plan,
                                    const Band& band, bool svd_enabled = true,
                                    const SvdFilterSpec& svd = {}) {
  WindowSpec spec;
  spec.plan = plan;
  spec.svd_enabled = svd_enabled;
  spec.svd = svd;
  spec.bands.push_back({"band", band, false});
  return std::move(process_windows(stack, spec).movies.front());
}

struct Corrections {
  bool flat_field = true;
  std::optional<double> flat_field_sigma_px;
  bool baseline = true;
  double baseline_percentile = 5;
};

/// flat_field then baseline_subtract, as enabled.
inline PowerDopplerMovie apply_corrections(PowerDopplerMovie movie, const Corrections& c) {
  if (c.flat_field) movie = flat_field(std::move(movie), c.flat_field_sigma_px);
  if (c.baseline) movie = baseline_subtract(std::move(movie), c.baseline_percentile);
  return movie;
}

}  // namespace rcldh

#endif  // RCLDH_PIPELINE_HPP
