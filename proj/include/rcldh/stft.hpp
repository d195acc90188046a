#ifndef RCLDH_STFT_HPP
#define RCLDH_STFT_HPP

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "rcldh/core.hpp"
#include "rcldh/fft.hpp"

namespace rcldh {

enum class Apodization { none, hann };

struct StftPlan {
  std::size_t n_win = 512;
  std::size_t hop = 256;
  Apodization apodization = Apodization::none;

  void validate(std::size_t nt) const {
    if (n_win < 2 || n_win % 2 != 0)
      fail(ErrorKind::config, str_cat("n_win must be even and >= 2, got ", n_win));
    if (hop < 1 || hop > n_win)
      fail(ErrorKind::config, str_cat("hop must be in [1, n_win], got ", hop));
    if (nt < n_win)
      fail(ErrorKind::data,
           str_cat("stack shorter than window: nt=", nt, " < n_win=", n_win));
  }

  std::size_t window_count(std::size_t nt) const {
    validate(nt);
    return (nt - n_win) / hop + 1;
  }

  double center_time(std::size_t m, double sample_rate_hz) const {
    return static_cast<double>(m * hop + n_win / 2) / sample_rate_hz;
  }

  double hop_s(double sample_rate_hz) const {
    return static_cast<double>(hop) / sample_rate_hz;
  }
};

/// Short-time window of a hologram stack, (t, y, x). Viewed as a column-major
/// (pixels x n_win) matrix this is the Casorati matrix of the window.
struct ComplexWindow {
  std::size_t n_win = 0;
  std::size_t ny = 0;
  std::size_t nx = 0;
  double t_center_s = 0;
  std::vector<std::complex<double>> data;

  std::size_t pixels() const { return nx * ny; }
  std::complex<double>& at(std::size_t t, std::size_t p) { return data[t * pixels() + p]; }
  const std::complex<double>& at(std::size_t t, std::size_t p) const {
    return data[t * pixels() + p];
  }
  double energy() const {
    double e = 0;
    for (const auto& v : data) e += std::norm(v);
    return e;
  }
};

inline ComplexWindow extract_window(const HologramStack& stack, const StftPlan& plan,
                                    std::size_t m) {
  const auto& meta = stack.meta;
  ComplexWindow w;
  w.n_win = plan.n_win;
  w.ny = meta.ny;
  w.nx = meta.nx;
  w.t_center_s = plan.center_time(m, meta.sample_rate_hz);
  w.data.resize(plan.n_win * meta.frame_size());
  const std::size_t first = m * plan.hop;
  for (std::size_t t = 0; t < plan.n_win; ++t) {
    auto f = stack.frame(first + t);
    std::copy(f.begin(), f.end(), w.data.begin() + static_cast<long>(t * meta.frame_size()));
  }
  return w;
}

/// Window m covers frames [m*hop, m*hop + n_win).
inline std::vector<ComplexWindow> make_windows(const HologramStack& stack,
                                               const StftPlan& plan) {
  const std::size_t count = plan.window_count(stack.meta.nt);
  std::vector<ComplexWindow> out(count);
  parallel_for(count, [&](std::size_t m) { out[m] = extract_window(stack, plan, m); });
  return out;
}

/// Periodic Hann taper of length n.
inline std::vector<double> hann_taper(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.5 * (1 - std::cos(2 * std::numbers::pi * static_cast<double>(i) /
                               static_cast<double>(n)));
  return w;
}

/// Per-pixel |X[k]|^2 of the unitary temporal DFT of the window. With no
/// apodization the bins of every pixel sum to that pixel's window energy.
inline SpectralCube dpsd(const ComplexWindow& window, double sample_rate_hz,
                         Apodization apod = Apodization::none) {
  for (const auto& v : window.data)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      fail(ErrorKind::data, "dpsd: non-finite window sample");
  const std::size_t n = window.n_win;
  const std::size_t npx = window.pixels();
  std::vector<std::complex<double>> work = window.data;
  if (apod == Apodization::hann) {
    const auto taper = hann_taper(n);
    for (std::size_t t = 0; t < n; ++t)
      for (std::size_t p = 0; p < npx; ++p) work[t * npx + p] *= taper[t];
  }
  fft_many(work.data(), n, npx, npx, 1, FftDirection::forward);

  SpectralCube cube;
  cube.nbins = n;
  cube.ny = window.ny;
  cube.nx = window.nx;
  cube.sample_rate_hz = sample_rate_hz;
  cube.t_center_s = window.t_center_s;
  cube.power.resize(work.size());
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < work.size(); ++i) cube.power[i] = std::norm(work[i]) * scale;
  return cube;
}

}  // namespace rcldh

#endif  // RCLDH_STFT_HPP
