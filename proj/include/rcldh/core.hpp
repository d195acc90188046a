#ifndef RCLDH_CORE_HPP
#define RCLDH_CORE_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace rcldh {

/// Error categories map onto CLI exit codes (config 2, data 3, numerical 4).
enum class ErrorKind { config, data, numerical };

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

template <class... Args>
std::string str_cat(Args&&... args) {
  std::ostringstream os;
  os.precision(17);
  (os << ... << std::forward<Args>(args));
  return os.str();
}

// ---------------------------------------------------------------------------
// Threading

namespace detail {
inline std::atomic<unsigned>& thread_setting() {
  static std::atomic<unsigned> n{0};
  return n;
}
}  // namespace detail

/// 0 selects std::thread::hardware_concurrency().
inline void set_num_threads(unsigned n) { detail::thread_setting() = n; }

inline unsigned num_threads() {
  unsigned n = detail::thread_setting();
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  return n;
}

/// Runs fn(i) for i in [0, count) over contiguous static chunks. Each index
/// is visited exactly once, so results written per index do not depend on
/// the thread count.
template <class Fn>
void parallel_for(std::size_t count, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(num_threads(), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  const std::size_t chunk = (count + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(count, begin + chunk);
        for (std::size_t i = begin; i < end; ++i) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// ---------------------------------------------------------------------------
// 2-D arrays

/// Row-major 2-D array indexed (y, x).
template <class T>
struct Grid2 {
  std::size_t ny = 0;
  std::size_t nx = 0;
  std::vector<T> data;

  Grid2() = default;
  Grid2(std::size_t rows, std::size_t cols, T fill = T{})
      : ny(rows), nx(cols), data(rows * cols, fill) {}

  T& operator()(std::size_t y, std::size_t x) { return data[y * nx + x]; }
  const T& operator()(std::size_t y, std::size_t x) const {
    return data[y * nx + x];
  }
  std::size_t size() const { return data.size(); }
  template <class U>
  bool same_shape(const Grid2<U>& o) const {
    return ny == o.ny && nx == o.nx;
  }

  bool operator==(const Grid2&) const = default;
};

using RealImage = Grid2<double>;
using ComplexImage = Grid2<std::complex<double>>;
using GrayImage = Grid2<std::uint8_t>;

// ---------------------------------------------------------------------------
// Stacks

struct StackMeta {
  std::size_t nx = 1;
  std::size_t ny = 1;
  std::size_t nt = 1;
  double sample_rate_hz = 1.0;
  double exposure_s = 1.0;
  double wavelength_m = 785e-9;
  double pixel_pitch_m = 20e-6;
  std::string origin_tag = "external";

  std::size_t frame_size() const { return nx * ny; }
  std::size_t element_count() const { return nx * ny * nt; }

  void validate() const {
    if (nx < 1 || ny < 1 || nt < 1)
      fail(ErrorKind::data, str_cat("stack dimensions must be >= 1, got ", nx,
                                    "x", ny, "x", nt));
    if (!(sample_rate_hz > 0) || !std::isfinite(sample_rate_hz))
      fail(ErrorKind::data, "sample_rate_hz must be positive");
    // Exposure may equal the frame period; allow rounding slack at that edge.
    if (!(exposure_s > 0) || exposure_s > (1.0 / sample_rate_hz) * (1 + 1e-12))
      fail(ErrorKind::data,
           str_cat("exposure_s must be in (0, 1/sample_rate_hz], got ",
                   exposure_s));
    if (!(wavelength_m > 0)) fail(ErrorKind::data, "wavelength_m must be positive");
    if (!(pixel_pitch_m > 0)) fail(ErrorKind::data, "pixel_pitch_m must be positive");
  }

  bool operator==(const StackMeta&) const = default;
};

namespace detail {
inline bool finite_sample(float v) { return std::isfinite(v); }
inline bool finite_sample(const std::complex<float>& v) {
  return std::isfinite(v.real()) && std::isfinite(v.imag());
}
}  // namespace detail

/// Frame sequence stored (t, y, x) contiguous, one float32 sample (real) or
/// float32 pair (complex) per pixel.
template <class Sample>
struct Stack {
  using sample_type = Sample;

  StackMeta meta;
  std::vector<Sample> samples;

  static Stack zeros(const StackMeta& m) {
    Stack s;
    s.meta = m;
    s.samples.assign(m.element_count(), Sample{});
    return s;
  }

  std::span<Sample> frame(std::size_t t) {
    return {samples.data() + t * meta.frame_size(), meta.frame_size()};
  }
  std::span<const Sample> frame(std::size_t t) const {
    return {samples.data() + t * meta.frame_size(), meta.frame_size()};
  }
  Sample& at(std::size_t t, std::size_t y, std::size_t x) {
    return samples[(t * meta.ny + y) * meta.nx + x];
  }
  const Sample& at(std::size_t t, std::size_t y, std::size_t x) const {
    return samples[(t * meta.ny + y) * meta.nx + x];
  }

  bool all_finite() const {
    return std::all_of(samples.begin(), samples.end(),
                       [](const Sample& v) { return detail::finite_sample(v); });
  }

  void validate() const {
    meta.validate();
    if (samples.size() != meta.element_count())
      fail(ErrorKind::data, str_cat("stack holds ", samples.size(),
                                    " samples, meta implies ",
                                    meta.element_count()));
    if (!all_finite()) fail(ErrorKind::data, "stack contains non-finite samples");
  }

  bool operator==(const Stack&) const = default;
};

using FrameStack = Stack<float>;
using HologramStack = Stack<std::complex<float>>;

// ---------------------------------------------------------------------------
// Frequency axis

/// Two-sided DFT bin frequency: k*fs/N below N/2, (k-N)*fs/N from N/2 on.
inline double bin_frequency(std::size_t k, std::size_t nbins,
                            double sample_rate_hz) {
  const auto n = static_cast<double>(nbins);
  const auto kk = static_cast<double>(k);
  return (2 * k < nbins ? kk : kk - n) * sample_rate_hz / n;
}

struct Band {
  double f_low_hz = 0;
  double f_high_hz = 0;

  bool reaches_nyquist(double sample_rate_hz) const {
    return std::abs(f_high_hz - sample_rate_hz / 2) <= 1e-9 * sample_rate_hz;
  }

  void validate(double sample_rate_hz) const {
    if (!(f_low_hz >= 0) || !(f_low_hz < f_high_hz))
      fail(ErrorKind::config, str_cat("invalid band [", f_low_hz, ", ",
                                      f_high_hz, ") Hz"));
    if (f_high_hz > sample_rate_hz / 2 && !reaches_nyquist(sample_rate_hz))
      fail(ErrorKind::config,
           str_cat("band exceeds Nyquist: f_high ", f_high_hz, " Hz > ",
                   sample_rate_hz / 2, " Hz"));
  }

  bool operator==(const Band&) const = default;
};

/// Bins whose |f| lies in [f_low, f_high); the Nyquist bin joins the set when
/// f_high sits exactly at fs/2 so that adjacent bands partition the spectrum.
inline std::vector<std::size_t> band_bins(const Band& band, std::size_t nbins,
                                          double sample_rate_hz) {
  band.validate(sample_rate_hz);
  const double eps = 1e-9 * sample_rate_hz / static_cast<double>(nbins);
  const bool nyquist_edge = band.reaches_nyquist(sample_rate_hz);
  std::vector<std::size_t> bins;
  for (std::size_t k = 0; k < nbins; ++k) {
    const double f = std::abs(bin_frequency(k, nbins, sample_rate_hz));
    const bool in_band = f >= band.f_low_hz - eps && f < band.f_high_hz - eps;
    const bool nyquist_bin = nbins % 2 == 0 && 2 * k == nbins;
    if (in_band || (nyquist_edge && nyquist_bin && f >= band.f_low_hz - eps))
      bins.push_back(k);
  }
  return bins;
}

// ---------------------------------------------------------------------------
// Spectral and Doppler data

/// Doppler power spectral density for one short-time window, (f, y, x).
struct SpectralCube {
  std::size_t nbins = 0;
  std::size_t ny = 0;
  std::size_t nx = 0;
  double sample_rate_hz = 1;
  double t_center_s = 0;
  std::vector<double> power;

  std::size_t frame_size() const { return nx * ny; }
  std::span<const double> bin(std::size_t k) const {
    return {power.data() + k * frame_size(), frame_size()};
  }
  double at(std::size_t k, std::size_t y, std::size_t x) const {
    return power[(k * ny + y) * nx + x];
  }
};

/// Band-integrated moment M0 per window, (n, y, x).
struct PowerDopplerMovie {
  std::size_t n = 0;
  std::size_t ny = 0;
  std::size_t nx = 0;
  std::vector<double> frames;
  double hop_s = 1;
  double t_first_s = 0;  // center time of window 0
  Band band;
  bool rc_flag = false;

  std::size_t frame_size() const { return nx * ny; }
  std::span<double> frame(std::size_t i) {
    return {frames.data() + i * frame_size(), frame_size()};
  }
  std::span<const double> frame(std::size_t i) const {
    return {frames.data() + i * frame_size(), frame_size()};
  }
  RealImage frame_image(std::size_t i) const {
    RealImage img(ny, nx);
    auto f = frame(i);
    std::copy(f.begin(), f.end(), img.data.begin());
    return img;
  }
  double time_of(std::size_t i) const {
    return t_first_s + static_cast<double>(i) * hop_s;
  }
};

struct RoiMask {
  Grid2<std::uint8_t> mask;

  std::size_t count() const {
    return static_cast<std::size_t>(
        std::count_if(mask.data.begin(), mask.data.end(),
                      [](std::uint8_t v) { return v != 0; }));
  }

  static RoiMask rect(std::size_t ny, std::size_t nx, std::size_t x0,
                      std::size_t y0, std::size_t w, std::size_t h) {
    RoiMask r{Grid2<std::uint8_t>(ny, nx, 0)};
    for (std::size_t y = y0; y < std::min(ny, y0 + h); ++y)
      for (std::size_t x = x0; x < std::min(nx, x0 + w); ++x) r.mask(y, x) = 1;
    return r;
  }
};

// ---------------------------------------------------------------------------
// Small statistics helpers shared across modules.

inline double mean_of(std::span<const double> v) {
  double s = 0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

/// Population standard deviation.
inline double pstdev_of(std::span<const double> v) {
  if (v.empty()) return 0;
  const double m = mean_of(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

inline double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2)
    fail(ErrorKind::data, "pearson: series must have equal length >= 2");
  const double ma = mean_of(a), mb = mean_of(b);
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0 || sbb == 0) return 0;
  return sab / std::sqrt(saa * sbb);
}

/// Linear-interpolation percentile (q in [0, 100]) on a copy of v.
inline double percentile(std::vector<double> v, double q) {
  if (v.empty()) fail(ErrorKind::data, "percentile of empty series");
  std::sort(v.begin(), v.end());
  const double pos = std::clamp(q, 0.0, 100.0) / 100.0 *
                     static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] + frac * (v[hi] - v[lo]);
}

}  // namespace rcldh

#endif  // RCLDH_CORE_HPP
