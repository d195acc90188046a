#ifndef RCLDH_RECONSTRUCT_HPP
#define RCLDH_RECONSTRUCT_HPP

#include <bit>
#include <cmath>
#include <complex>
#include <numbers>

#include "rcldh/core.hpp"
#include "rcldh/fft.hpp"

namespace rcldh {

/// Reference-beam tilt in cycles per pixel and the half-width of the square
/// spatial-frequency window kept around the object order.
struct CarrierSpec {
  double kx_cyc_per_px = 0.25;
  double ky_cyc_per_px = 0.25;
  double halfwidth_cyc_per_px = 0.1;

  void validate() const {
    if (std::abs(kx_cyc_per_px) > 0.5 || std::abs(ky_cyc_per_px) > 0.5)
      fail(ErrorKind::config, "carrier frequency must satisfy |k| <= 0.5 cycles/px");
    if (!(halfwidth_cyc_per_px > 0))
      fail(ErrorKind::config, "carrier halfwidth must be positive");
    if (std::abs(kx_cyc_per_px) + halfwidth_cyc_per_px > 0.5 ||
        std::abs(ky_cyc_per_px) + halfwidth_cyc_per_px > 0.5)
      fail(ErrorKind::config, "carrier window out of range");
  }
};

inline ComplexImage to_complex(const RealImage& img) {
  ComplexImage out(img.ny, img.nx);
  for (std::size_t i = 0; i < img.size(); ++i) out.data[i] = img.data[i];
  return out;
}

/// Extracts the object order of an off-axis interferogram.
///
/// With a reference wave exp(+i2pi(kx x + ky y)) the cross term carrying the
/// object field sits at spatial frequency -(kx, ky). The square window of
/// half-width `halfwidth` around that point is moved to the origin and
/// inverse transformed; output has the input's pixel dimensions.
inline ComplexImage demodulate_offaxis(const RealImage& frame,
                                       const CarrierSpec& carrier) {
  carrier.validate();
  const auto nx = static_cast<long>(frame.nx);
  const auto ny = static_cast<long>(frame.ny);
  const long cx = std::lround(-carrier.kx_cyc_per_px * static_cast<double>(nx));
  const long cy = std::lround(-carrier.ky_cyc_per_px * static_cast<double>(ny));
  const auto hx = static_cast<long>(std::floor(carrier.halfwidth_cyc_per_px * nx));
  const auto hy = static_cast<long>(std::floor(carrier.halfwidth_cyc_per_px * ny));
  if (2 * (std::abs(cx) + hx) > nx || 2 * (std::abs(cy) + hy) > ny)
    fail(ErrorKind::config, "carrier window out of range");

  ComplexImage spec = to_complex(frame);
  fft2(spec, FftDirection::forward);

  ComplexImage sel(frame.ny, frame.nx);
  auto wrap = [](long i, long n) { return static_cast<std::size_t>(((i % n) + n) % n); };
  for (long dy = -hy; dy <= hy; ++dy)
    for (long dx = -hx; dx <= hx; ++dx)
      sel(wrap(dy, ny), wrap(dx, nx)) = spec(wrap(cy + dy, ny), wrap(cx + dx, nx));

  fft2(sel, FftDirection::backward);
  const double scale = 1.0 / static_cast<double>(frame.size());
  for (auto& v : sel.data) v *= scale;
  return sel;
}

struct PropagationOptions {
  bool pad_pow2 = false;  // zero-pad to power-of-two dimensions, then crop
};

/// Free-space propagation by the angular spectrum transfer function
/// exp(i z k_z); evanescent components are dropped.
inline ComplexImage angular_spectrum_propagate(const ComplexImage& field, double z_m,
                                               double wavelength_m, double pixel_pitch_m,
                                               PropagationOptions opts = {}) {
  if (!(wavelength_m > 0) || !(pixel_pitch_m > 0))
    fail(ErrorKind::config, "wavelength and pixel pitch must be positive");
  for (const auto& v : field.data)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      fail(ErrorKind::data, "angular_spectrum_propagate: non-finite field");
  if (z_m == 0) return field;

  const std::size_t py = opts.pad_pow2 ? std::bit_ceil(field.ny) : field.ny;
  const std::size_t px = opts.pad_pow2 ? std::bit_ceil(field.nx) : field.nx;
  ComplexImage work(py, px);
  for (std::size_t y = 0; y < field.ny; ++y)
    for (std::size_t x = 0; x < field.nx; ++x) work(y, x) = field(y, x);

  fft2(work, FftDirection::forward);
  const double k = 2 * std::numbers::pi / wavelength_m;
  const double dkx = 2 * std::numbers::pi / (static_cast<double>(px) * pixel_pitch_m);
  const double dky = 2 * std::numbers::pi / (static_cast<double>(py) * pixel_pitch_m);
  const double norm = 1.0 / static_cast<double>(work.size());
  for (std::size_t y = 0; y < py; ++y) {
    const double ky = dky * static_cast<double>(signed_bin(y, py));
    for (std::size_t x = 0; x < px; ++x) {
      const double kx = dkx * static_cast<double>(signed_bin(x, px));
      const double arg = k * k - kx * kx - ky * ky;
      auto& v = work(y, x);
      if (arg < 0) {
        v = 0;
      } else {
        const double phase = z_m * std::sqrt(arg);
        v *= std::complex<double>(std::cos(phase), std::sin(phase)) * norm;
      }
    }
  }
  fft2(work, FftDirection::backward);

  if (py == field.ny && px == field.nx) return work;
  ComplexImage out(field.ny, field.nx);
  for (std::size_t y = 0; y < field.ny; ++y)
    for (std::size_t x = 0; x < field.nx; ++x) out(y, x) = work(y, x);
  return out;
}

inline RealImage frame_image(const FrameStack& stack, std::size_t t) {
  RealImage img(stack.meta.ny, stack.meta.nx);
  auto f = stack.frame(t);
  for (std::size_t i = 0; i < f.size(); ++i) img.data[i] = f[i];
  return img;
}

inline ComplexImage frame_image(const HologramStack& stack, std::size_t t) {
  ComplexImage img(stack.meta.ny, stack.meta.nx);
  auto f = stack.frame(t);
  for (std::size_t i = 0; i < f.size(); ++i) img.data[i] = f[i];
  return img;
}

inline void store_frame(HologramStack& stack, std::size_t t, const ComplexImage& img) {
  auto f = stack.frame(t);
  for (std::size_t i = 0; i < f.size(); ++i)
    f[i] = std::complex<float>(static_cast<float>(img.data[i].real()),
                               static_cast<float>(img.data[i].imag()));
}

/// Demodulates and propagates every frame independently.
inline HologramStack reconstruct_stack(const FrameStack& frames, const CarrierSpec& carrier,
                                       double z_m, PropagationOptions opts = {}) {
  frames.validate();
  carrier.validate();
  HologramStack out = HologramStack::zeros(frames.meta);
  parallel_for(frames.meta.nt, [&](std::size_t t) {
    try {
      ComplexImage field = demodulate_offaxis(frame_image(frames, t), carrier);
      field = angular_spectrum_propagate(field, z_m, frames.meta.wavelength_m,
                                         frames.meta.pixel_pitch_m, opts);
      store_frame(out, t, field);
    } catch (const Error& e) {
      throw Error(e.kind(), str_cat("reconstruct: frame ", t, ": ", e.what()));
    }
  });
  return out;
}

}  // namespace rcldh

#endif  // RCLDH_RECONSTRUCT_HPP
