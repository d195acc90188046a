#ifndef RCLDH_COMPOSITE_HPP
#define RCLDH_COMPOSITE_HPP

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <span>
#include <sstream>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "rcldh/core.hpp"

namespace rcldh {

using RgbImage = Grid2<std::array<std::uint8_t, 3>>;

struct RenderSpec {
  double clip_lo_pct = 0.5;
  double clip_hi_pct = 99.5;
  double gamma = 1.0;

  void validate() const {
    if (!(clip_lo_pct >= 0) || !(clip_lo_pct < clip_hi_pct) || !(clip_hi_pct <= 100))
      fail(ErrorKind::config, "render: need 0 <= clip_lo_pct < clip_hi_pct <= 100");
    if (!(gamma > 0)) fail(ErrorKind::config, "render: gamma must be positive");
  }
};

/// Percentile clip, affine map to [0, 1], gamma, quantize to 0..255.
inline GrayImage to_grayscale(const RealImage& image, const RenderSpec& spec = {}) {
  spec.validate();
  for (double v : image.data)
    if (!std::isfinite(v)) fail(ErrorKind::data, "to_grayscale: non-finite pixel");
  GrayImage out(image.ny, image.nx, 0);
  if (image.size() == 0) return out;
  const double lo = percentile(image.data, spec.clip_lo_pct);
  const double hi = percentile(image.data, spec.clip_hi_pct);
  if (!(hi > lo)) return out;
  for (std::size_t i = 0; i < image.size(); ++i) {
    double v = std::clamp((image.data[i] - lo) / (hi - lo), 0.0, 1.0);
    if (spec.gamma != 1.0) v = std::pow(v, spec.gamma);
    out.data[i] = static_cast<std::uint8_t>(std::lround(v * 255.0));
  }
  return out;
}

/// Fast flow in red, slow flow in green and blue (cyan).
inline RgbImage compose_low_high(const RealImage& slow_img, const RealImage& fast_img,
                                 const RenderSpec& spec = {}) {
  if (!slow_img.same_shape(fast_img))
    fail(ErrorKind::data, "compose_low_high: image shapes differ");
  const GrayImage red = to_grayscale(fast_img, spec);
  const GrayImage cyan = to_grayscale(slow_img, spec);
  RgbImage out(slow_img.ny, slow_img.nx);
  for (std::size_t i = 0; i < out.size(); ++i)
    out.data[i] = {red.data[i], cyan.data[i], cyan.data[i]};
  return out;
}

/// One color channel as a real image, for channel-wise comparisons.
inline RealImage channel_of(const RgbImage& img, std::size_t c) {
  RealImage out(img.ny, img.nx);
  for (std::size_t i = 0; i < img.size(); ++i) out.data[i] = img.data[i][c];
  return out;
}

// ---------------------------------------------------------------------------
// Binary PGM (P5) / PPM (P6), maxval 255.

inline std::string pnm_header(const char* magic, std::size_t nx, std::size_t ny) {
  return str_cat(magic, "\n", nx, " ", ny, "\n255\n");
}

inline std::string encode_pgm(const GrayImage& img) {
  std::string out = pnm_header("P5", img.nx, img.ny);
  out.append(reinterpret_cast<const char*>(img.data.data()), img.size());
  return out;
}

inline std::string encode_ppm(const RgbImage& img) {
  std::string out = pnm_header("P6", img.nx, img.ny);
  for (const auto& px : img.data) out.append(reinterpret_cast<const char*>(px.data()), 3);
  return out;
}

inline void write_bytes(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::data, str_cat("cannot open for writing: ", path.string()));
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::data, str_cat("write failed: ", path.string()));
}

inline std::string read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::data, str_cat("cannot open: ", path.string()));
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_pgm(const GrayImage& img, const std::filesystem::path& path) {
  write_bytes(path, encode_pgm(img));
}

inline void write_ppm(const RgbImage& img, const std::filesystem::path& path) {
  write_bytes(path, encode_ppm(img));
}

using AnyImage = std::variant<GrayImage, RgbImage>;

inline AnyImage decode_pnm(const std::string& bytes) {
  std::size_t pos = 0;
  auto token = [&]() {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    return bytes.substr(start, pos - start);
  };
  const std::string magic = token();
  if (magic != "P5" && magic != "P6") fail(ErrorKind::data, "unrecognized PNM magic");
  std::size_t nx = 0, ny = 0, maxval = 0;
  try {
    nx = std::stoul(token());
    ny = std::stoul(token());
    maxval = std::stoul(token());
  } catch (const std::exception&) {
    fail(ErrorKind::data, "malformed PNM header");
  }
  if (maxval != 255) fail(ErrorKind::data, "only maxval 255 is supported");
  ++pos;  // single whitespace after maxval
  const std::size_t channels = magic == "P5" ? 1 : 3;
  if (bytes.size() - pos != nx * ny * channels)
    fail(ErrorKind::data, "PNM payload size mismatch");
  if (channels == 1) {
    GrayImage img(ny, nx);
    std::memcpy(img.data.data(), bytes.data() + pos, nx * ny);
    return img;
  }
  RgbImage img(ny, nx);
  for (std::size_t i = 0; i < nx * ny; ++i)
    for (std::size_t c = 0; c < 3; ++c)
      img.data[i][c] = static_cast<std::uint8_t>(bytes[pos + 3 * i + c]);
  return img;
}

inline AnyImage read_pnm(const std::filesystem::path& path) { return decode_pnm(read_bytes(path)); }

namespace detail {
inline std::string frame_name(const std::string& prefix, std::size_t i, std::size_t count,
                              const char* ext) {
  std::size_t width = 3;
  for (std::size_t c = count > 0 ? count - 1 : 0; c >= 1000; c /= 10) ++width;
  std::ostringstream os;
  os << prefix << "_" << std::setw(static_cast<int>(width)) << std::setfill('0') << i << ext;
  return os.str();
}
}  // namespace detail

/// Writes numbered PGM/PPM frames plus `<prefix>_index.txt` with
/// `frame_index,time_s` lines. Returns the written paths, index last.
template <class Image>
std::vector<std::filesystem::path> write_image_sequence(const std::vector<Image>& frames,
                                                        std::span<const double> times_s,
                                                        const std::filesystem::path& dir,
                                                        const std::string& prefix) {
  constexpr bool gray = std::is_same_v<Image, GrayImage>;
  if (times_s.size() != frames.size())
    fail(ErrorKind::data, "write_image_sequence: one time per frame required");
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  std::ostringstream index;
  index.precision(17);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto path = dir / detail::frame_name(prefix, i, frames.size(), gray ? ".pgm" : ".ppm");
    try {
      if constexpr (gray)
        write_pgm(frames[i], path);
      else
        write_ppm(frames[i], path);
    } catch (const Error& e) {
      throw Error(e.kind(), str_cat("frame ", i, ": ", e.what()));
    }
    index << i << "," << times_s[i] << "\n";
    written.push_back(path);
  }
  const auto index_path = dir / (prefix + "_index.txt");
  write_bytes(index_path, index.str());
  written.push_back(index_path);
  return written;
}

}  // namespace rcldh

#endif  // RCLDH_COMPOSITE_HPP
