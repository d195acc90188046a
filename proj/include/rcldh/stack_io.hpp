#ifndef RCLDH_STACK_IO_HPP
#define RCLDH_STACK_IO_HPP

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <variant>

#include <nlohmann/json.hpp>

#include "rcldh/core.hpp"

// Stack file layout (little-endian):
//   "RCLDH1"                          6 bytes
//   u32 nx, u32 ny, u32 nt            12 bytes
//   u8 dtype (0 real f32, 1 complex)  1 byte
//   f64 sample_rate_hz, exposure_s,
//       wavelength_m, pixel_pitch_m   32 bytes
//   payload, (t, y, x) order
// A JSON sidecar `<path>.meta.json` repeats the header fields.

namespace rcldh {

inline constexpr std::array<char, 6> kStackMagic{'R', 'C', 'L', 'D', 'H', '1'};
inline constexpr std::size_t kStackHeaderBytes = 6 + 3 * 4 + 1 + 4 * 8;

enum class StackDtype : std::uint8_t { real_f32 = 0, complex_f32 = 1 };

template <class Sample>
constexpr StackDtype dtype_of() {
  if constexpr (std::is_same_v<Sample, float>)
    return StackDtype::real_f32;
  else
    return StackDtype::complex_f32;
}

using AnyStack = std::variant<FrameStack, HologramStack>;

namespace detail {

static_assert(std::endian::native == std::endian::little,
              "stack I/O assumes a little-endian host");

template <class T>
void put(std::string& buf, T v) {
  char raw[sizeof(T)];
  std::memcpy(raw, &v, sizeof(T));
  buf.append(raw, sizeof(T));
}

template <class T>
T get(const char*& p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  p += sizeof(T);
  return v;
}

inline std::string sidecar_path(const std::filesystem::path& path) {
  return path.string() + ".meta.json";
}

inline nlohmann::json meta_to_json(const StackMeta& m, StackDtype dtype) {
  return {{"format", "RCLDH1"},
          {"nx", m.nx},
          {"ny", m.ny},
          {"nt", m.nt},
          {"dtype", static_cast<int>(dtype)},
          {"dtype_name", dtype == StackDtype::real_f32 ? "real_f32" : "complex_f32"},
          {"sample_rate_hz", m.sample_rate_hz},
          {"exposure_s", m.exposure_s},
          {"wavelength_m", m.wavelength_m},
          {"pixel_pitch_m", m.pixel_pitch_m},
          {"origin_tag", m.origin_tag},
          {"header_bytes", kStackHeaderBytes}};
}

}  // namespace detail

/// Serializes header + payload to a byte string (the exact file contents).
template <class Sample>
std::string encode_stack(const Stack<Sample>& stack) {
  stack.meta.validate();
  if (stack.samples.size() != stack.meta.element_count())
    fail(ErrorKind::data, "stack sample count does not match meta");
  if (!stack.all_finite())
    fail(ErrorKind::data, "refusing to write stack with non-finite samples");
  const auto& m = stack.meta;
  std::string buf;
  buf.reserve(kStackHeaderBytes + stack.samples.size() * sizeof(Sample));
  buf.append(kStackMagic.data(), kStackMagic.size());
  detail::put<std::uint32_t>(buf, static_cast<std::uint32_t>(m.nx));
  detail::put<std::uint32_t>(buf, static_cast<std::uint32_t>(m.ny));
  detail::put<std::uint32_t>(buf, static_cast<std::uint32_t>(m.nt));
  detail::put<std::uint8_t>(buf, static_cast<std::uint8_t>(dtype_of<Sample>()));
  detail::put<double>(buf, m.sample_rate_hz);
  detail::put<double>(buf, m.exposure_s);
  detail::put<double>(buf, m.wavelength_m);
  detail::put<double>(buf, m.pixel_pitch_m);
  buf.append(reinterpret_cast<const char*>(stack.samples.data()),
             stack.samples.size() * sizeof(Sample));
  return buf;
}

template <class Sample>
void write_stack(const Stack<Sample>& stack, const std::filesystem::path& path) {
  const std::string bytes = encode_stack(stack);
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::data, str_cat("cannot open for writing: ", path.string()));
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorKind::data, str_cat("write failed: ", path.string()));
  }
  std::ofstream side(detail::sidecar_path(path), std::ios::trunc);
  if (!side)
    fail(ErrorKind::data, str_cat("cannot open for writing: ", detail::sidecar_path(path)));
  side << detail::meta_to_json(stack.meta, dtype_of<Sample>()).dump(2) << "\n";
  if (!side) fail(ErrorKind::data, str_cat("write failed: ", detail::sidecar_path(path)));
}

/// Parses file contents produced by encode_stack. `origin_tag` is not part of
/// the binary header and is supplied by the caller.
inline AnyStack decode_stack(const std::string& bytes, const std::string& origin_tag,
                             const std::string& path_for_errors = "<memory>") {
  if (bytes.size() < kStackMagic.size() ||
      std::memcmp(bytes.data(), kStackMagic.data(), kStackMagic.size()) != 0)
    fail(ErrorKind::data, str_cat("unrecognized format: ", path_for_errors));
  if (bytes.size() < kStackHeaderBytes)
    fail(ErrorKind::data, str_cat("size mismatch in ", path_for_errors,
                                  ": header needs ", kStackHeaderBytes,
                                  " bytes, file has ", bytes.size()));
  const char* p = bytes.data() + kStackMagic.size();
  StackMeta m;
  m.nx = detail::get<std::uint32_t>(p);
  m.ny = detail::get<std::uint32_t>(p);
  m.nt = detail::get<std::uint32_t>(p);
  const auto code = detail::get<std::uint8_t>(p);
  m.sample_rate_hz = detail::get<double>(p);
  m.exposure_s = detail::get<double>(p);
  m.wavelength_m = detail::get<double>(p);
  m.pixel_pitch_m = detail::get<double>(p);
  m.origin_tag = origin_tag;
  if (code > 1)
    fail(ErrorKind::data, str_cat("unrecognized format: dtype code ",
                                  static_cast<int>(code), " in ", path_for_errors));
  m.validate();

  auto fill = [&](auto stack) -> AnyStack {
    using S = typename decltype(stack)::sample_type;
    const std::size_t expected = kStackHeaderBytes + m.element_count() * sizeof(S);
    if (bytes.size() != expected)
      fail(ErrorKind::data, str_cat("size mismatch in ", path_for_errors,
                                    ": expected ", expected, " bytes, got ",
                                    bytes.size()));
    stack.meta = m;
    stack.samples.resize(m.element_count());
    std::memcpy(stack.samples.data(), bytes.data() + kStackHeaderBytes,
                stack.samples.size() * sizeof(S));
    return stack;
  };
  return code == 0 ? fill(FrameStack{}) : fill(HologramStack{});
}

inline AnyStack read_stack(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::data, str_cat("cannot open stack file: ", path.string()));
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  std::string origin = "external";
  std::ifstream side(detail::sidecar_path(path));
  if (side) {
    try {
      auto j = nlohmann::json::parse(side);
      origin = j.value("origin_tag", origin);
    } catch (const nlohmann::json::exception&) {
      // The binary header is authoritative; a damaged sidecar only loses the tag.
    }
  }
  return decode_stack(bytes, origin, path.string());
}

/// read_stack restricted to one dtype.
template <class StackT>
StackT read_stack_as(const std::filesystem::path& path) {
  AnyStack any = read_stack(path);
  if (auto* s = std::get_if<StackT>(&any)) return std::move(*s);
  fail(ErrorKind::data, str_cat("unexpected stack dtype in ", path.string()));
}

}  // namespace rcldh

#endif  // RCLDH_STACK_IO_HPP
