#ifndef RCLDH_ARTIFACT_IO_HPP
#define RCLDH_ARTIFACT_IO_HPP

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rcldh/composite.hpp"
#include "rcldh/core.hpp"
#include "rcldh/doppler.hpp"

namespace rcldh {

inline std::string encode_f32(std::span<const double> v) {
  std::string out(v.size() * sizeof(float), '\0');
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto f = static_cast<float>(v[i]);
    std::memcpy(out.data() + i * sizeof(float), &f, sizeof f);
  }
  return out;
}

inline std::vector<float> decode_f32(const std::string& bytes, const std::string& path) {
  if (bytes.size() % sizeof(float) != 0)
    fail(ErrorKind::data, str_cat("size mismatch in ", path, ": not a float32 dump"));
  std::vector<float> v(bytes.size() / sizeof(float));
  std::memcpy(v.data(), bytes.data(), bytes.size());
  return v;
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  write_bytes(path, j.dump(2) + "\n");
}

inline nlohmann::json read_json(const std::filesystem::path& path) {
  const std::string text = read_bytes(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::data, str_cat("malformed JSON in ", path.string(), ": ", e.what()));
  }
}

inline std::filesystem::path json_sidecar(const std::filesystem::path& raw) {
  return std::filesystem::path(raw.string() + ".json");
}

// ---------------------------------------------------------------------------
// Power Doppler movies: float32 (window, y, x) plus `<file>.json`.

inline nlohmann::json movie_header(const PowerDopplerMovie& m) {
  return {{"dtype", "f32"},
          {"order", "window,y,x"},
          {"n", m.n},
          {"ny", m.ny},
          {"nx", m.nx},
          {"hop_s", m.hop_s},
          {"t_first_s", m.t_first_s},
          {"band_hz", {m.band.f_low_hz, m.band.f_high_hz}},
          {"rc_flag", m.rc_flag}};
}

/// Returns {raw path, sidecar path}.
inline std::vector<std::filesystem::path> write_movie(const PowerDopplerMovie& movie,
                                                      const std::filesystem::path& path,
                                                      const nlohmann::json& extra = {}) {
  write_bytes(path, encode_f32(movie.frames));
  nlohmann::json j = movie_header(movie);
  if (extra.is_object()) j.update(extra);
  write_json(json_sidecar(path), j);
  return {path, json_sidecar(path)};
}

inline PowerDopplerMovie read_movie(const std::filesystem::path& path) {
  const nlohmann::json j = read_json(json_sidecar(path));
  PowerDopplerMovie m;
  try {
    m.n = j.at("n");
    m.ny = j.at("ny");
    m.nx = j.at("nx");
    m.hop_s = j.at("hop_s");
    m.t_first_s = j.at("t_first_s");
    m.band = {j.at("band_hz").at(0), j.at("band_hz").at(1)};
    m.rc_flag = j.at("rc_flag");
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::data, str_cat("bad movie sidecar for ", path.string(), ": ", e.what()));
  }
  const auto v = decode_f32(read_bytes(path), path.string());
  if (v.size() != m.n * m.ny * m.nx)
    fail(ErrorKind::data, str_cat("size mismatch in ", path.string(), ": expected ",
                                  m.n * m.ny * m.nx * sizeof(float), " bytes, got ",
                                  v.size() * sizeof(float)));
  m.frames.assign(v.begin(), v.end());
  return m;
}

inline void write_image_f32(const RealImage& img, const std::filesystem::path& path,
                            const nlohmann::json& extra = {}) {
  write_bytes(path, encode_f32(img.data));
  nlohmann::json j = {{"dtype", "f32"}, {"order", "y,x"}, {"ny", img.ny}, {"nx", img.nx}};
  if (extra.is_object()) j.update(extra);
  write_json(json_sidecar(path), j);
}

// ---------------------------------------------------------------------------
// Traces

inline std::string encode_trace_csv(std::span<const double> t_s, std::span<const double> v) {
  if (t_s.size() != v.size()) fail(ErrorKind::data, "trace: time and value lengths differ");
  std::ostringstream os;
  os.precision(17);
  os << "time_s,value\n";
  for (std::size_t i = 0; i < v.size(); ++i) os << t_s[i] << "," << v[i] << "\n";
  return os.str();
}

inline void write_trace_csv(const std::filesystem::path& path, std::span<const double> t_s,
                            std::span<const double> v) {
  write_bytes(path, encode_trace_csv(t_s, v));
}

inline std::pair<std::vector<double>, std::vector<double>> read_trace_csv(
    const std::filesystem::path& path) {
  std::istringstream in(read_bytes(path));
  std::string line;
  if (!std::getline(in, line) || line != "time_s,value")
    fail(ErrorKind::data, str_cat("unrecognized format: ", path.string()));
  std::vector<double> t, v;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      fail(ErrorKind::data, str_cat("malformed trace line in ", path.string()));
    t.push_back(std::stod(line.substr(0, comma)));
    v.push_back(std::stod(line.substr(comma + 1)));
  }
  return {t, v};
}

// ---------------------------------------------------------------------------
// Spectrograms

/// Display image: rows run from the most positive frequency (top) to the
/// most negative, columns are windows. Plain spectrograms use dB relative to
/// the maximum, clipped at `db_floor`; residual spectrograms are signed and
/// use percentile-clipped linear scaling.
inline GrayImage spectrogram_image(const Spectrogram& sg, double db_floor,
                                   const RenderSpec& residual_render = {}) {
  RealImage shifted(sg.nbins, sg.nwindows);
  for (std::size_t row = 0; row < sg.nbins; ++row) {
    // row 0 -> bin N/2 - 1 (highest positive), last row -> bin N/2 (most negative)
    const std::size_t k = (sg.nbins / 2 + sg.nbins - 1 - row) % sg.nbins;
    for (std::size_t m = 0; m < sg.nwindows; ++m) shifted(row, m) = sg.at(k, m);
  }
  if (sg.residual) return to_grayscale(shifted, residual_render);
  double peak = 0;
  for (double v : shifted.data) peak = std::max(peak, v);
  GrayImage out(shifted.ny, shifted.nx, 0);
  if (!(peak > 0)) return out;
  for (std::size_t i = 0; i < shifted.size(); ++i) {
    const double db = shifted.data[i] > 0 ? 10 * std::log10(shifted.data[i] / peak) : db_floor;
    const double u = (std::clamp(db, db_floor, 0.0) - db_floor) / -db_floor;
    out.data[i] = static_cast<std::uint8_t>(std::lround(u * 255.0));
  }
  return out;
}

inline nlohmann::json spectrogram_header(const Spectrogram& sg, double db_floor,
                                         const RenderSpec& residual_render) {
  nlohmann::json j = {{"dtype", "f32"},
                      {"order", "bin,window"},
                      {"nbins", sg.nbins},
                      {"nwindows", sg.nwindows},
                      {"sample_rate_hz", sg.sample_rate_hz},
                      {"t_s", sg.t_s},
                      {"residual", sg.residual},
                      {"raw_bin_order", "DFT bin k; f = k*fs/N below N/2, (k-N)*fs/N above"},
                      {"image_rows", "top = most positive frequency, bottom = most negative"}};
  if (sg.residual)
    j["image_scale"] = {{"kind", "linear"},
                        {"clip_lo_pct", residual_render.clip_lo_pct},
                        {"clip_hi_pct", residual_render.clip_hi_pct},
                        {"gamma", residual_render.gamma}};
  else
    j["image_scale"] = {{"kind", "dB re max"}, {"db_min", db_floor}, {"db_max", 0.0}};
  return j;
}

/// Writes `<stem>.f32`, `<stem>.f32.json` and `<stem>.pgm`.
inline std::vector<std::filesystem::path> write_spectrogram(const Spectrogram& sg,
                                                            const std::filesystem::path& stem,
                                                            double db_floor,
                                                            const RenderSpec& residual_render) {
  const std::filesystem::path raw = stem.string() + ".f32";
  const std::filesystem::path pgm = stem.string() + ".pgm";
  write_bytes(raw, encode_f32(sg.power));
  write_json(json_sidecar(raw), spectrogram_header(sg, db_floor, residual_render));
  write_pgm(spectrogram_image(sg, db_floor, residual_render), pgm);
  return {raw, json_sidecar(raw), pgm};
}

// ---------------------------------------------------------------------------
// Manifest

/// Records every written file with the parameters that produced it.
class Manifest {
public:
  explicit Manifest(std::filesystem::path root) : root_(std::move(root)) {}

  void add(const std::filesystem::path& path, const std::string& kind,
           const nlohmann::json& params = nlohmann::json::object()) {
    artifacts_.push_back({{"path", std::filesystem::relative(path, root_).generic_string()},
                          {"kind", kind},
                          {"params", params}});
  }

  void add_all(const std::vector<std::filesystem::path>& paths, const std::string& kind,
               const nlohmann::json& params = nlohmann::json::object()) {
    for (const auto& p : paths) add(p, kind, params);
  }

  std::filesystem::path write(const std::string& command, const nlohmann::json& parameters) const {
    nlohmann::json j;
    j["command"] = command;
    j["parameters"] = parameters;
    j["artifacts"] = artifacts_;
    const auto path = root_ / "manifest.json";
    write_json(path, j);
    return path;
  }

  const nlohmann::json& artifacts() const { return artifacts_; }

private:
  std::filesystem::path root_;
  nlohmann::json artifacts_ = nlohmann::json::array();
};

}  // namespace rcldh

#endif  // RCLDH_ARTIFACT_IO_HPP
