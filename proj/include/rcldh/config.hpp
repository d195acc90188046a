#ifndef RCLDH_CONFIG_HPP
#define RCLDH_CONFIG_HPP

#include <charconv>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <nlohmann/json.hpp>

#include "rcldh/composite.hpp"
#include "rcldh/core.hpp"
#include "rcldh/pipeline.hpp"
#include "rcldh/reconstruct.hpp"
#include "rcldh/simulator.hpp"

namespace rcldh {

// ---------------------------------------------------------------------------
// INI access with key checking

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace detail

/// One `[section]` of an INI file. Every key must be consumed; check_unused()
/// reports leftovers so typos fail loudly.
class Section {
public:
  Section(std::string name, const boost::property_tree::ptree& tree)
      : name_(std::move(name)), tree_(tree) {}

  const std::string& name() const { return name_; }

  bool has(const std::string& key) const { return find(key) != nullptr; }

  std::optional<std::string> text(const std::string& key) {
    const auto* v = find(key);
    if (!v) return std::nullopt;
    used_.insert(key);
    return detail::trim(*v);
  }

  std::string text(const std::string& key, const std::string& def) {
    return text(key).value_or(def);
  }

  std::optional<double> number(const std::string& key) {
    auto t = text(key);
    if (!t) return std::nullopt;
    return parse_number(key, *t);
  }

  double number(const std::string& key, double def) { return number(key).value_or(def); }

  std::optional<std::uint64_t> count(const std::string& key) {
    auto t = text(key);
    if (!t) return std::nullopt;
    std::uint64_t v = 0;
    const auto* end = t->data() + t->size();
    const auto [ptr, ec] = std::from_chars(t->data(), end, v);
    if (ec != std::errc() || ptr != end || t->empty())
      fail(ErrorKind::config, str_cat(where(key), ": expected a non-negative integer, got '", *t, "'"));
    return v;
  }

  std::uint64_t count(const std::string& key, std::uint64_t def) {
    return count(key).value_or(def);
  }

  std::optional<bool> flag(const std::string& key) {
    auto t = text(key);
    if (!t) return std::nullopt;
    const std::string v = detail::lower(*t);
    if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
    if (v == "false" || v == "no" || v == "off" || v == "0") return false;
    fail(ErrorKind::config, str_cat(where(key), ": expected true/false, got '", *t, "'"));
  }

  bool flag(const std::string& key, bool def) { return flag(key).value_or(def); }

  double parse_number(const std::string& key, const std::string& t) const {
    std::size_t pos = 0;
    double v = 0;
    try {
      v = std::stod(t, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos == 0 || pos != t.size())
      fail(ErrorKind::config, str_cat(where(key), ": expected a number, got '", t, "'"));
    return v;
  }

  std::string where(const std::string& key) const { return str_cat("[", name_, "] ", key); }

  void check_unused() const {
    for (const auto& [key, child] : tree_)
      if (!used_.count(key))
        fail(ErrorKind::config, str_cat("unknown key '", key, "' in section [", name_, "]"));
  }

private:
  const std::string* find(const std::string& key) const {
    for (const auto& [k, child] : tree_)
      if (k == key) return &child.data();
    return nullptr;
  }

  std::string name_;
  const boost::property_tree::ptree& tree_;
  std::set<std::string> used_;
};

/// Parsed INI document; sections are looked up by exact name, so names may
/// contain dots (`[region.artery]`).
class IniDocument {
public:
  static IniDocument load(const std::filesystem::path& path) {
    IniDocument doc;
    doc.path_ = path;
    std::ifstream in(path);
    if (!in) fail(ErrorKind::config, str_cat("cannot open config file: ", path.string()));
    try {
      boost::property_tree::ini_parser::read_ini(in, doc.tree_);
    } catch (const boost::property_tree::ini_parser_error& e) {
      fail(ErrorKind::config,
           str_cat(path.string(), ":", e.line(), ": ", e.message()));
    }
    for (const auto& [name, child] : doc.tree_)
      if (child.empty() && !child.data().empty())
        fail(ErrorKind::config, str_cat(path.string(), ": key '", name,
                                        "' appears outside any [section]"));
    return doc;
  }

  static IniDocument parse(const std::string& text) {
    IniDocument doc;
    std::istringstream in(text);
    try {
      boost::property_tree::ini_parser::read_ini(in, doc.tree_);
    } catch (const boost::property_tree::ini_parser_error& e) {
      fail(ErrorKind::config, str_cat("line ", e.line(), ": ", e.message()));
    }
    return doc;
  }

  const std::filesystem::path& path() const { return path_; }

  /// Directory that relative paths in the document resolve against.
  std::filesystem::path base_dir() const {
    return path_.empty() ? std::filesystem::current_path() : path_.parent_path();
  }

  std::vector<std::string> section_names() const {
    std::vector<std::string> names;
    for (const auto& [name, child] : tree_) names.push_back(name);
    return names;
  }

  /// Section by name; absent sections read as empty.
  Section section(const std::string& name) const {
    for (const auto& [k, child] : tree_)
      if (k == name) return Section(name, child);
    return Section(name, empty_);
  }

  void check_sections(const std::set<std::string>& fixed,
                      const std::vector<std::string>& prefixes) const {
    for (const auto& name : section_names()) {
      if (fixed.count(name)) continue;
      bool ok = false;
      for (const auto& p : prefixes) ok |= name.rfind(p, 0) == 0 && name.size() > p.size();
      if (!ok) fail(ErrorKind::config, str_cat("unknown section [", name, "]"));
    }
  }

private:
  std::filesystem::path path_;
  boost::property_tree::ptree tree_;
  boost::property_tree::ptree empty_;
};

struct Rect {
  std::size_t x0 = 0, y0 = 0, w = 0, h = 0;
};

/// "x y w h; x y w h; ..."
inline std::vector<Rect> parse_rects(Section& sec, const std::string& key) {
  std::vector<Rect> rects;
  const auto t = sec.text(key);
  if (!t) return rects;
  for (const auto& item : detail::split(*t, ';')) {
    std::istringstream is(item);
    long v[4];
    std::string extra;
    if (!(is >> v[0] >> v[1] >> v[2] >> v[3]) || (is >> extra))
      fail(ErrorKind::config, str_cat(sec.where(key), ": expected 'x y w h', got '", item, "'"));
    for (long x : v)
      if (x < 0) fail(ErrorKind::config, str_cat(sec.where(key), ": negative value in '", item, "'"));
    if (v[2] == 0 || v[3] == 0)
      fail(ErrorKind::config, str_cat(sec.where(key), ": empty rectangle '", item, "'"));
    rects.push_back({static_cast<std::size_t>(v[0]), static_cast<std::size_t>(v[1]),
                     static_cast<std::size_t>(v[2]), static_cast<std::size_t>(v[3])});
  }
  return rects;
}

// ---------------------------------------------------------------------------
// Scene configuration

struct SimulationConfig {
  SceneSpec scene;
  double sample_rate_hz = 64000;
  std::size_t nt = 4096;
  bool interferograms = false;
  InterferogramSpec interferogram;
  std::string stack_name = "stack.rcldh";
  std::string interferogram_name = "interferograms.rcldh";
  nlohmann::json echo;  // every effective parameter, for the manifest
};

inline nlohmann::json scene_to_json(const SimulationConfig& c) {
  nlohmann::json j;
  const auto& s = c.scene;
  j["nx"] = s.nx;
  j["ny"] = s.ny;
  j["nt"] = c.nt;
  j["sample_rate_hz"] = c.sample_rate_hz;
  j["heart_rate_hz"] = s.heart_rate_hz;
  j["tau_ratio"] = s.tau_ratio;
  j["noise_snr_db"] = s.noise_snr_db ? nlohmann::json(*s.noise_snr_db) : nlohmann::json("none");
  j["seed"] = s.seed;
  j["wavelength_m"] = s.wavelength_m;
  j["pixel_pitch_m"] = s.pixel_pitch_m;
  for (std::size_t i = 0; i < kRegionCount; ++i) {
    const auto& p = s.regions[i];
    j["regions"][kRegionNames[i]] = {
        {"tau_c_s", std::isfinite(p.tau_c_s) ? nlohmann::json(p.tau_c_s) : nlohmann::json("inf")},
        {"pulsatility", p.pulsatility},
        {"phase_lag_cycles", p.phase_lag_cycles},
        {"reflectivity", p.reflectivity}};
  }
  j["bulk_motion"] = {{"amplitude_rad", s.bulk.amplitude_rad},
                      {"frequency_hz", s.bulk.frequency_hz},
                      {"harmonics", s.bulk.harmonics}};
  j["interferogram"] = {{"enabled", c.interferograms},
                        {"carrier_kx", c.interferogram.carrier.kx_cyc_per_px},
                        {"carrier_ky", c.interferogram.carrier.ky_cyc_per_px},
                        {"halfwidth", c.interferogram.carrier.halfwidth_cyc_per_px},
                        {"ref_amplitude", c.interferogram.ref_amplitude},
                        {"pupil_radius", c.interferogram.pupil_radius_cyc_per_px},
                        {"defocus_m", c.interferogram.defocus_m}};
  return j;
}

/// Scene file layout:
///   [scene]          nx ny nt sample_rate_hz heart_rate_hz tau_ratio
///                    noise_snr_db (number | none) seed wavelength_m
///                    pixel_pitch_m preset (default | uniform | blank)
///   [region.<name>]  linewidth_hz | tau_c_s, pulsatility, phase_lag_cycles,
///                    reflectivity, rects = "x y w h; ..."
///   [bulk_motion]    amplitude_rad frequency_hz harmonics
///   [interferogram]  enabled carrier_kx carrier_ky halfwidth ref_amplitude
///                    pupil_radius defocus_m
///   [output]         stack interferograms
inline SimulationConfig parse_simulation_config(const IniDocument& doc,
                                                std::optional<std::uint64_t> seed_override = {}) {
  doc.check_sections({"scene", "bulk_motion", "interferogram", "output"}, {"region."});
  SimulationConfig cfg;
  Section sc = doc.section("scene");
  const auto nx = sc.count("nx", 64);
  const auto ny = sc.count("ny", 64);
  if (nx < 1 || ny < 1) fail(ErrorKind::config, "[scene] nx and ny must be >= 1");
  const std::string preset = sc.text("preset", "default");
  if (preset == "default")
    cfg.scene = default_scene(nx, ny);
  else if (preset == "uniform")
    cfg.scene = uniform_scene(nx, ny);
  else if (preset == "blank") {
    cfg.scene = default_scene(nx, ny);
    cfg.scene.labels = Grid2<std::uint8_t>(ny, nx, 0);
  } else {
    fail(ErrorKind::config, str_cat("[scene] preset: unknown preset '", preset,
                                    "' (default, uniform, blank)"));
  }
  auto& s = cfg.scene;
  cfg.nt = sc.count("nt", 4096);
  cfg.sample_rate_hz = sc.number("sample_rate_hz", 64000);
  s.heart_rate_hz = sc.number("heart_rate_hz", s.heart_rate_hz);
  s.tau_ratio = sc.number("tau_ratio", s.tau_ratio);
  if (auto snr = sc.text("noise_snr_db")) {
    if (detail::lower(*snr) == "none")
      s.noise_snr_db.reset();
    else
      s.noise_snr_db = sc.parse_number("noise_snr_db", *snr);
  }
  s.seed = sc.count("seed", s.seed);
  if (seed_override) s.seed = *seed_override;
  s.wavelength_m = sc.number("wavelength_m", s.wavelength_m);
  s.pixel_pitch_m = sc.number("pixel_pitch_m", s.pixel_pitch_m);
  sc.check_unused();
  if (cfg.nt < 1) fail(ErrorKind::config, "[scene] nt must be >= 1");
  if (!(cfg.sample_rate_hz > 0)) fail(ErrorKind::config, "[scene] sample_rate_hz must be > 0");

  for (const auto& name : doc.section_names()) {
    if (name.rfind("region.", 0) != 0) continue;
    const std::string rname = name.substr(7);
    const auto region = region_from_name(rname);
    if (!region)
      fail(ErrorKind::config, str_cat("unknown region [", name,
                                      "] (tissue, artery, vein, static, absorber)"));
    Section rs = doc.section(name);
    auto& p = s.params(*region);
    const bool has_lw = rs.has("linewidth_hz"), has_tau = rs.has("tau_c_s");
    if (has_lw && has_tau)
      fail(ErrorKind::config, str_cat("[", name, "] give either linewidth_hz or tau_c_s, not both"));
    if (has_lw) {
      const double lw = *rs.number("linewidth_hz");
      if (!(lw > 0)) fail(ErrorKind::config, str_cat(rs.where("linewidth_hz"), " must be > 0"));
      p.tau_c_s = tau_from_linewidth(lw);
    }
    if (has_tau) {
      const auto t = *rs.text("tau_c_s");
      p.tau_c_s = detail::lower(t) == "inf" ? std::numeric_limits<double>::infinity()
                                            : rs.parse_number("tau_c_s", t);
      if (!(p.tau_c_s > 0)) fail(ErrorKind::config, str_cat(rs.where("tau_c_s"), " must be > 0"));
    }
    p.pulsatility = rs.number("pulsatility", p.pulsatility);
    if (!(p.pulsatility >= 0 && p.pulsatility < 1))
      fail(ErrorKind::config, str_cat(rs.where("pulsatility"), " = ", p.pulsatility,
                                      ": pulsatility must lie in [0, 1)"));
    p.phase_lag_cycles = rs.number("phase_lag_cycles", p.phase_lag_cycles);
    p.reflectivity = rs.number("reflectivity", p.reflectivity);
    if (!(p.reflectivity >= 0))
      fail(ErrorKind::config, str_cat(rs.where("reflectivity"), " must be >= 0"));
    for (const auto& r : parse_rects(rs, "rects")) s.paint(*region, r.x0, r.y0, r.w, r.h);
    rs.check_unused();
  }

  Section bm = doc.section("bulk_motion");
  s.bulk.amplitude_rad = bm.number("amplitude_rad", 0);
  s.bulk.frequency_hz = bm.number("frequency_hz", 0);
  s.bulk.harmonics = static_cast<unsigned>(bm.count("harmonics", 1));
  bm.check_unused();
  if (s.bulk.harmonics < 1) fail(ErrorKind::config, "[bulk_motion] harmonics must be >= 1");
  if (!(s.bulk.frequency_hz >= 0)) fail(ErrorKind::config, "[bulk_motion] frequency_hz must be >= 0");

  Section ig = doc.section("interferogram");
  cfg.interferograms = ig.flag("enabled", false);
  auto& is = cfg.interferogram;
  is.carrier.kx_cyc_per_px = ig.number("carrier_kx", is.carrier.kx_cyc_per_px);
  is.carrier.ky_cyc_per_px = ig.number("carrier_ky", is.carrier.ky_cyc_per_px);
  is.carrier.halfwidth_cyc_per_px = ig.number("halfwidth", is.carrier.halfwidth_cyc_per_px);
  is.ref_amplitude = ig.number("ref_amplitude", is.ref_amplitude);
  is.pupil_radius_cyc_per_px = ig.number("pupil_radius", is.pupil_radius_cyc_per_px);
  is.defocus_m = ig.number("defocus_m", is.defocus_m);
  ig.check_unused();
  if (cfg.interferograms) {
    is.carrier.validate();
    if (!(is.ref_amplitude > 0)) fail(ErrorKind::config, "[interferogram] ref_amplitude must be > 0");
    if (!(is.pupil_radius_cyc_per_px > 0))
      fail(ErrorKind::config, "[interferogram] pupil_radius must be > 0");
  }

  Section out = doc.section("output");
  cfg.stack_name = out.text("stack", cfg.stack_name);
  cfg.interferogram_name = out.text("interferograms", cfg.interferogram_name);
  out.check_unused();

  s.validate();
  cfg.echo = scene_to_json(cfg);
  return cfg;
}

// ---------------------------------------------------------------------------
// Pipeline configuration

/// Named frequency ranges in Hz; f_high = 0 stands for Nyquist.
struct BandPreset {
  const char* name;
  double f_low_hz;
  double f_high_hz;
  bool rc;
};

inline constexpr BandPreset kBandPresets[] = {
    {"low", 200, 1000, true},  {"low_wide", 200, 4000, true}, {"slow", 1000, 6000, false},
    {"slow_low", 1000, 4000, false}, {"high", 6000, 0, false}, {"full", 0, 0, false},
};

struct RoiSource {
  std::string name;
  std::vector<Rect> rects;
  std::optional<Region> label;  // from ground truth
};

struct CompositeSpec {
  std::string name;
  std::string slow_band;
  std::string fast_band;
  bool fast_rc = false;
};

struct PipelineConfig {
  std::filesystem::path input;
  std::optional<std::filesystem::path> truth;  // ground-truth JSON for label ROIs
  bool reconstruct_carrier_given = false;
  CarrierSpec carrier;
  double propagation_distance_m = 0;
  PropagationOptions propagation;
  StftPlan plan;
  bool svd_enabled = true;
  SvdFilterSpec svd;
  std::vector<std::string> preset_names;  // requested presets (empty: all)
  std::vector<std::pair<std::string, std::pair<double, std::optional<double>>>> custom_bands;
  std::set<std::string> rc_bands;
  Corrections corrections;
  bool cov_maps = true;
  RenderSpec render;
  bool write_frames = true;
  std::vector<RoiSource> rois;
  bool spectrogram_subtract_mean = true;
  double spectrogram_db_floor = -60;
  std::vector<CompositeSpec> composites;
  nlohmann::json echo;
};

inline std::optional<double> parse_band_edge(Section& sec, const std::string& key,
                                             const std::string& text) {
  if (detail::lower(text) == "nyquist") return std::nullopt;
  return sec.parse_number(key, text);
}

/// Pipeline file layout:
///   [input]        path truth
///   [reconstruct]  carrier_kx carrier_ky halfwidth distance_m pad_pow2
///   [stft]         n_win hop apodization (none | hann)
///   [svd]          enabled cutoff_hz rank_override
///   [bands]        presets = low, high, ...; rc = low, low_wide
///   [band.<name>]  f_low_hz f_high_hz (number | nyquist) rc
///   [corrections]  flat_field flat_field_sigma_px baseline baseline_percentile cov_maps
///   [render]       clip_lo_pct clip_hi_pct gamma write_frames
///   [roi.<name>]   rects = "x y w h; ..." | label = artery
///   [spectrogram]  subtract_mean db_floor
///   [composite.<name>] slow fast fast_rc
inline PipelineConfig parse_pipeline_config(const IniDocument& doc) {
  doc.check_sections({"input", "reconstruct", "stft", "svd", "bands", "corrections", "render",
                      "spectrogram"},
                     {"band.", "roi.", "composite."});
  PipelineConfig cfg;
  const auto base = doc.base_dir();
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
  };

  Section in = doc.section("input");
  const auto input = in.text("path");
  if (!input) fail(ErrorKind::config, "[input] path is required");
  cfg.input = resolve(*input);
  if (auto t = in.text("truth")) cfg.truth = resolve(*t);
  in.check_unused();

  Section rec = doc.section("reconstruct");
  cfg.reconstruct_carrier_given = rec.has("carrier_kx") || rec.has("carrier_ky");
  cfg.carrier.kx_cyc_per_px = rec.number("carrier_kx", cfg.carrier.kx_cyc_per_px);
  cfg.carrier.ky_cyc_per_px = rec.number("carrier_ky", cfg.carrier.ky_cyc_per_px);
  cfg.carrier.halfwidth_cyc_per_px = rec.number("halfwidth", cfg.carrier.halfwidth_cyc_per_px);
  cfg.propagation_distance_m = rec.number("distance_m", 0);
  cfg.propagation.pad_pow2 = rec.flag("pad_pow2", false);
  rec.check_unused();
  cfg.carrier.validate();

  Section st = doc.section("stft");
  cfg.plan.n_win = st.count("n_win", cfg.plan.n_win);
  cfg.plan.hop = st.count("hop", cfg.plan.hop);
  const std::string apod = st.text("apodization", "none");
  if (apod == "none")
    cfg.plan.apodization = Apodization::none;
  else if (apod == "hann")
    cfg.plan.apodization = Apodization::hann;
  else
    fail(ErrorKind::config, str_cat("[stft] apodization: expected none or hann, got '", apod, "'"));
  st.check_unused();

  Section sv = doc.section("svd");
  cfg.svd_enabled = sv.flag("enabled", true);
  cfg.svd.cutoff_hz = sv.number("cutoff_hz", cfg.svd.cutoff_hz);
  if (auto r = sv.count("rank_override")) cfg.svd.rank_override = *r;
  sv.check_unused();

  Section bands = doc.section("bands");
  if (auto p = bands.text("presets")) {
    for (const auto& name : detail::split(*p, ',')) {
      bool known = false;
      for (const auto& b : kBandPresets) known |= name == b.name;
      if (!known) fail(ErrorKind::config, str_cat("[bands] presets: unknown preset '", name, "'"));
      cfg.preset_names.push_back(name);
    }
  }
  std::optional<std::vector<std::string>> rc_list;
  if (auto r = bands.text("rc")) rc_list = detail::split(*r, ',');
  bands.check_unused();

  for (const auto& name : doc.section_names()) {
    if (name.rfind("band.", 0) != 0) continue;
    Section b = doc.section(name);
    const std::string bname = name.substr(5);
    const auto lo = b.text("f_low_hz");
    const auto hi = b.text("f_high_hz");
    if (!lo || !hi) fail(ErrorKind::config, str_cat("[", name, "] needs f_low_hz and f_high_hz"));
    const double f_lo = b.parse_number("f_low_hz", *lo);
    cfg.custom_bands.push_back({bname, {f_lo, parse_band_edge(b, "f_high_hz", *hi)}});
    if (b.flag("rc", false)) cfg.rc_bands.insert(bname);
    b.check_unused();
  }
  if (rc_list) {
    for (auto& n : *rc_list) cfg.rc_bands.insert(n);
  } else {
    for (const auto& b : kBandPresets)
      if (b.rc) cfg.rc_bands.insert(b.name);
  }

  Section cor = doc.section("corrections");
  cfg.corrections.flat_field = cor.flag("flat_field", true);
  if (auto s = cor.number("flat_field_sigma_px")) cfg.corrections.flat_field_sigma_px = *s;
  cfg.corrections.baseline = cor.flag("baseline", true);
  cfg.corrections.baseline_percentile = cor.number("baseline_percentile", 5);
  cfg.cov_maps = cor.flag("cov_maps", true);
  cor.check_unused();
  if (!(cfg.corrections.baseline_percentile >= 0 && cfg.corrections.baseline_percentile <= 100))
    fail(ErrorKind::config, "[corrections] baseline_percentile must lie in [0, 100]");

  Section rn = doc.section("render");
  cfg.render.clip_lo_pct = rn.number("clip_lo_pct", cfg.render.clip_lo_pct);
  cfg.render.clip_hi_pct = rn.number("clip_hi_pct", cfg.render.clip_hi_pct);
  cfg.render.gamma = rn.number("gamma", cfg.render.gamma);
  cfg.write_frames = rn.flag("write_frames", true);
  rn.check_unused();
  cfg.render.validate();

  std::set<std::string> roi_names;
  for (const auto& name : doc.section_names()) {
    if (name.rfind("roi.", 0) != 0) continue;
    Section r = doc.section(name);
    RoiSource roi;
    roi.name = name.substr(4);
    if (!roi_names.insert(roi.name).second)
      fail(ErrorKind::config, str_cat("duplicate ROI name '", roi.name, "'"));
    roi.rects = parse_rects(r, "rects");
    if (auto l = r.text("label")) {
      roi.label = region_from_name(*l);
      if (!roi.label)
        fail(ErrorKind::config, str_cat(r.where("label"), ": unknown region '", *l, "'"));
    }
    r.check_unused();
    if (roi.rects.empty() == !roi.label)
      fail(ErrorKind::config, str_cat("[", name, "] needs exactly one of rects or label"));
    cfg.rois.push_back(std::move(roi));
  }

  Section sg = doc.section("spectrogram");
  cfg.spectrogram_subtract_mean = sg.flag("subtract_mean", true);
  cfg.spectrogram_db_floor = sg.number("db_floor", -60);
  sg.check_unused();
  if (!(cfg.spectrogram_db_floor < 0)) fail(ErrorKind::config, "[spectrogram] db_floor must be < 0");

  for (const auto& name : doc.section_names()) {
    if (name.rfind("composite.", 0) != 0) continue;
    Section c = doc.section(name);
    CompositeSpec comp;
    comp.name = name.substr(10);
    const auto slow = c.text("slow");
    const auto fast = c.text("fast");
    if (!slow || !fast) fail(ErrorKind::config, str_cat("[", name, "] needs slow and fast"));
    comp.slow_band = *slow;
    comp.fast_band = *fast;
    comp.fast_rc = c.flag("fast_rc", false);
    c.check_unused();
    cfg.composites.push_back(std::move(comp));
  }
  return cfg;
}

/// Bands valid at `sample_rate_hz`. Presets that do not fit are skipped
/// (unless explicitly requested); custom bands must fit.
inline std::vector<NamedBand> resolve_bands(const PipelineConfig& cfg, double sample_rate_hz,
                                            std::vector<std::string>* skipped = nullptr) {
  const double nyq = sample_rate_hz / 2;
  std::vector<NamedBand> out;
  std::set<std::string> names;
  for (const auto& p : kBandPresets) {
    const bool requested =
        std::find(cfg.preset_names.begin(), cfg.preset_names.end(), p.name) !=
        cfg.preset_names.end();
    if (!cfg.preset_names.empty() && !requested) continue;
    const Band band{p.f_low_hz, p.f_high_hz == 0 ? nyq : p.f_high_hz};
    try {
      band.validate(sample_rate_hz);
    } catch (const Error& e) {
      if (requested) throw Error(ErrorKind::config, str_cat("band '", p.name, "': ", e.what()));
      if (skipped) skipped->push_back(p.name);
      continue;
    }
    out.push_back({p.name, band, cfg.rc_bands.count(p.name) > 0});
    names.insert(p.name);
  }
  for (const auto& [name, edges] : cfg.custom_bands) {
    const Band band{edges.first, edges.second.value_or(nyq)};
    try {
      band.validate(sample_rate_hz);
    } catch (const Error& e) {
      throw Error(ErrorKind::config, str_cat("band '", name, "': ", e.what()));
    }
    if (!names.insert(name).second)
      fail(ErrorKind::config, str_cat("duplicate band name '", name, "'"));
    out.push_back({name, band, cfg.rc_bands.count(name) > 0});
  }
  for (const auto& rc : cfg.rc_bands)
    if (!names.count(rc) && cfg.custom_bands.end() ==
                                std::find_if(cfg.custom_bands.begin(), cfg.custom_bands.end(),
                                             [&](const auto& b) { return b.first == rc; })) {
      bool preset = false;
      for (const auto& p : kBandPresets) preset |= rc == p.name;
      if (!preset) fail(ErrorKind::config, str_cat("[bands] rc: unknown band '", rc, "'"));
    }
  if (out.empty()) fail(ErrorKind::config, "no band is valid for this sample rate");
  return out;
}

}  // namespace rcldh

#endif  // RCLDH_CONFIG_HPP
