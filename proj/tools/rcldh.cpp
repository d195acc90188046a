// rcldh: simulate, process and render laser Doppler holography stacks.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "rcldh/artifact_io.hpp"
#include "rcldh/config.hpp"
#include "rcldh/rcldh.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace rcldh;

namespace {

struct Common {
  std::string config;
  std::string out = "out";
  unsigned threads = 0;
  std::optional<std::uint64_t> seed;
};

json band_json(const Band& b) { return json::array({b.f_low_hz, b.f_high_hz}); }

fs::path prepare_out(const std::string& dir) {
  fs::path out(dir);
  fs::create_directories(out);
  return out;
}

json common_echo(const Common& c) {
  json j = {{"config", c.config}, {"out", c.out}, {"threads", c.threads}};
  j["seed_override"] = c.seed ? json(*c.seed) : json(nullptr);
  return j;
}

// ---------------------------------------------------------------------------
// simulate

int cmd_simulate(const Common& c) {
  const auto cfg = parse_simulation_config(IniDocument::load(c.config), c.seed);
  const fs::path out = prepare_out(c.out);
  Manifest manifest(out);

  std::cerr << "simulating " << cfg.scene.nx << "x" << cfg.scene.ny << " x " << cfg.nt
            << " frames at " << cfg.sample_rate_hz << " Hz\n";
  const auto sim = gen_field_stack(cfg.scene, cfg.sample_rate_hz, cfg.nt);
  const fs::path stack_path = out / cfg.stack_name;
  write_stack(sim.stack, stack_path);
  manifest.add(stack_path, "hologram_stack", cfg.echo);
  manifest.add(fs::path(detail::sidecar_path(stack_path)), "stack_sidecar");

  if (cfg.interferograms) {
    const FrameStack frames = simulate_interferograms(sim.stack, cfg.interferogram);
    const fs::path ipath = out / cfg.interferogram_name;
    write_stack(frames, ipath);
    manifest.add(ipath, "interferogram_stack", cfg.echo.at("interferogram"));
    manifest.add(fs::path(detail::sidecar_path(ipath)), "stack_sidecar");
  }
  manifest.add_all(write_ground_truth(sim.truth, stack_path), "ground_truth");
  manifest.write("simulate", {{"cli", common_echo(c)}, {"scene", cfg.echo}});
  std::cout << stack_path.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// process

HologramStack load_holograms(const PipelineConfig& cfg) {
  AnyStack any = read_stack(cfg.input);
  if (auto* frames = std::get_if<FrameStack>(&any)) {
    std::cerr << "reconstructing " << frames->meta.nt << " interferograms\n";
    try {
      return reconstruct_stack(*frames, cfg.carrier, cfg.propagation_distance_m, cfg.propagation);
    } catch (const Error& e) {
      throw Error(e.kind(), str_cat("stage reconstruct: ", e.what()));
    }
  }
  auto holo = std::get<HologramStack>(std::move(any));
  if (cfg.propagation_distance_m != 0) {
    parallel_for(holo.meta.nt, [&](std::size_t t) {
      store_frame(holo, t,
                  angular_spectrum_propagate(frame_image(holo, t), cfg.propagation_distance_m,
                                             holo.meta.wavelength_m, holo.meta.pixel_pitch_m,
                                             cfg.propagation));
    });
  }
  return holo;
}

std::optional<fs::path> truth_path(const PipelineConfig& cfg) {
  if (cfg.truth) return cfg.truth;
  fs::path guess = cfg.input.string() + ".truth.json";
  if (fs::exists(guess)) return guess;
  return std::nullopt;
}

std::vector<NamedRoi> build_rois(const PipelineConfig& cfg, std::size_t ny, std::size_t nx,
                                 json& echo) {
  std::optional<Grid2<std::uint8_t>> labels;
  const auto tp = truth_path(cfg);
  auto need_labels = [&]() -> const Grid2<std::uint8_t>& {
    if (!labels) {
      if (!tp) fail(ErrorKind::config, "label ROIs need ground truth ([input] truth)");
      labels = read_truth_labels(*tp);
      if (labels->ny != ny || labels->nx != nx)
        fail(ErrorKind::data, "ground-truth label map does not match the stack frame size");
    }
    return *labels;
  };
  auto from_label = [&](Region r) {
    const auto& l = need_labels();
    RoiMask m{Grid2<std::uint8_t>(ny, nx, 0)};
    for (std::size_t i = 0; i < l.size(); ++i) m.mask.data[i] = l.data[i] == static_cast<std::uint8_t>(r);
    return m;
  };

  std::vector<NamedRoi> rois;
  if (cfg.rois.empty() && tp) {
    for (Region r : {Region::artery, Region::vein, Region::tissue}) {
      RoiMask m = from_label(r);
      if (m.count() == 0) continue;
      rois.push_back({region_name(r), std::move(m)});
      echo[region_name(r)] = {{"label", region_name(r)}, {"pixels", rois.back().mask.count()}};
    }
    return rois;
  }
  for (const auto& src : cfg.rois) {
    RoiMask m{Grid2<std::uint8_t>(ny, nx, 0)};
    json rects = json::array();
    if (src.label) {
      m = from_label(*src.label);
    } else {
      for (const auto& r : src.rects) {
        if (r.x0 + r.w > nx || r.y0 + r.h > ny)
          fail(ErrorKind::config, str_cat("[roi.", src.name, "] rectangle ", r.x0, " ", r.y0, " ",
                                          r.w, " ", r.h, " leaves the ", nx, "x", ny, " frame"));
        const RoiMask rect = RoiMask::rect(ny, nx, r.x0, r.y0, r.w, r.h);
        for (std::size_t i = 0; i < m.mask.size(); ++i) m.mask.data[i] |= rect.mask.data[i];
        rects.push_back({r.x0, r.y0, r.w, r.h});
      }
    }
    if (m.count() == 0) fail(ErrorKind::config, str_cat("ROI '", src.name, "' is empty"));
    echo[src.name] = {{"pixels", m.count()}};
    if (src.label) echo[src.name]["label"] = region_name(*src.label);
    else echo[src.name]["rects"] = rects;
    rois.push_back({src.name, std::move(m)});
  }
  return rois;
}

json pipeline_echo(const PipelineConfig& cfg, const std::vector<NamedBand>& bands,
                   const std::vector<std::string>& skipped, std::size_t rank,
                   const StackMeta& meta) {
  json j;
  j["input"] = cfg.input.string();
  j["input_meta"] = {{"nx", meta.nx},
                     {"ny", meta.ny},
                     {"nt", meta.nt},
                     {"sample_rate_hz", meta.sample_rate_hz},
                     {"exposure_s", meta.exposure_s},
                     {"origin_tag", meta.origin_tag}};
  j["reconstruct"] = {{"carrier_kx", cfg.carrier.kx_cyc_per_px},
                      {"carrier_ky", cfg.carrier.ky_cyc_per_px},
                      {"halfwidth", cfg.carrier.halfwidth_cyc_per_px},
                      {"distance_m", cfg.propagation_distance_m},
                      {"pad_pow2", cfg.propagation.pad_pow2}};
  j["stft"] = {{"n_win", cfg.plan.n_win},
               {"hop", cfg.plan.hop},
               {"apodization", cfg.plan.apodization == Apodization::hann ? "hann" : "none"}};
  j["svd"] = {{"enabled", cfg.svd_enabled}, {"cutoff_hz", cfg.svd.cutoff_hz}, {"rank", rank}};
  if (cfg.svd.rank_override) j["svd"]["rank_override"] = *cfg.svd.rank_override;
  for (const auto& b : bands) j["bands"][b.name] = {{"hz", band_json(b.band)}, {"rc", b.rc}};
  j["skipped_presets"] = skipped;
  j["corrections"] = {{"flat_field", cfg.corrections.flat_field},
                      {"baseline", cfg.corrections.baseline},
                      {"baseline_percentile", cfg.corrections.baseline_percentile},
                      {"cov_maps", cfg.cov_maps}};
  if (cfg.corrections.flat_field)
    j["corrections"]["flat_field_sigma_px"] =
        cfg.corrections.flat_field_sigma_px.value_or(static_cast<double>(meta.nx) / 8.0);
  j["render"] = {{"clip_lo_pct", cfg.render.clip_lo_pct},
                 {"clip_hi_pct", cfg.render.clip_hi_pct},
                 {"gamma", cfg.render.gamma},
                 {"write_frames", cfg.write_frames}};
  j["spectrogram"] = {{"subtract_mean", cfg.spectrogram_subtract_mean},
                      {"db_floor", cfg.spectrogram_db_floor}};
  return j;
}

std::vector<fs::path> render_movie(const PowerDopplerMovie& movie, const fs::path& dir,
                                   const std::string& prefix, const RenderSpec& render) {
  std::vector<GrayImage> frames;
  for (std::size_t m = 0; m < movie.n; ++m) frames.push_back(to_grayscale(movie.frame_image(m), render));
  return write_image_sequence(frames, movie_times(movie), dir, prefix);
}

int cmd_process(const Common& c) {
  const auto cfg = parse_pipeline_config(IniDocument::load(c.config));
  const fs::path out = prepare_out(c.out);
  Manifest manifest(out);

  const HologramStack stack = load_holograms(cfg);
  const double fs_hz = stack.meta.sample_rate_hz;
  std::vector<std::string> skipped;
  const auto bands = resolve_bands(cfg, fs_hz, &skipped);
  for (const auto& comp : cfg.composites)
    for (const auto& name : {comp.slow_band, comp.fast_band})
      if (std::none_of(bands.begin(), bands.end(), [&](const auto& b) { return b.name == name; }))
        fail(ErrorKind::config, str_cat("[composite.", comp.name, "] band '", name,
                                        "' is not available at ", fs_hz, " Hz"));

  json roi_echo = json::object();
  const auto rois = build_rois(cfg, stack.meta.ny, stack.meta.nx, roi_echo);

  WindowSpec spec;
  spec.plan = cfg.plan;
  spec.svd_enabled = cfg.svd_enabled;
  spec.svd = cfg.svd;
  spec.bands = bands;
  spec.spectrogram_rois = rois;
  spec.spectrogram_subtract_mean = cfg.spectrogram_subtract_mean;
  std::cerr << "processing " << spec.plan.window_count(stack.meta.nt) << " windows, "
            << bands.size() << " bands\n";
  const WindowOutputs res = process_windows(stack, spec);

  json echo = pipeline_echo(cfg, bands, skipped, res.svd_rank, stack.meta);
  echo["rois"] = roi_echo;

  std::map<std::string, RealImage> mean_images;  // per band, after corrections
  for (std::size_t b = 0; b < bands.size(); ++b) {
    const auto& nb = bands[b];
    const json params = {{"band", nb.name}, {"band_hz", band_json(nb.band)}};
    PowerDopplerMovie movie;
    try {
      if (cfg.cov_maps && res.movies[b].n >= 2) {
        Corrections ff = cfg.corrections;
        ff.baseline = false;
        const RealImage cov = cov_map(apply_corrections(res.movies[b], ff));
        const fs::path raw = out / ("cov_" + nb.name + ".f32");
        write_image_f32(cov, raw, params);
        manifest.add_all({raw, json_sidecar(raw)}, "cov_map", params);
        const fs::path pgm = out / ("cov_" + nb.name + ".pgm");
        write_pgm(to_grayscale(cov, cfg.render), pgm);
        manifest.add(pgm, "cov_image", params);
      }
      movie = apply_corrections(res.movies[b], cfg.corrections);
    } catch (const Error& e) {
      throw Error(e.kind(), str_cat("stage corrections, band '", nb.name, "': ", e.what()));
    }
    const json corr = {{"flat_field", cfg.corrections.flat_field},
                       {"baseline", cfg.corrections.baseline}};

    std::vector<std::pair<std::string, PowerDopplerMovie>> variants{{nb.name, movie}};
    if (nb.rc) variants.push_back({nb.name + "_rc", reverse_contrast(movie)});
    for (const auto& [name, mv] : variants) {
      json vparams = params;
      vparams["rc"] = mv.rc_flag;
      vparams["corrections"] = corr;
      manifest.add_all(write_movie(mv, out / ("movie_" + name + ".f32"), {{"corrections", corr}}),
                       "power_doppler_movie", vparams);
      const RealImage mean = temporal_mean(mv);
      mean_images[name] = mean;
      const fs::path pgm = out / ("mean_" + name + ".pgm");
      write_pgm(to_grayscale(mean, cfg.render), pgm);
      manifest.add(pgm, "mean_image", vparams);
      if (cfg.write_frames)
        manifest.add_all(render_movie(mv, out / ("frames_" + name), name, cfg.render),
                         "frame_sequence", vparams);
      for (const auto& roi : rois) {
        const fs::path csv = out / ("trace_" + roi.name + "_" + name + ".csv");
        write_trace_csv(csv, movie_times(mv), roi_trace(mv, roi.mask));
        json tparams = vparams;
        tparams["roi"] = roi.name;
        manifest.add(csv, "trace", tparams);
      }
      const auto artery = std::find_if(rois.begin(), rois.end(), [](auto& r) { return r.name == "artery"; });
      const auto vein = std::find_if(rois.begin(), rois.end(), [](auto& r) { return r.name == "vein"; });
      if (artery != rois.end() && vein != rois.end()) {
        const auto a = roi_trace(mv, artery->mask);
        if (pstdev_of(a) > 0) {
          const auto pair = normalize_trace_pair(a, roi_trace(mv, vein->mask), movie_times(mv));
          for (const auto& [rn, series] : {std::pair{"artery", &pair.artery}, std::pair{"vein", &pair.vein}}) {
            const fs::path csv = out / (std::string("trace_norm_") + rn + "_" + name + ".csv");
            write_trace_csv(csv, pair.t_s, *series);
            json tparams = vparams;
            tparams["roi"] = rn;
            tparams["normalized_by"] = "artery mean and population std";
            manifest.add(csv, "normalized_trace", tparams);
          }
        }
      }
    }
  }

  for (std::size_t r = 0; r < rois.size(); ++r) {
    const json params = {{"roi", rois[r].name}, {"residual", res.spectrograms[r].residual}};
    manifest.add_all(write_spectrogram(res.spectrograms[r], out / ("spectrogram_" + rois[r].name),
                                       cfg.spectrogram_db_floor, cfg.render),
                     "spectrogram", params);
  }

  for (const auto& comp : cfg.composites) {
    const RealImage& slow = mean_images.at(comp.slow_band);
    RealImage fast = mean_images.at(comp.fast_band);
    if (comp.fast_rc)
      for (auto& v : fast.data) v = -v;
    const fs::path ppm = out / ("composite_" + comp.name + ".ppm");
    write_ppm(compose_low_high(slow, fast, cfg.render), ppm);
    manifest.add(ppm, "composite",
                 {{"slow", comp.slow_band}, {"fast", comp.fast_band}, {"fast_rc", comp.fast_rc}});
  }

  manifest.write("process", {{"cli", common_echo(c)}, {"pipeline", echo}});
  std::cout << (out / "manifest.json").string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// compare-rates

struct CompareOptions {
  double fast_rate_hz = 64000;
  std::size_t factor = 8;
  std::size_t n_win = 128;
  std::size_t hop = 32;
  double threshold = 0.9;
};

int cmd_compare_rates(const Common& c, const CompareOptions& o) {
  auto cfg = parse_simulation_config(IniDocument::load(c.config), c.seed);
  cfg.sample_rate_hz = o.fast_rate_hz;
  if (!(o.fast_rate_hz > 0)) fail(ErrorKind::config, "--fast-rate must be > 0");
  if (o.factor < 1 || cfg.nt % o.factor != 0)
    fail(ErrorKind::config, str_cat("--factor ", o.factor, " must divide nt=", cfg.nt));
  if (o.n_win % o.factor != 0 || o.hop % o.factor != 0)
    fail(ErrorKind::config, str_cat("--n-win ", o.n_win, " and --hop ", o.hop,
                                    " must be multiples of --factor ", o.factor));
  const fs::path out = prepare_out(c.out);
  Manifest manifest(out);

  const auto sim = gen_field_stack(cfg.scene, cfg.sample_rate_hz, cfg.nt);
  const HologramStack slow = integrate_decimate(sim.stack, o.factor);
  const double slow_fs = slow.meta.sample_rate_hz;

  const Band high{6000, o.fast_rate_hz / 2};
  const Band rc_band{200, std::min(4000.0, slow_fs / 2)};
  high.validate(o.fast_rate_hz);
  rc_band.validate(slow_fs);

  const Corrections corr;
  WindowSpec full;
  full.plan = StftPlan{o.n_win, o.hop};
  full.bands = {{"high", high, false}};
  const auto ref = apply_corrections(process_windows(sim.stack, full).movies[0], corr);
  WindowSpec low;
  low.plan = StftPlan{o.n_win / o.factor, o.hop / o.factor};
  low.bands = {{"low_wide", rc_band, true}};
  const auto rc = reverse_contrast(apply_corrections(process_windows(slow, low).movies[0], corr));

  json report;
  report["fast_rate_hz"] = o.fast_rate_hz;
  report["slow_rate_hz"] = slow_fs;
  report["factor"] = o.factor;
  report["reference"] = {{"band_hz", band_json(high)}, {"n_win", o.n_win}, {"hop", o.hop}};
  report["recovered"] = {{"band_hz", band_json(rc_band)},
                         {"rc", true},
                         {"n_win", low.plan.n_win},
                         {"hop", low.plan.hop}};
  report["threshold"] = o.threshold;
  bool pass = true;
  for (Region r : {Region::artery, Region::vein}) {
    const auto mask = sim.truth.region_mask(r);
    if (mask.count() == 0) continue;
    const auto a = roi_trace(ref, mask);
    const auto b = roi_trace(rc, mask);
    const std::string name = region_name(r);
    const auto t = movie_times(ref);
    if (pstdev_of(a) > 0 && pstdev_of(b) > 0) {
      const auto na = normalize_trace_pair(a, a, t).artery;
      const auto nb = normalize_trace_pair(b, b, t).artery;
      const fs::path pa = out / ("trace_" + name + "_fullrate_high.csv");
      const fs::path pb = out / ("trace_" + name + "_lowrate_rc.csv");
      write_trace_csv(pa, t, na);
      write_trace_csv(pb, t, nb);
      manifest.add(pa, "normalized_trace", {{"roi", name}, {"band_hz", band_json(high)}});
      manifest.add(pb, "normalized_trace", {{"roi", name}, {"band_hz", band_json(rc_band)}, {"rc", true}});
    }
    const double corr_ab = pearson(a, b);
    report["pearson"][name] = corr_ab;
    if (r == Region::artery) pass = corr_ab > o.threshold;
  }
  if (!report.contains("pearson") || !report["pearson"].contains("artery"))
    fail(ErrorKind::data, "scene has no artery region to compare");
  report["pass"] = pass;
  const fs::path rp = out / "report.json";
  write_json(rp, report);
  manifest.add(rp, "report");
  manifest.write("compare-rates", {{"cli", common_echo(c)},
                                   {"scene", cfg.echo},
                                   {"fast_rate_hz", o.fast_rate_hz},
                                   {"factor", o.factor},
                                   {"n_win", o.n_win},
                                   {"hop", o.hop},
                                   {"threshold", o.threshold}});
  std::cout << "artery pearson " << report["pearson"]["artery"].get<double>() << " -> "
            << (pass ? "PASS" : "FAIL") << " (threshold " << o.threshold << ")\n";
  return 0;
}

// ---------------------------------------------------------------------------
// render

/// Render file layout:
///   [render]            clip_lo_pct clip_hi_pct gamma
///   [movie.<name>]      path frames (default true) mean (default true) rc
///   [composite.<name>]  slow fast fast_rc
int cmd_render(const Common& c) {
  const IniDocument doc = IniDocument::load(c.config);
  doc.check_sections({"render"}, {"movie.", "composite."});
  Section rs = doc.section("render");
  RenderSpec render;
  render.clip_lo_pct = rs.number("clip_lo_pct", render.clip_lo_pct);
  render.clip_hi_pct = rs.number("clip_hi_pct", render.clip_hi_pct);
  render.gamma = rs.number("gamma", render.gamma);
  rs.check_unused();
  render.validate();
  const json render_echo = {{"clip_lo_pct", render.clip_lo_pct},
                            {"clip_hi_pct", render.clip_hi_pct},
                            {"gamma", render.gamma}};

  const fs::path out = prepare_out(c.out);
  Manifest manifest(out);
  auto resolve = [&](const std::string& p) {
    fs::path path(p);
    return path.is_absolute() ? path : doc.base_dir() / path;
  };
  json echo = {{"render", render_echo}};
  std::size_t jobs = 0;
  for (const auto& name : doc.section_names()) {
    if (name.rfind("movie.", 0) == 0) {
      Section s = doc.section(name);
      const auto p = s.text("path");
      if (!p) fail(ErrorKind::config, str_cat("[", name, "] path is required"));
      const bool frames = s.flag("frames", true), mean = s.flag("mean", true), rc = s.flag("rc", false);
      s.check_unused();
      const std::string stem = name.substr(6);
      PowerDopplerMovie movie = read_movie(resolve(*p));
      if (rc) movie = reverse_contrast(std::move(movie));
      const json params = {{"source", resolve(*p).string()}, {"rc", movie.rc_flag}, {"render", render_echo}};
      if (frames) manifest.add_all(render_movie(movie, out / ("frames_" + stem), stem, render), "frame_sequence", params);
      if (mean) {
        const fs::path pgm = out / ("mean_" + stem + ".pgm");
        write_pgm(to_grayscale(temporal_mean(movie), render), pgm);
        manifest.add(pgm, "mean_image", params);
      }
      echo["movies"][stem] = params;
      ++jobs;
    } else if (name.rfind("composite.", 0) == 0) {
      Section s = doc.section(name);
      const auto slow = s.text("slow"), fast = s.text("fast");
      if (!slow || !fast) fail(ErrorKind::config, str_cat("[", name, "] needs slow and fast"));
      const bool fast_rc = s.flag("fast_rc", false);
      s.check_unused();
      const RealImage slow_img = temporal_mean(read_movie(resolve(*slow)));
      RealImage fast_img = temporal_mean(read_movie(resolve(*fast)));
      if (fast_rc)
        for (auto& v : fast_img.data) v = -v;
      const fs::path ppm = out / ("composite_" + name.substr(10) + ".ppm");
      write_ppm(compose_low_high(slow_img, fast_img, render), ppm);
      const json params = {{"slow", resolve(*slow).string()}, {"fast", resolve(*fast).string()},
                           {"fast_rc", fast_rc}, {"render", render_echo}};
      manifest.add(ppm, "composite", params);
      echo["composites"][name.substr(10)] = params;
      ++jobs;
    }
  }
  if (jobs == 0) fail(ErrorKind::config, "render config lists no [movie.*] or [composite.*] section");
  manifest.write("render", {{"cli", common_echo(c)}, {"render", echo}});
  std::cout << (out / "manifest.json").string() << "\n";
  return 0;
}

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::config: return 2;
    case ErrorKind::data: return 3;
    case ErrorKind::numerical: return 4;
  }
  return 3;
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "configuration file")->required();
  sub->add_option("--out", c.out, "output directory")->capture_default_str();
  sub->add_option("--threads", c.threads, "worker threads (0 = all cores)")->capture_default_str();
  sub->add_option("--seed", c.seed, "override the scene seed");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Laser Doppler holography: simulation, power Doppler processing, reverse contrast"};
  app.require_subcommand(1);
  Common common;
  CompareOptions compare;
  auto* sim = app.add_subcommand("simulate", "generate a synthetic hologram stack with ground truth");
  auto* proc = app.add_subcommand("process", "run the power Doppler pipeline on a stack");
  auto* cmp = app.add_subcommand("compare-rates",
                                 "full-rate high band vs decimated reverse-contrast low band");
  auto* ren = app.add_subcommand("render", "render movie dumps to image sequences and composites");
  for (auto* s : {sim, proc, cmp, ren}) add_common(s, common);
  cmp->add_option("--fast-rate", compare.fast_rate_hz, "simulation frame rate, Hz")->capture_default_str();
  cmp->add_option("--factor", compare.factor, "integration/decimation factor")->capture_default_str();
  cmp->add_option("--n-win", compare.n_win, "full-rate window length")->capture_default_str();
  cmp->add_option("--hop", compare.hop, "full-rate hop")->capture_default_str();
  cmp->add_option("--threshold", compare.threshold, "pass threshold on artery Pearson r")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    set_num_threads(common.threads);
    if (*sim) return cmd_simulate(common);
    if (*proc) return cmd_process(common);
    if (*cmp) return cmd_compare_rates(common, compare);
    if (*ren) return cmd_render(common);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
