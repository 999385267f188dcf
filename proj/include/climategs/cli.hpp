#pragma once

// Batch front-end. `run_cli` takes argv-style arguments so tools and tests
// share one entry point. Subcommands: render, style, snow-prep, bench, generate.

#include "climategs/service.hpp"
#include "climategs/synthetic.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iomanip>
#include <iostream>

namespace climategs {

struct BenchResult {
  std::size_t gaussians = 0;
  int width = 0;
  int height = 0;
  int runs = 0;
  FrameTimings median;
  double snow_preprocess_ms = 0.0;    // placement on the bench scene
  double plane_snow_preprocess_ms = 0.0;
  std::size_t water_pixels = 0;
  std::size_t snow_pixels = 0;
};

/// Climate settings used by the benchmark: every pass does real work.
inline ClimateParams bench_climate() {
  ClimateParams c;
  c.smog.density = 0.05;
  c.water.level = 0.25;
  GerstnerWave a, b;
  a.direction = Vec2(1.0, 0.0);
  a.wavelength = 3.0;
  a.steepness = 0.3;
  b.direction = Vec2(0.6, 0.8);
  b.wavelength = 1.3;
  b.steepness = 0.2;
  c.water.waves = {a, b};
  c.snow.thickness = 0.05;
  c.snow.grid_spacing = 0.1;
  return c;
}

inline double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline BenchResult run_benchmark(int gaussians, int width, int height, int runs, std::uint64_t seed = 1) {
  if (runs < 1) throw ParamError("runs", "must be >= 1");
  BenchResult r;
  const SyntheticScene synth = generate_synthetic_scene(synthetic_preset("bench", seed, gaussians));
  const GaussianScene& base = synth.scene();
  r.gaussians = base.size();
  r.width = width;
  r.height = height;
  r.runs = runs;
  const ClimateParams climate = bench_climate();

  Stopwatch prep;
  const auto snow = place_snow(base, climate.snow);
  r.snow_preprocess_ms = prep.elapsed_ms();
  {
    const SyntheticScene plane = generate_synthetic_scene(synthetic_preset("plane", seed));
    Stopwatch sw;
    SnowParams s = climate.snow;
    s.grid_spacing = 0.5;
    (void)place_snow(plane.scene(), s);
    r.plane_snow_preprocess_ms = sw.elapsed_ms();
  }

  const Camera cam = orbit_camera(base.bounds(), 30.0, 25.0, 1.2, width, height);
  PassSet passes;
  passes.snow = passes.flood = passes.smog = true;
  const GaussianScene prepared = prepare_scene(base, passes, nullptr, &snow);
  std::vector<double> raster, snow_ms, flood, smog, total;
  for (int i = 0; i < runs; ++i) {
    FrameTimings t;
    (void)render_frame(prepared, cam, climate, passes, 0.5, {}, &t);
    raster.push_back(t.raster_ms);
    snow_ms.push_back(t.snow_ms);
    flood.push_back(t.flood_ms);
    smog.push_back(t.smog_ms);
    total.push_back(t.total_ms);
  }
  r.median.raster_ms = median_of(raster);
  r.median.snow_ms = median_of(snow_ms);
  r.median.flood_ms = median_of(flood);
  r.median.smog_ms = median_of(smog);
  r.median.total_ms = median_of(total);

  const FrameBuffer fb = rasterize(prepared, cam);
  FloodReport report;
  (void)apply_flood(fb, cam, climate.water, 0.5, &report);
  r.water_pixels = report.water_pixels;
  for (const double w : fb.snow_weight) r.snow_pixels += w > 0.0 ? 1 : 0;
  return r;
}

namespace detail {

struct NamedCamera {
  std::string name;
  Camera camera;
};

inline std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

inline std::string two_digits(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%02zu", i);
  return buf;
}

inline std::vector<double> parse_numbers(const std::string& text, const std::string& field) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ParamError(field, "'" + item + "' is not a number");
    }
  }
  if (out.empty()) throw ParamError(field, "expected at least one number");
  return out;
}

inline std::pair<int, int> parse_resolution(const std::string& text) {
  const auto x = text.find('x');
  try {
    if (x == std::string::npos) throw std::invalid_argument(text);
    std::size_t a = 0, b = 0;
    const int w = std::stoi(text.substr(0, x), &a), h = std::stoi(text.substr(x + 1), &b);
    if (a != x || b != text.size() - x - 1 || w < 1 || h < 1 || w > 8192 || h > 8192)
      throw std::invalid_argument(text);
    return {w, h};
  } catch (const std::exception&) {
    throw ParamError("resolution", "expected WxH, got '" + text + "'");
  }
}

// Camera spec: "orbit:N[:elevation[:radius_scale]]", "pose:ex,ey,ez:tx,ty,tz[:fov]",
// or a path to a JSON camera document (one object or an array).
inline std::vector<NamedCamera> parse_cameras(const std::string& spec, const Bounds& bounds, int w, int h) {
  std::vector<NamedCamera> out;
  auto fields = [](const std::string& s) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    std::string p;
    while (std::getline(ss, p, ':')) parts.push_back(p);
    return parts;
  };
  if (spec.rfind("orbit:", 0) == 0) {
    const auto parts = fields(spec);
    if (parts.size() < 2 || parts.size() > 4) throw ParamError("camera", "expected orbit:N[:elevation[:radius_scale]]");
    const auto n = parse_numbers(parts[1], "camera");
    if (n.size() != 1 || n[0] < 1 || n[0] != std::floor(n[0])) throw ParamError("camera", "orbit count must be a positive integer");
    const double el = parts.size() > 2 ? parse_numbers(parts[2], "camera")[0] : 25.0;
    const double rs = parts.size() > 3 ? parse_numbers(parts[3], "camera")[0] : 1.2;
    for (std::size_t i = 0; i < std::size_t(n[0]); ++i) {
      const nlohmann::json doc = {{"azimuth", 360.0 * double(i) / n[0]}, {"elevation", el}, {"radius_scale", rs}};
      out.push_back({"orbit" + two_digits(i), camera_from_json(doc, bounds, w, h)});
    }
  } else if (spec.rfind("pose:", 0) == 0) {
    const auto parts = fields(spec);
    if (parts.size() < 3 || parts.size() > 4) throw ParamError("camera", "expected pose:ex,ey,ez:tx,ty,tz[:fov]");
    const auto e = parse_numbers(parts[1], "camera"), t = parse_numbers(parts[2], "camera");
    if (e.size() != 3 || t.size() != 3) throw ParamError("camera", "pose needs 3 eye and 3 target numbers");
    nlohmann::json doc = {{"eye", e}, {"target", t}};
    if (parts.size() == 4) doc["fov_y"] = parse_numbers(parts[3], "camera")[0];
    out.push_back({"pose00", camera_from_json(doc, bounds, w, h)});
  } else {
    std::ifstream in(spec);
    if (!in) throw ParamError("camera", "cannot open camera file '" + spec + "'");
    nlohmann::json doc;
    try {
      in >> doc;
    } catch (const nlohmann::json::exception& e) {
      throw ParamError("camera", std::string("camera file: ") + e.what());
    }
    if (doc.is_object()) doc = nlohmann::json::array({doc});
    if (!doc.is_array() || doc.empty()) throw ParamError("camera", "camera file must hold an object or a non-empty array");
    for (std::size_t i = 0; i < doc.size(); ++i) out.push_back({"cam" + two_digits(i), camera_from_json(doc[i], bounds, w, h)});
  }
  return out;
}

inline nlohmann::json read_json_file(const std::string& path, const std::string& field) {
  std::ifstream in(path);
  if (!in) throw ParamError(field, "cannot open '" + path + "'");
  try {
    nlohmann::json doc;
    in >> doc;
    return doc;
  } catch (const nlohmann::json::exception& e) {
    throw ParamError(field, "'" + path + "': " + e.what());
  }
}

inline std::string timing_line(const std::string& frame, const FrameTimings& t) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(3) << "frame=" << frame << " style_ms=" << t.style_ms
     << " raster_ms=" << t.raster_ms << " snow_ms=" << t.snow_ms << " flood_ms=" << t.flood_ms
     << " smog_ms=" << t.smog_ms << " total_ms=" << t.total_ms;
  return os.str();
}

inline std::string matrix_text(const Mat3& m) {
  std::ostringstream os;
  os << std::setprecision(6) << "[";
  for (int r = 0; r < 3; ++r) {
    os << (r ? "; " : "");
    for (int c = 0; c < 3; ++c) os << (c ? " " : "") << m(r, c);
  }
  os << "]";
  return os.str();
}

struct RenderJob {
  std::string scene;
  std::string camera = "orbit:1";
  std::string climate;
  std::string style;
  std::string transform;
  std::string out = ".";
  std::string sweep;
  std::string resolution = "640x360";
  std::string passes;
  bool passes_given = false;
  double time = 0.0;
};

inline void apply_config(RenderJob& job, const std::string& path) {
  const nlohmann::json doc = read_json_file(path, "config");
  if (!doc.is_object()) throw ParamError("config", "expected an object");
  for (const auto& [k, v] : doc.items()) {
    auto str = [&] {
      if (!v.is_string()) throw ParamError("config." + k, "expected a string");
      return v.get<std::string>();
    };
    if (k == "scene") job.scene = str();
    else if (k == "camera") job.camera = str();
    else if (k == "climate") job.climate = str();
    else if (k == "style") job.style = str();
    else if (k == "transform") job.transform = str();
    else if (k == "out") job.out = str();
    else if (k == "resolution") job.resolution = str();
    else if (k == "passes") {
      job.passes = str();
      job.passes_given = true;
    } else if (k == "time") {
      if (!v.is_number()) throw ParamError("config.time", "expected a number");
      job.time = v.get<double>();
    } else if (k == "sweep") {
      if (!v.is_object() || !v.contains("name") || !v.contains("values") || !v["name"].is_string() ||
          !v["values"].is_array())
        throw ParamError("config.sweep", "expected {\"name\": string, \"values\": [numbers]}");
      std::string s = v["name"].get<std::string>() + "=";
      for (std::size_t i = 0; i < v["values"].size(); ++i) {
        if (!v["values"][i].is_number()) throw ParamError("config.sweep", "values must be numbers");
        s += (i ? "," : "") + format_value(v["values"][i].get<double>());
      }
      job.sweep = s;
    } else {
      throw ParamError("config." + k, "unknown key");
    }
  }
}

struct PlannedImage {
  std::string file;
  std::string frame;
  std::size_t camera;
  std::size_t variant;
};

inline int cmd_render(const RenderJob& job, std::ostream& out) {
  if (job.scene.empty()) throw ParamError("scene", "required");
  if (!(job.time >= 0.0)) throw ParamError("time", "must be >= 0");
  if (!job.style.empty() && !job.transform.empty()) throw ParamError("style", "give --style or --transform, not both");

  // Validate and prepare everything before any file is written.
  const GaussianScene base = load_scene(job.scene);
  std::vector<std::pair<int, int>> resolutions;
  {
    std::stringstream ss(job.resolution);
    std::string item;
    while (std::getline(ss, item, ',')) resolutions.push_back(parse_resolution(item));
    if (resolutions.empty()) throw ParamError("resolution", "expected WxH[,WxH...]");
  }
  std::vector<std::vector<NamedCamera>> cameras;
  for (const auto& [w, h] : resolutions) cameras.push_back(parse_cameras(job.camera, base.bounds(), w, h));

  ClimateParams climate;
  PassSet passes;
  if (!job.climate.empty()) {
    const nlohmann::json doc = read_json_file(job.climate, "climate");
    climate = merge_climate(ClimateParams{}, doc);
    if (!job.passes_given)
      for (const char* s : {"snow", "water", "smog"})
        if (doc.contains(s)) passes.enable(std::string(s) == "water" ? "flood" : s);
  }
  std::optional<ColorTransform> transform;
  if (!job.transform.empty()) {
    transform = load_transform(job.transform);
  } else if (!job.style.empty()) {
    transform = Session::estimate_from_scene(base, load_png(job.style));
  }
  if (transform && !job.passes_given) passes.style = true;

  std::string sweep_name;
  std::vector<double> sweep_values;
  std::vector<ClimateParams> variants{climate};
  if (!job.sweep.empty()) {
    const auto eq = job.sweep.find('=');
    if (eq == std::string::npos || eq == 0) throw ParamError("sweep", "expected name=v1,v2,...");
    sweep_name = job.sweep.substr(0, eq);
    sweep_values = parse_numbers(job.sweep.substr(eq + 1), "sweep");
    variants.clear();
    for (const double v : sweep_values) variants.push_back(with_climate_value(climate, sweep_name, v));
    if (!job.passes_given) {
      const std::string section = sweep_name.substr(0, sweep_name.find('.'));
      passes.enable(section == "water" ? "flood" : section);
    }
  }
  if (job.passes_given) passes = PassSet::parse(job.passes);

  const std::filesystem::path out_dir(job.out);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (!std::filesystem::is_directory(out_dir)) throw ParamError("out", "cannot create directory '" + job.out + "'");

  // Snow placement once per distinct placement key, reported on its own line.
  std::map<std::string, std::vector<Gaussian>> snow;
  std::vector<std::string> prep_lines;
  if (passes.snow) {
    for (const auto& v : variants) {
      const std::string key = Session::snow_key(v.snow);
      if (snow.count(key)) continue;
      Stopwatch sw;
      SnowStats stats;
      snow.emplace(key, place_snow(base, v.snow, &stats));
      std::ostringstream os;
      os << std::fixed << std::setprecision(3) << "snow_preprocess_ms=" << sw.elapsed_ms() << " count=" << stats.placed
         << " thickness=" << format_value(v.snow.thickness);
      prep_lines.push_back(os.str());
    }
  }

  std::vector<std::pair<std::string, std::vector<std::uint8_t>>> files;
  std::vector<std::string> lines;
  for (std::size_t r = 0; r < resolutions.size(); ++r) {
    for (const auto& cam : cameras[r]) {
      for (std::size_t k = 0; k < variants.size(); ++k) {
        std::string name = cam.name;
        if (resolutions.size() > 1)
          name += "_" + std::to_string(resolutions[r].first) + "x" + std::to_string(resolutions[r].second);
        if (!sweep_name.empty()) name += "_" + sweep_name + "_" + format_value(sweep_values[k]);
        FrameTimings t;
        const auto* placed = passes.snow ? &snow.at(Session::snow_key(variants[k].snow)) : nullptr;
        const GaussianScene prepared = prepare_scene(base, passes, transform ? &*transform : nullptr, placed, &t);
        const FrameBuffer fb = render_frame(prepared, cam.camera, variants[k], passes, job.time, {}, &t);
        files.emplace_back(name + ".png", encode_png(frame_to_image(fb)));
        lines.push_back(timing_line(name, t));
      }
    }
  }

  std::ostringstream report;
  for (const auto& l : prep_lines) report << l << "\n";
  for (const auto& l : lines) report << l << "\n";
  for (const auto& [file, bytes] : files) write_file((out_dir / file).string(), bytes);
  const std::string text = report.str();
  write_file((out_dir / "timings.txt").string(), std::vector<std::uint8_t>(text.begin(), text.end()));
  out << text << "images=" << files.size() << "\n";
  return 0;
}

}  // namespace detail

/// Runs one CLI invocation. Returns the process exit code; messages go to `out` and `err`.
inline int run_cli(std::vector<std::string> args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Gaussian splatting renderer with style transfer and climate effects", "climategs"};
  app.require_subcommand(1);

  detail::RenderJob job;
  std::string config;
  auto* render = app.add_subcommand("render", "Render stills or orbits, optionally sweeping one climate parameter");
  render->add_option("--config", config, "JSON job file; flags override its fields");
  render->add_option("--scene", job.scene, "Scene file (3DGS point-cloud layout)");
  render->add_option("--camera", job.camera, "orbit:N[:elev[:radius]] | pose:ex,ey,ez:tx,ty,tz[:fov] | camera file");
  render->add_option("--climate", job.climate, "Climate parameter JSON");
  render->add_option("--style", job.style, "Style reference image (PNG)");
  render->add_option("--transform", job.transform, "Color transform JSON");
  render->add_option("--out", job.out, "Output directory");
  render->add_option("--sweep", job.sweep, "name=v1,v2,... over a numeric climate field");
  render->add_option("--resolution", job.resolution, "WxH[,WxH...]");
  auto* passes_opt = render->add_option("--passes", job.passes, "Comma list of style,snow,flood,smog");
  render->add_option("--time", job.time, "Wave time in seconds");

  std::string scene, style_img, transform_path, out_path, method = "full";
  auto* style = app.add_subcommand("style", "Apply a style transform to a scene and write the new scene");
  style->add_option("--scene", scene)->required();
  style->add_option("--style", style_img, "Style reference image (PNG)");
  style->add_option("--transform", transform_path, "Color transform JSON");
  style->add_option("--out", out_path, "Output scene file")->required();
  style->add_option("--method", method, "full | mean_std")->check(CLI::IsMember({"full", "mean_std"}));

  std::string climate_path;
  double thickness = -1.0, spacing = -1.0, gt_height = NAN;
  auto* snow = app.add_subcommand("snow-prep", "Place snow Gaussians and write them as a scene file");
  snow->add_option("--scene", scene)->required();
  snow->add_option("--climate", climate_path, "Climate JSON; its snow section is used");
  snow->add_option("--thickness", thickness);
  snow->add_option("--grid-spacing", spacing);
  snow->add_option("--out", out_path)->required();
  snow->add_option("--ground-truth-height", gt_height, "Known surface height for a deviation report");

  int gaussians = 50000, runs = 5;
  std::string resolution = "640x360";
  std::uint64_t seed = 1;
  auto* bench = app.add_subcommand("bench", "Time each pass on a synthetic scene");
  bench->add_option("--gaussians", gaussians);
  bench->add_option("--resolution", resolution);
  bench->add_option("--runs", runs);
  bench->add_option("--seed", seed);

  std::string preset, spec_path;
  auto* gen = app.add_subcommand("generate", "Write a synthetic scene");
  gen->add_option("--preset", preset, "plane | floaters | sphere | wall | street | bench");
  gen->add_option("--spec", spec_path, "Synthetic scene JSON");
  gen->add_option("--seed", seed);
  gen->add_option("--gaussians", gaussians, "Size of the bench preset");
  gen->add_option("--out", out_path)->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (render->parsed()) {
      detail::RenderJob merged;
      if (!config.empty()) detail::apply_config(merged, config);
      for (const auto* opt : render->get_options()) {
        if (opt->count() == 0) continue;
        const std::string n = opt->get_name();
        if (n == "--scene") merged.scene = job.scene;
        else if (n == "--camera") merged.camera = job.camera;
        else if (n == "--climate") merged.climate = job.climate;
        else if (n == "--style") merged.style = job.style;
        else if (n == "--transform") merged.transform = job.transform;
        else if (n == "--out") merged.out = job.out;
        else if (n == "--sweep") merged.sweep = job.sweep;
        else if (n == "--resolution") merged.resolution = job.resolution;
        else if (n == "--time") merged.time = job.time;
      }
      if (passes_opt->count() > 0) {
        merged.passes = job.passes;
        merged.passes_given = true;
      }
      return detail::cmd_render(merged, out);
    }
    if (style->parsed()) {
      if (style_img.empty() == transform_path.empty()) throw ParamError("style", "give exactly one of --style or --transform");
      const GaussianScene base = load_scene(scene);
      const Camera cam = orbit_camera(base.bounds(), 30.0, 25.0, 1.2, 256, 144);
      std::optional<Image> ref;
      ColorTransform t;
      if (!transform_path.empty()) {
        t = load_transform(transform_path);
      } else {
        ref = load_png(style_img);
        const FrameBuffer fb = rasterize(base, cam);
        std::vector<Rgb> content;
        for (std::size_t i = 0; i < fb.pixel_count(); ++i)
          if (fb.alpha_acc[i] >= 0.5) content.push_back(fb.color[i]);
        if (content.empty()) throw ParamError("scene", "no covered pixels in the content frame");
        t = estimate_transform(content, ref->pixels,
                               method == "full" ? EstimateMethod::FullCovariance : EstimateMethod::MeanStd);
      }
      const GaussianScene styled = apply_transform(base, t);
      save_scene(styled, out_path);
      out << "M=" << detail::matrix_text(t.matrix) << "\n";
      out << "b=[" << t.bias.x() << " " << t.bias.y() << " " << t.bias.z() << "]\n";
      if (t.regularized) out << "regularized=1\n";
      if (ref) {
        out << "style_distance_before=" << style_distance_metric(frame_to_image(rasterize(base, cam)), *ref) << "\n";
        out << "style_distance_after=" << style_distance_metric(frame_to_image(rasterize(styled, cam)), *ref) << "\n";
      }
      return 0;
    }
    if (snow->parsed()) {
      const GaussianScene base = load_scene(scene);
      ClimateParams c;
      if (!climate_path.empty()) c = load_climate(climate_path);
      if (snow->get_option("--thickness")->count()) c.snow.thickness = thickness;
      if (snow->get_option("--grid-spacing")->count()) c.snow.grid_spacing = spacing;
      validate_climate(c);
      Stopwatch sw;
      SnowStats stats;
      const auto placed = place_snow(base, c.snow, &stats);
      const double ms = sw.elapsed_ms();
      save_scene(GaussianScene(placed, 0), out_path);
      out << std::fixed << std::setprecision(4) << "count=" << placed.size() << " rays=" << stats.rays
          << " skipped_weight=" << stats.skipped_weight << " skipped_steep=" << stats.skipped_steep
          << " preprocess_ms=" << ms;
      if (!std::isnan(gt_height)) {
        double dev = 0.0;
        for (const auto& g : placed) dev += std::abs(c.snow.up.dot(g.center) - (gt_height + 0.5 * c.snow.thickness));
        out << " mean_deviation=" << (placed.empty() ? 0.0 : dev / double(placed.size()));
      }
      out << "\n";
      return 0;
    }
    if (bench->parsed()) {
      const auto [w, h] = detail::parse_resolution(resolution);
      const BenchResult r = run_benchmark(gaussians, w, h, runs, seed);
      out << std::fixed << std::setprecision(3);
      out << "gaussians=" << r.gaussians << " width=" << r.width << " height=" << r.height << " runs=" << r.runs
          << " workers=" << worker_count() << "\n";
      out << "snow_preprocess_ms=" << r.snow_preprocess_ms << " plane_snow_preprocess_ms=" << r.plane_snow_preprocess_ms
          << "\n";
      out << "raster_ms=" << r.median.raster_ms << " snow_ms=" << r.median.snow_ms << " flood_ms=" << r.median.flood_ms
          << " smog_ms=" << r.median.smog_ms << " total_ms=" << r.median.total_ms << "\n";
      return 0;
    }
    if (gen->parsed()) {
      if (preset.empty() == spec_path.empty()) throw ParamError("generate", "give exactly one of --preset or --spec");
      SyntheticSpec spec = preset.empty() ? synthetic_spec_from_json(detail::read_json_file(spec_path, "spec"))
                                          : synthetic_preset(preset, seed, gaussians);
      if (gen->get_option("--seed")->count()) spec.seed = seed;
      const SyntheticScene s = generate_synthetic_scene(spec);
      save_scene(s.scene(), out_path);
      out << "count=" << s.scene().size() << "\n";
      return 0;
    }
  } catch (const ParamError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace climategs
