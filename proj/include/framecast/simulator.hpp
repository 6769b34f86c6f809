#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "framecast/core.hpp"
#include "framecast/io.hpp"
#include "framecast/motion.hpp"
#include "framecast/resample.hpp"
#include "framecast/synthesis.hpp"

namespace framecast {

enum class SceneKind { Static, Translate, Projectile };

// Procedurally textured scene under exact analytic motion. The texture is
// seeded value noise, so a (spec, seed) pair fully determines every frame.
struct SceneSpec {
  SceneKind kind = SceneKind::Translate;
  int height = 96;
  int width = 96;
  std::uint64_t texture_seed = 1;
  double vx = 1.0, vy = 0.0;  // velocity, px/frame
  double ax = 0.0, ay = 0.0;  // acceleration, px/frame^2 (projectile only)
  int frames = 4;
};

struct Scene {
  std::vector<Image> frames;
  std::vector<FlowField> gt_flows;  // gt_flows[i] = exact flow i -> i+1
};

enum class HistoryMode { Recovered, Oracle };

struct RunConfig {
  SceneSpec scene;
  std::optional<std::string> input_dir;  // directory of PPM frames, replaces the scene
  ChannelTrace trace;
  PipelineConfig pipeline;
  int gap = 1;  // frame gap between the last reference and the current frame
  HistoryMode history_mode = HistoryMode::Recovered;
  std::uint64_t seed = 0;  // combined with the scene texture seed
};

namespace detail {

// splitmix64 finalizer; platform-independent lattice hashing
inline std::uint64_t hash_mix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline double lattice_value(std::uint64_t seed, std::int64_t xi, std::int64_t yi, int channel,
                            int octave) {
  std::uint64_t h = seed;
  h = hash_mix(h ^ static_cast<std::uint64_t>(xi) * 0x9E3779B97F4A7C15ull);
  h = hash_mix(h ^ static_cast<std::uint64_t>(yi) * 0xC2B2AE3D27D4EB4Full);
  h = hash_mix(h ^ (static_cast<std::uint64_t>(channel) << 32 | static_cast<std::uint64_t>(octave)));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

// Catmull-Rom interpolation of the random lattice; continuous everywhere so
// sub-pixel sampling positions are well defined.
inline double value_noise(std::uint64_t seed, double x, double y, int channel, int octave) {
  const std::int64_t xi = static_cast<std::int64_t>(std::floor(x));
  const std::int64_t yi = static_cast<std::int64_t>(std::floor(y));
  const double fx = x - static_cast<double>(xi);
  const double fy = y - static_cast<double>(yi);
  double wx[4], wy[4];
  for (int k = -1; k <= 2; ++k) {
    wx[k + 1] = bicubic_kernel(fx - k);
    wy[k + 1] = bicubic_kernel(fy - k);
  }
  double acc = 0.0;
  for (int j = -1; j <= 2; ++j) {
    double row = 0.0;
    for (int i = -1; i <= 2; ++i)
      row += wx[i + 1] * lattice_value(seed, xi + i, yi + j, channel, octave);
    acc += wy[j + 1] * row;
  }
  return acc;
}

// Three octaves of value noise, cell sizes 16/8/4 px. The mid octaves
// survive moderate downscaling so degraded frames stay registrable; the
// finest carries the detail that downscaling destroys. Clamped at render
// time.
inline double texture_at(std::uint64_t seed, double x, double y, int channel) {
  static constexpr double cells[3] = {16.0, 8.0, 4.0};
  static constexpr double amps[3] = {0.45, 0.40, 0.15};
  double v = 0.0;
  for (int o = 0; o < 3; ++o) v += amps[o] * value_noise(seed, x / cells[o], y / cells[o], channel, o);
  return 0.03 + 0.94 * v;
}

}  // namespace detail

// Texture offset of frame i relative to frame 0.
inline std::pair<double, double> scene_offset(const SceneSpec& spec, double frame) {
  switch (spec.kind) {
    case SceneKind::Static: return {0.0, 0.0};
    case SceneKind::Translate: return {spec.vx * frame, spec.vy * frame};
    default:
      return {spec.vx * frame + 0.5 * spec.ax * frame * frame,
              spec.vy * frame + 0.5 * spec.ay * frame * frame};
  }
}

// Exact flow between two frames of the scene. Motion is a global texture
// translation, so the field is constant.
inline FlowField analytic_flow(const SceneSpec& spec, double from, double to) {
  const auto [fx, fy] = scene_offset(spec, from);
  const auto [tx, ty] = scene_offset(spec, to);
  return make_flow_constant(spec.height, spec.width, tx - fx, ty - fy);
}

inline Image render_scene_frame(const SceneSpec& spec, double frame) {
  require(spec.height >= 1 && spec.width >= 1, "scene: dimensions must be positive");
  const auto [ox, oy] = scene_offset(spec, frame);
  Image img(spec.height, spec.width, 3);
  for (int y = 0; y < spec.height; ++y)
    for (int x = 0; x < spec.width; ++x)
      for (int c = 0; c < 3; ++c)
        img.at(y, x, c) = clamp01(detail::texture_at(spec.texture_seed, x - ox, y - oy, c));
  return img;
}

inline void validate_scene(const SceneSpec& spec) {
  require(spec.height >= 16 && spec.width >= 16, "scene: dimensions must be >= 16");
  require(spec.frames >= 4, "scene: needs at least 4 frames (3 bootstrap + 1 evaluated)");
  const double limit = std::min(spec.height, spec.width) / 4.0;
  for (int i = 0; i < spec.frames; ++i) {
    const auto [ox, oy] = scene_offset(spec, i);
    require(std::abs(ox) <= limit && std::abs(oy) <= limit,
            "scene: motion pushes content out of frame");
  }
}

inline Scene generate_scene(const SceneSpec& spec) {
  validate_scene(spec);
  Scene scene;
  scene.frames.reserve(static_cast<std::size_t>(spec.frames));
  for (int i = 0; i < spec.frames; ++i) scene.frames.push_back(render_scene_frame(spec, i));
  for (int i = 0; i + 1 < spec.frames; ++i) scene.gt_flows.push_back(analytic_flow(spec, i, i + 1));
  return scene;
}

inline std::string scene_kind_name(SceneKind k) {
  switch (k) {
    case SceneKind::Static: return "static";
    case SceneKind::Translate: return "translate";
    default: return "projectile";
  }
}

inline nlohmann::ordered_json scene_spec_json(const SceneSpec& spec) {
  nlohmann::ordered_json j;
  j["kind"] = scene_kind_name(spec.kind);
  j["height"] = spec.height;
  j["width"] = spec.width;
  j["texture_seed"] = spec.texture_seed;
  j["velocity"] = {spec.vx, spec.vy};
  j["acceleration"] = {spec.ax, spec.ay};
  j["frames"] = spec.frames;
  return j;
}

inline SceneSpec parse_scene_spec(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("scene spec: invalid JSON: ") + e.what());
  }
  SceneSpec spec;
  try {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "static") spec.kind = SceneKind::Static;
    else if (kind == "translate") spec.kind = SceneKind::Translate;
    else if (kind == "projectile") spec.kind = SceneKind::Projectile;
    else throw ParseError("scene spec: unknown kind '" + kind + "'");
    spec.height = j.at("height").get<int>();
    spec.width = j.at("width").get<int>();
    spec.frames = j.at("frames").get<int>();
    if (j.contains("texture_seed")) spec.texture_seed = j["texture_seed"].get<std::uint64_t>();
    if (j.contains("velocity")) {
      spec.vx = j["velocity"].at(0).get<double>();
      spec.vy = j["velocity"].at(1).get<double>();
    }
    if (j.contains("acceleration")) {
      spec.ax = j["acceleration"].at(0).get<double>();
      spec.ay = j["acceleration"].at(1).get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("scene spec: ") + e.what());
  }
  return spec;
}

namespace detail {

inline std::vector<Image> load_frame_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  std::vector<std::string> paths;
  if (!fs::is_directory(dir)) throw std::runtime_error("not a directory: " + dir);
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string ext = entry.path().extension().string();
    if (ext == ".ppm" || ext == ".pgm") paths.push_back(entry.path().string());
  }
  std::sort(paths.begin(), paths.end());
  if (paths.empty()) throw std::runtime_error("no .ppm/.pgm frames in " + dir);
  std::vector<Image> frames;
  frames.reserve(paths.size());
  for (const std::string& p : paths) frames.push_back(read_ppm(p));
  for (const Image& f : frames)
    require(f.same_shape(frames.front()), "frame directory: frames must share dimensions");
  return frames;
}

inline nlohmann::ordered_json pipeline_json(const PipelineConfig& p) {
  nlohmann::ordered_json j;
  j["estimator"] = {{"levels", p.estimator.levels},
                    {"block", p.estimator.block},
                    {"radius", p.estimator.radius},
                    {"subpixel", p.estimator.subpixel}};
  j["projection"] = {{"sigma", p.projection.sigma}, {"radius", p.projection.radius}};
  j["guided_correction"] = p.guided_correction;
  j["blur_sigma"] = p.blur_sigma;
  j["use_warped"] = p.use_warped;
  j["use_propagated"] = p.use_propagated;
  j["use_estimated"] = p.use_estimated;
  return j;
}

inline nlohmann::ordered_json run_config_json(const RunConfig& cfg) {
  nlohmann::ordered_json j;
  if (cfg.input_dir) {
    j["scene"] = nullptr;
    j["input_dir"] = *cfg.input_dir;
  } else {
    j["scene"] = scene_spec_json(cfg.scene);
    j["input_dir"] = nullptr;
  }
  j["trace"] = format_trace(cfg.trace);
  j["pipeline"] = pipeline_json(cfg.pipeline);
  j["gap"] = cfg.gap;
  j["history_mode"] = cfg.history_mode == HistoryMode::Recovered ? "recovered" : "oracle";
  j["seed"] = cfg.seed;
  return j;
}

inline SceneSpec seeded_scene(const RunConfig& cfg) {
  SceneSpec spec = cfg.scene;
  spec.texture_seed ^= cfg.seed;
  return spec;
}

}  // namespace detail

// Replay a channel trace over a frame sequence, recovering every non-received
// frame and scoring it against ground truth. With gap g the current frame i
// is recovered from frames {i-g-2, i-g-1, i-g}, so the first g+2 events must
// be HighRes; frames enter the history as recovered outputs or as ground
// truth depending on history_mode. Ground-truth frames are never read by a
// recovery path, only by the metric computation.
inline RecoveryReport run_simulation(const RunConfig& cfg) {
  require(cfg.gap >= 1, "run_simulation: gap must be >= 1");
  const bool synthetic = !cfg.input_dir.has_value();
  SceneSpec spec = detail::seeded_scene(cfg);
  std::vector<Image> frames;
  if (synthetic) {
    validate_scene(spec);
    frames = generate_scene(spec).frames;
  } else {
    frames = detail::load_frame_dir(*cfg.input_dir);
  }
  const std::size_t n = frames.size();
  require(cfg.trace.events.size() == n, "run_simulation: trace length must equal frame count");
  const int bootstrap = cfg.gap + 2;
  require(static_cast<std::size_t>(bootstrap) <= n,
          "run_simulation: sequence shorter than bootstrap");
  for (int i = 0; i < bootstrap; ++i)
    require(cfg.trace.events[static_cast<std::size_t>(i)].kind == ChannelKind::HighRes,
            "run_simulation: first gap+2 events must be HighRes");
  for (std::size_t i = 0; i < n; ++i)
    if (cfg.trace.events[i].kind == ChannelKind::LowRes) {
      const int s = cfg.trace.events[i].scale;
      require((frames[0].width + s - 1) / s >= 8 && (frames[0].height + s - 1) / s >= 8,
              "run_simulation: LowRes scale leaves fewer than 8 px per axis");
    }

  std::vector<Image> available(frames.begin(), frames.begin() + bootstrap);
  available.resize(n);
  RecoveryReport report;
  report.config_echo = detail::run_config_json(cfg);

  for (std::size_t i = static_cast<std::size_t>(bootstrap); i < n; ++i) {
    const ChannelEvent ev = cfg.trace.events[i];
    const Image& truth = frames[i];  // recovery paths never touch this; metrics only
    FrameRecord rec;
    rec.frame_index = static_cast<long>(i);
    rec.event = ev;
    Image out;
    std::optional<FlowField> fused;
    if (ev.kind == ChannelKind::HighRes) {
      out = truth;  // received intact
    } else {
      HistoryBuffer hist;
      hist.frames = {available[i - cfg.gap - 2], available[i - cfg.gap - 1],
                     available[i - cfg.gap]};
      hist.indices = {static_cast<long>(i - cfg.gap - 2), static_cast<long>(i - cfg.gap - 1),
                      static_cast<long>(i - cfg.gap)};
      if (ev.kind == ChannelKind::LowRes) {
        const Image lr = degrade(truth, ev.scale);
        auto [img, diag] = enhance_lossy(hist, lr, ev.scale, cfg.gap, cfg.pipeline);
        out = std::move(img);
        fused = std::move(diag.fused);
      } else {
        auto [img, diag] = predict_lost(hist, cfg.gap, cfg.pipeline);
        out = std::move(img);
        fused = std::move(diag.fused);
      }
    }
    rec.psnr = psnr(out, truth);
    rec.ssim = ssim(out, truth);
    rec.charbonnier = charbonnier(out, truth);
    if (fused && synthetic)
      rec.epe = epe(*fused, analytic_flow(spec, static_cast<double>(i) - cfg.gap,
                                          static_cast<double>(i)));
    available[i] = (ev.kind == ChannelKind::HighRes || cfg.history_mode == HistoryMode::Oracle)
                       ? truth
                       : out;
    report.per_frame.push_back(std::move(rec));
  }
  return report;
}

// One row per scale: EPE of the estimated flow against the analytic ground
// truth, next to the (scale-independent) warped and propagated predictions.
// History flows come from the block-matching estimator; epe_warped is scored
// on warp-valid pixels.
struct ScaleSweepRow {
  int scale = 0;
  double epe_estimated = 0.0;
  double epe_warped = 0.0;
  double epe_propagated = 0.0;
};

struct ScaleSweep {
  std::vector<ScaleSweepRow> rows;
};

inline std::string sweep_scale_csv(const ScaleSweep& sweep) {
  std::string out = "scale,epe_estimated,epe_warped,epe_propagated\n";
  for (const ScaleSweepRow& r : sweep.rows)
    out += std::to_string(r.scale) + "," + detail::csv_number(r.epe_estimated) + "," +
           detail::csv_number(r.epe_warped) + "," + detail::csv_number(r.epe_propagated) + "\n";
  return out;
}

inline ScaleSweep sweep_scale(const RunConfig& cfg, const std::vector<int>& scales) {
  require(!cfg.input_dir, "sweep_scale: requires a synthetic scene (needs ground-truth flow)");
  require(!scales.empty(), "sweep_scale: no scales given");
  for (std::size_t i = 0; i < scales.size(); ++i) {
    require(scales[i] >= 2, "sweep_scale: scales must be >= 2");
    if (i) require(scales[i] > scales[i - 1], "sweep_scale: scales must be sorted ascending");
  }
  const int g = cfg.gap;
  require(g >= 1, "sweep_scale: gap must be >= 1");
  SceneSpec spec = detail::seeded_scene(cfg);
  require(spec.frames >= g + 3, "sweep_scale: scene too short for the configured gap");
  validate_scene(spec);

  const Image im2 = render_scene_frame(spec, 0);
  const Image im1 = render_scene_frame(spec, 1);
  const Image i0 = render_scene_frame(spec, 2);
  const Image current = render_scene_frame(spec, 2 + g);
  const FlowField truth = analytic_flow(spec, 2, 2 + g);

  const BlockMatchEstimator estimator(cfg.pipeline.estimator);
  const FlowField f_0_m1 = estimator.estimate(i0, im1);
  const FlowField f_0_m2 = estimator.estimate(i0, im2);
  const FlowField f_m1_0 = estimator.estimate(im1, i0);
  const auto [warped, warp_valid] = warp_predict(f_m1_0, f_0_m1, g);
  const FlowField propagated = propagate(f_0_m1, f_0_m2, g);
  const double epe_warped = epe_where(warped, truth, warp_valid);
  const double epe_propagated = epe(propagated, truth);

  ScaleSweep sweep;
  for (int s : scales) {
    require((spec.width + s - 1) / s >= 8 && (spec.height + s - 1) / s >= 8,
            "sweep_scale: scale leaves fewer than 8 px per axis");
    const Image lr = degrade(current, s);
    const FlowField estimated = estimate_lossy(i0, lr, s, estimator);
    sweep.rows.push_back({s, epe(estimated, truth), epe_warped, epe_propagated});
  }
  return sweep;
}

// Recovery quality as a function of the frame gap. For each gap g the first
// three frames serve as references and frame 2+g is the current one; the
// recovery kind is the trace's first evaluated event (index 3). Gap 1
// reproduces the plain run_simulation path.
struct GapSweepRow {
  int gap = 0;
  double psnr = 0.0;
};

struct GapSweep {
  std::vector<GapSweepRow> rows;
};

inline std::string sweep_gap_csv(const GapSweep& sweep) {
  std::string out = "gap,psnr\n";
  for (const GapSweepRow& r : sweep.rows)
    out += std::to_string(r.gap) + "," + detail::csv_number(r.psnr) + "\n";
  return out;
}

inline GapSweep sweep_gap(const RunConfig& cfg, const std::vector<int>& gaps) {
  require(!gaps.empty(), "sweep_gap: no gaps given");
  require(cfg.trace.events.size() >= 4, "sweep_gap: trace needs an evaluated event at index 3");
  const ChannelEvent kind = cfg.trace.events[3];
  const int max_frames = cfg.input_dir
                             ? static_cast<int>(detail::load_frame_dir(*cfg.input_dir).size())
                             : cfg.scene.frames;
  GapSweep sweep;
  for (int g : gaps) {
    require(g >= 1, "sweep_gap: gaps must be >= 1");
    require(g + 3 <= max_frames, "sweep_gap: gap exceeds sequence");
    RunConfig sub = cfg;
    sub.gap = g;
    if (!cfg.input_dir) sub.scene.frames = g + 3;
    const int n_frames = cfg.input_dir ? max_frames : g + 3;
    sub.trace.events.assign(static_cast<std::size_t>(n_frames), high_res_event());
    sub.trace.events[static_cast<std::size_t>(g + 2)] = kind;
    const RecoveryReport report = run_simulation(sub);
    sweep.rows.push_back({g, report.per_frame.front().psnr});
  }
  return sweep;
}

}  // namespace framecast
