// Copyright 2026 The lanekeep Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LANEKEEP_CLI_HPP_
#define LANEKEEP_CLI_HPP_

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lanekeep/config.hpp"
#include "lanekeep/errors.hpp"
#include "lanekeep/eval.hpp"
#include "lanekeep/experiment.hpp"
#include "lanekeep/policy.hpp"
#include "lanekeep/sensor.hpp"
#include "lanekeep/sweep.hpp"
#include "lanekeep/track.hpp"
#include "lanekeep/tracking.hpp"

namespace lanekeep {

namespace fs = std::filesystem;

enum ExitCode { kExitOk = 0, kExitConfig = 1, kExitInfeasible = 2 };

inline std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + p.string());
  return out;
}

// ---------------------------------------------------------------------------
// Track bundle

inline void write_track_bundle(const TrackSpec& t, const RunConfig& cfg,
                               const fs::path& dir) {
  fs::create_directories(dir);
  {
    auto out = open_out(dir / "cones.csv");
    out << "lane,x,y\n";
    char buf[96];
    for (int lane = 1; lane <= 2; ++lane) {
      for (const Vec2& c : lane == 1 ? t.cones.lane1_cones : t.cones.lane2_cones) {
        std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g\n", lane, c.x, c.y);
        out << buf;
      }
    }
  }
  {
    auto out = open_out(dir / "centers.csv");
    out << "i,x,y\n";
    char buf[96];
    for (std::size_t i = 0; i < t.centers.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%zu,%.9g,%.9g\n", i, t.centers[i].x, t.centers[i].y);
      out << buf;
    }
  }
  for (std::size_t k = 0; k < t.ref_tables.size(); ++k) {
    auto out = open_out(dir / ("reftable_" + std::to_string(k) + ".csv"));
    write_reftable_csv(out, t.ref_tables[k]);
  }
  auto out = open_out(dir / "track.toml");
  std::istringstream all(cfg.serialize());
  std::string line;
  while (std::getline(all, line)) {
    if (line.rfind("track.", 0) == 0) out << line << "\n";
  }
}

// Copies the bundle's track.* keys into `cfg` and regenerates the track.
inline std::shared_ptr<const TrackSpec> load_track_bundle(const fs::path& dir,
                                                          RunConfig& cfg) {
  const fs::path meta = dir / "track.toml";
  if (!fs::exists(meta)) throw ConfigError("track bundle missing " + meta.string());
  if (!fs::exists(dir / "cones.csv")) {
    throw ConfigError("track bundle missing " + (dir / "cones.csv").string());
  }
  std::ifstream in(meta);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = detail::trim(line);
    if (line.empty() || line.front() == '#') continue;
    if (line.rfind("track.", 0) != 0) {
      throw ConfigError(meta.string() + ":" + std::to_string(lineno) + ": not a track key");
    }
    cfg.apply_override(line);
  }
  return build_track(cfg);
}

// ---------------------------------------------------------------------------
// SVG plot of one metric column against the grid rows.

inline void write_sweep_svg(std::ostream& out, const SweepTable& t) {
  const double w = 640, h = 360, pad = 50;
  double hi = 0.0;
  for (const auto& r : t.rows) hi = std::max(hi, r.metrics.mean_e_x);
  if (hi <= 0.0) hi = 1.0;
  const std::size_t n = std::max<std::size_t>(t.rows.size(), 1);
  const double bw = (w - 2 * pad) / static_cast<double>(n);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
      << "\">\n";
  out << "<text x=\"" << pad << "\" y=\"20\" font-size=\"14\">" << to_string(t.experiment)
      << ": mean_e_x (m)</text>\n";
  out << "<line x1=\"" << pad << "\" y1=\"" << h - pad << "\" x2=\"" << w - pad
      << "\" y2=\"" << h - pad << "\" stroke=\"black\"/>\n";
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const double v = t.rows[i].metrics.mean_e_x;
    const double bh = (h - 2 * pad) * v / hi;
    const double x = pad + bw * static_cast<double>(i);
    out << "<rect x=\"" << x + 0.1 * bw << "\" y=\"" << h - pad - bh << "\" width=\""
        << 0.8 * bw << "\" height=\"" << bh << "\" fill=\"steelblue\"/>\n";
    std::string label;
    for (const auto& k : t.rows[i].keys) label += (label.empty() ? "" : "/") + k;
    out << "<text x=\"" << x + 0.5 * bw << "\" y=\"" << h - pad + 14
        << "\" font-size=\"9\" text-anchor=\"middle\">" << label << "</text>\n";
    out << "<text x=\"" << x + 0.5 * bw << "\" y=\"" << h - pad - bh - 3
        << "\" font-size=\"9\" text-anchor=\"middle\">" << fmt6(v) << "</text>\n";
  }
  out << "</svg>\n";
}

// ---------------------------------------------------------------------------
// Commands

inline int cmd_gen_track(const RunConfig& cfg, const fs::path& out_dir) {
  const auto track = build_track(cfg);
  write_track_bundle(*track, cfg, out_dir);
  std::cerr << "wrote " << track->ref_tables.size() << " reference tables to "
            << out_dir.string() << "\n";
  return kExitOk;
}

inline int cmd_run(RunConfig cfg, const fs::path& track_dir, const fs::path& out_dir,
                   std::size_t jobs) {
  const auto track = load_track_bundle(track_dir, cfg);
  const EvalResult res = evaluate_config(cfg, track, std::nullopt, jobs);
  fs::create_directories(out_dir);
  for (std::size_t i = 0; i < res.records.size(); ++i) {
    char name[64];
    std::snprintf(name, sizeof(name), "episode_%03zu.csv", i);
    auto out = open_out(out_dir / name);
    write_episode_csv(out, res.records[i]);
  }
  auto out = open_out(out_dir / "metrics.csv");
  write_metrics_csv(out, res.metrics);
  return kExitOk;
}

inline int cmd_train(RunConfig cfg, const fs::path& track_dir, const fs::path& policy_out,
                     const fs::path& curve_out, std::size_t jobs) {
  const auto track = load_track_bundle(track_dir, cfg);
  const TrainResult r = train_policy(cfg, track, jobs);
  {
    auto out = open_out(policy_out);
    write_policy_csv(out, r.policy);
  }
  auto out = open_out(curve_out);
  write_curve_csv(out, r.curve);
  return kExitOk;
}

inline int cmd_eval(RunConfig cfg, const fs::path& track_dir, const fs::path& out_dir,
                    std::size_t jobs) {
  const auto track = load_track_bundle(track_dir, cfg);
  const Scene scene = build_scene(cfg, track, cfg.num("eval.ds"));
  const TrainEnv env{&scene, episode_config(cfg), RewardMode::kWaypoint};
  const EvalResult res = run_eval(env, actor_factory(cfg, scene, std::nullopt),
                                  cfg.count("eval.episodes"),
                                  static_cast<std::uint64_t>(cfg.integer("eval.seed")), jobs);
  {
    auto out = open_out(out_dir / "metrics.csv");
    write_metrics_csv(out, res.metrics);
  }
  {
    auto out = open_out(out_dir / "curvature_bins.csv");
    write_curvature_csv(out, bin_by_curvature(res.records, scene,
                                              cfg.nums("eval.curvature_edges")));
  }
  auto out = open_out(out_dir / "histogram.csv");
  write_histogram_csv(out, error_histogram(res.records, cfg.num("eval.histogram_width")));
  return kExitOk;
}

inline int cmd_sweep(RunConfig cfg, const fs::path& track_dir, const std::string& name,
                     const fs::path& out_dir, std::size_t jobs, bool plot) {
  const Experiment e = detail::with_key("experiment", [&] { return parse_experiment(name); });
  const auto track = load_track_bundle(track_dir, cfg);
  const SweepTable t = run_sweep(e, cfg, track, jobs, [](const std::string& msg) {
    std::cerr << "sweep: " << msg << "\n";
  });
  {
    auto out = open_out(out_dir / (name + ".csv"));
    write_sweep_csv(out, t);
  }
  if (e == Experiment::kControllerCompare) {
    for (const auto& r : t.rows) {
      auto out = open_out(out_dir / ("curvature_bins_" + r.keys.front() + ".csv"));
      write_curvature_csv(out, *r.curvature);
    }
  }
  if (plot) {
    auto out = open_out(out_dir / (name + ".svg"));
    write_sweep_svg(out, t);
  }
  return kExitOk;
}

inline int cmd_features(RunConfig cfg, const fs::path& track_dir, const fs::path& out_dir,
                        std::size_t dump_images) {
  const auto track = load_track_bundle(track_dir, cfg);
  const CameraModel cam = camera_model(cfg);
  std::vector<std::size_t> sizes;
  for (double d : cfg.nums("features.sizes")) {
    if (d < 1 || d != std::floor(d)) throw ConfigError("features.sizes: integers required");
    sizes.push_back(static_cast<std::size_t>(d));
    detail::with_key("features.sizes", [&] { return pooling_grid(sizes.back()); });
  }
  std::vector<MarkerKind> others;
  for (const auto& m : cfg.strs("features.others")) others.push_back(marker_kind(cfg, m));
  const auto seed = static_cast<std::uint64_t>(cfg.integer("features.seed"));
  const auto rows = feature_kl(*track, cam, marker_kind(cfg, cfg.str("features.reference")),
                               others, sizes, cfg.count("features.samples"), seed);
  {
    auto out = open_out(out_dir / "kl.csv");
    write_kl_csv(out, rows);
  }
  if (dump_images > 0) {
    const auto poses = sample_poses(*track, dump_images, seed);
    const Renderer r(*track, cam, marker_kind(cfg));
    const std::size_t d = cfg.count("sensor.feature_dim");
    for (std::size_t i = 0; i < poses.size(); ++i) {
      const BinaryImage img = r.render(poses[i]);
      char name[64];
      std::snprintf(name, sizeof(name), "frame_%03zu", i);
      auto pgm = open_out(out_dir / (std::string(name) + ".pgm"));
      write_pgm(pgm, img);
      auto csv = open_out(out_dir / (std::string(name) + "_features.csv"));
      write_feature_csv(csv, distill(img, d));
    }
  }
  return kExitOk;
}

}  // namespace lanekeep

#endif  // LANEKEEP_CLI_HPP_
