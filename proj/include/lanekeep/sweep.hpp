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

#ifndef LANEKEEP_SWEEP_HPP_
#define LANEKEEP_SWEEP_HPP_

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "lanekeep/config.hpp"
#include "lanekeep/errors.hpp"
#include "lanekeep/eval.hpp"
#include "lanekeep/experiment.hpp"

namespace lanekeep {

enum class Experiment {
  kWaypointSpacing,
  kLookaheadAlpha,
  kInputFrequency,
  kMarkerKind,
  kControllerCompare,
  kIkVsE2e,
};

inline const char* to_string(Experiment e) {
  switch (e) {
    case Experiment::kWaypointSpacing: return "waypoint_spacing";
    case Experiment::kLookaheadAlpha: return "lookahead_alpha";
    case Experiment::kInputFrequency: return "input_frequency";
    case Experiment::kMarkerKind: return "marker_kind";
    case Experiment::kControllerCompare: return "controller_compare";
    case Experiment::kIkVsE2e: return "ik_vs_e2e";
  }
  return "?";
}

inline Experiment parse_experiment(const std::string& s) {
  for (Experiment e : {Experiment::kWaypointSpacing, Experiment::kLookaheadAlpha,
                       Experiment::kInputFrequency, Experiment::kMarkerKind,
                       Experiment::kControllerCompare, Experiment::kIkVsE2e}) {
    if (s == to_string(e)) return e;
  }
  throw DomainError("unknown experiment: " + s);
}

struct SweepRow {
  std::vector<std::string> keys;
  MetricsRow metrics;
  std::optional<CurvatureReport> curvature;
};

struct SweepTable {
  Experiment experiment;
  std::vector<std::string> key_columns;
  std::vector<SweepRow> rows;
};

// One grid point: a list of config overrides plus whether the policy must be
// retrained under them.
struct GridPoint {
  std::vector<std::string> keys;
  std::vector<std::pair<std::string, std::string>> overrides;
  bool retrain = false;
};

namespace detail {

inline std::vector<GridPoint> sweep_grid(Experiment e, const RunConfig& base,
                                         std::vector<std::string>& columns) {
  std::vector<GridPoint> g;
  auto set_speed = [](GridPoint& p, const std::string& v) {
    for (const char* k : {"reward.v_desired", "pd.v_ref", "pure_pursuit.v", "nmpc.v_ref"}) {
      p.overrides.emplace_back(k, v);
    }
  };
  switch (e) {
    case Experiment::kWaypointSpacing:
      columns = {"ds", "v_d"};
      for (double ds : base.nums("sweep.ds_grid")) {
        for (double v : base.nums("sweep.v_grid")) {
          GridPoint p{{fmt6(ds), fmt6(v)}, {{"track.ds", format_double(ds)}}, true};
          set_speed(p, format_double(v));
          g.push_back(p);
        }
      }
      break;
    case Experiment::kLookaheadAlpha:
      columns = {"alpha"};
      for (double a : base.nums("sweep.alpha_grid")) {
        if (a < 0 || a != std::floor(a)) throw ConfigError("sweep.alpha_grid: integers >= 0 required");
        g.push_back({{fmt6(a)}, {{"tracking.alpha", std::to_string(static_cast<long>(a))}}, true});
      }
      break;
    case Experiment::kInputFrequency:
      columns = {"source_hz"};
      for (double hz : base.nums("sweep.hz_grid")) {
        g.push_back({{fmt6(hz)}, {{"sensor.source_hz", format_double(hz)}}, false});
      }
      break;
    case Experiment::kMarkerKind:
      columns = {"marker"};
      for (const auto& m : base.strs("sweep.markers")) {
        g.push_back({{m}, {{"sensor.marker", m}}, false});
      }
      break;
    case Experiment::kControllerCompare:
      columns = {"controller"};
      for (const auto& c : base.strs("sweep.controllers")) {
        g.push_back({{c}, {{"controller.type", c}}, false});
      }
      break;
    case Experiment::kIkVsE2e:
      columns = {"action_space", "v_d"};
      for (const auto& s : base.strs("sweep.action_spaces")) {
        for (double v : base.nums("sweep.v_grid")) {
          GridPoint p{{s, fmt6(v)}, {{"robot.action_space", s}}, true};
          set_speed(p, format_double(v));
          g.push_back(p);
        }
      }
      break;
  }
  return g;
}

}  // namespace detail

using SweepProgress = std::function<void(const std::string&)>;

inline SweepTable run_sweep(Experiment e, const RunConfig& base,
                            std::shared_ptr<const TrackSpec> track, std::size_t jobs,
                            const SweepProgress& progress = {}) {
  SweepTable table{e, {}, {}};
  const auto grid = detail::sweep_grid(e, base, table.key_columns);
  const bool uses_policy = [&] {
    if (base.str("controller.type") == "policy") return true;
    if (e == Experiment::kControllerCompare) {
      for (const auto& c : base.strs("sweep.controllers")) {
        if (c == "policy") return true;
      }
    }
    return false;
  }();

  // Shared policy for grid points that do not retrain.
  std::optional<LinearPolicy> shared;
  auto shared_policy = [&]() -> LinearPolicy {
    if (!shared) {
      const std::string file = base.str("policy.file");
      if (!file.empty()) {
        shared = load_policy(file);
      } else {
        if (progress) progress("training shared policy");
        shared = train_policy(base, track, jobs).policy;
      }
    }
    return *shared;
  };

  for (const auto& point : grid) {
    std::string label;
    for (const auto& k : point.keys) label += (label.empty() ? "" : "/") + k;
    RunConfig cfg = base;
    for (const auto& [k, v] : point.overrides) cfg.set(k, v);
    std::optional<LinearPolicy> policy;
    const bool needs_policy = cfg.str("controller.type") == "policy" && uses_policy;
    if (needs_policy) {
      if (point.retrain) {
        if (progress) progress("training " + label);
        policy = train_policy(cfg, track, jobs).policy;
      } else {
        policy = shared_policy();
      }
    }
    // Training-time look-ahead only; evaluation scores the nearest row.
    if (e == Experiment::kLookaheadAlpha) cfg.set("tracking.alpha", "0");
    const Scene scene = build_scene(cfg, track, cfg.num("eval.ds"));
    const TrainEnv env{&scene, episode_config(cfg), RewardMode::kWaypoint};
    const EvalResult res = run_eval(env, actor_factory(cfg, scene, policy),
                                    cfg.count("eval.episodes"),
                                    static_cast<std::uint64_t>(cfg.integer("eval.seed")), jobs);
    SweepRow row{point.keys, res.metrics, std::nullopt};
    if (e == Experiment::kControllerCompare) {
      row.curvature = bin_by_curvature(res.records, scene, cfg.nums("eval.curvature_edges"));
    }
    table.rows.push_back(std::move(row));
    if (progress) progress("done " + label);
  }
  return table;
}

inline void write_sweep_csv(std::ostream& out, const SweepTable& t) {
  for (const auto& c : t.key_columns) out << c << ",";
  out << metrics_header() << "\n";
  for (const auto& r : t.rows) {
    for (const auto& k : r.keys) out << k << ",";
    out << metrics_cells(r.metrics) << "\n";
  }
}

}  // namespace lanekeep

#endif  // LANEKEEP_SWEEP_HPP_
