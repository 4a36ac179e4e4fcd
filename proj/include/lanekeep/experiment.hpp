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

#ifndef LANEKEEP_EXPERIMENT_HPP_
#define LANEKEEP_EXPERIMENT_HPP_

#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lanekeep/config.hpp"
#include "lanekeep/controllers.hpp"
#include "lanekeep/errors.hpp"
#include "lanekeep/eval.hpp"
#include "lanekeep/policy.hpp"
#include "lanekeep/robot.hpp"
#include "lanekeep/sensor.hpp"
#include "lanekeep/track.hpp"
#include "lanekeep/tracking.hpp"

namespace lanekeep {

namespace detail {

template <typename F>
auto with_key(const std::string& key, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("config key " + key + ": " + e.what());
  }
}

inline void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ConfigError("config key " + key + ": " + what);
}

}  // namespace detail

inline TrackParams track_params(const RunConfig& c) {
  TrackParams p;
  p.shape = detail::with_key("track.shape",
                             [&] { return parse_track_shape(c.str("track.shape")); });
  p.seed = static_cast<std::uint64_t>(c.integer("track.seed"));
  p.scale = c.num("track.scale");
  p.n = c.count("track.n");
  p.j = c.count("track.j");
  p.w = c.count("track.w");
  p.r = c.num("track.r");
  p.cone_mode = detail::with_key("track.cone_mode",
                                 [&] { return parse_cone_mode(c.str("track.cone_mode")); });
  p.ds = c.num("track.ds");
  p.lane_width = c.num("track.lane_width");
  detail::require(p.scale > 0.0, "track.scale", "must be > 0");
  detail::require(p.n >= 3, "track.n", "must be >= 3");
  detail::require(p.j >= 2 && p.j % 2 == 0, "track.j", "must be even and >= 2");
  detail::require(p.r >= 0.0, "track.r", "must be >= 0");
  detail::require(p.ds > 0.0, "track.ds", "must be > 0");
  detail::require(p.lane_width > 0.0, "track.lane_width", "must be > 0");
  return p;
}

inline CameraModel camera_model(const RunConfig& c) {
  CameraModel cam;
  cam.mount_height = c.num("camera.mount_height");
  cam.pitch = c.num("camera.pitch");
  cam.focal = c.num("camera.focal");
  cam.u0 = c.num("camera.u0");
  cam.v0 = c.num("camera.v0");
  detail::with_key("camera", [&] {
    cam.validate();
    return 0;
  });
  return cam;
}

inline MarkerKind marker_kind(const RunConfig& c, const std::string& name) {
  MarkerKind k = default_marker(
      detail::with_key("sensor.marker", [&] { return parse_marker_type(name); }));
  const double size = c.num("sensor.marker_size");
  detail::require(size >= 0.0, "sensor.marker_size", "must be >= 0");
  if (size > 0.0) k.size = size;
  return k;
}

inline MarkerKind marker_kind(const RunConfig& c) {
  return marker_kind(c, c.str("sensor.marker"));
}

// "lane:s_begin:s_end;..." with lane 0 meaning both lanes.
inline std::vector<MissingSpan> parse_missing_spans(const std::string& text) {
  std::vector<MissingSpan> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ';')) {
    item = detail::trim(item);
    if (item.empty()) continue;
    std::stringstream is(item);
    std::string a, b, e;
    if (!std::getline(is, a, ':') || !std::getline(is, b, ':') || !std::getline(is, e)) {
      throw ConfigError("config key sensor.missing: expected lane:s_begin:s_end");
    }
    std::int64_t lane = 0;
    double s0 = 0.0, s1 = 0.0;
    if (!detail::read_int(detail::trim(a), lane) || lane < 0 || lane > 2 ||
        !detail::read_double(detail::trim(b), s0) ||
        !detail::read_double(detail::trim(e), s1) || s1 < s0) {
      throw ConfigError("config key sensor.missing: bad span '" + item + "'");
    }
    out.push_back({static_cast<int>(lane), s0, s1});
  }
  return out;
}

inline EpisodeConfig episode_config(const RunConfig& c) {
  EpisodeConfig e;
  e.dt = c.num("robot.dt");
  detail::require(e.dt > 0.0, "robot.dt", "must be > 0");
  e.ik = {c.num("robot.r_hat"), c.num("robot.b_hat")};
  detail::require(e.ik.r_hat > 0.0, "robot.r_hat", "must be > 0");
  detail::require(e.ik.b_hat > 0.0, "robot.b_hat", "must be > 0");
  e.slip = {c.num("robot.traversal_gain"), c.num("robot.omega_gain")};
  e.weights.v_desired = c.num("reward.v_desired");
  e.weights.v_max = c.num("reward.v_max");
  e.weights.omega_max = c.num("reward.omega_max");
  e.weights.e_x_cap = c.num("reward.e_x_cap");
  detail::require(e.weights.v_max > 0.0, "reward.v_max", "must be > 0");
  detail::require(e.weights.omega_max > 0.0, "reward.omega_max", "must be > 0");
  detail::require(e.weights.e_x_cap > 0.0, "reward.e_x_cap", "must be > 0");
  e.termination.e_x_limit = c.num("termination.e_x_limit");
  e.termination.e_theta_limit = c.num("termination.e_theta_limit");
  e.termination.max_steps = c.count("termination.max_steps");
  detail::require(e.termination.max_steps >= 1, "termination.max_steps", "must be >= 1");
  e.alpha = c.count("tracking.alpha");
  e.table_index = static_cast<int>(c.integer("tracking.table_index"));
  e.feature_dim = c.count("sensor.feature_dim");
  detail::with_key("sensor.feature_dim", [&] { return pooling_grid(e.feature_dim); });
  e.source_hz = c.num("sensor.source_hz");
  e.control_hz = 1.0 / e.dt;
  detail::with_key("sensor.source_hz",
                   [&] { return frame_hold_ratio(e.source_hz, e.control_hz); });
  e.blur_sigma = c.num("sensor.blur_sigma");
  detail::require(e.blur_sigma >= 0.0, "sensor.blur_sigma", "must be >= 0");
  e.missing = parse_missing_spans(c.str("sensor.missing"));
  return e;
}

inline CEMConfig cem_config(const RunConfig& c) {
  CEMConfig m;
  m.population = c.count("cem.population");
  m.elite_fraction = c.num("cem.elite_fraction");
  m.iterations = c.count("cem.iterations");
  m.init_std = c.num("cem.init_std");
  m.min_std = c.num("cem.min_std");
  m.episodes_per_candidate = c.count("cem.episodes_per_candidate");
  m.seed = static_cast<std::uint64_t>(c.integer("cem.seed"));
  detail::with_key("cem", [&] {
    m.validate();
    return 0;
  });
  return m;
}

inline MPCConfig mpc_config(const RunConfig& c) {
  MPCConfig m;
  m.horizon = c.count("nmpc.horizon");
  m.dt = c.num("nmpc.dt");
  m.q_pos = c.num("nmpc.q_pos");
  m.q_theta = c.num("nmpc.q_theta");
  m.r_v = c.num("nmpc.r_v");
  m.r_omega = c.num("nmpc.r_omega");
  m.max_iterations = c.count("nmpc.max_iterations");
  detail::with_key("nmpc", [&] {
    m.validate();
    return 0;
  });
  return m;
}

inline PDGains pd_gains(const RunConfig& c) {
  PDGains g{c.num("pd.kp"), c.num("pd.kd"), c.num("pd.v_ref")};
  detail::with_key("pd", [&] {
    g.validate();
    return 0;
  });
  return g;
}

inline PurePursuitConfig pure_pursuit_config(const RunConfig& c) {
  PurePursuitConfig p{c.num("pure_pursuit.lookahead"), c.num("pure_pursuit.v")};
  detail::require(p.lookahead > 0.0, "pure_pursuit.lookahead", "must be > 0");
  return p;
}

inline RewardMode reward_mode(const RunConfig& c) {
  return detail::with_key("reward.mode", [&] { return parse_reward_mode(c.str("reward.mode")); });
}

inline ActionSpace action_space(const RunConfig& c) {
  return detail::with_key("robot.action_space",
                          [&] { return parse_action_space(c.str("robot.action_space")); });
}

inline LinearPolicy load_policy(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open policy file: " + path);
  return read_policy_csv(in);
}

// Actor factory for the configured controller. `policy` is required when
// controller.type = policy.
inline ActorFactory actor_factory(const RunConfig& c, const Scene& scene,
                                  std::optional<LinearPolicy> policy) {
  const ControllerType type = detail::with_key(
      "controller.type", [&] { return parse_controller(c.str("controller.type")); });
  const ReferenceSource source = detail::with_key(
      "controller.source", [&] { return parse_reference_source(c.str("controller.source")); });
  const double lane_width = scene.track->lane_width;
  switch (type) {
    case ControllerType::kPD: {
      const PDGains g = pd_gains(c);
      return [g] { return Actor(PdActor(g)); };
    }
    case ControllerType::kPurePursuit: {
      const PurePursuitConfig p = pure_pursuit_config(c);
      return [p, source, lane_width] {
        return Actor(PurePursuitActor(p, source, lane_width));
      };
    }
    case ControllerType::kNmpc: {
      const MPCConfig m = mpc_config(c);
      const double v = c.num("nmpc.v_ref");
      return [m, v, source, lane_width] {
        return Actor(NmpcActor(m, v, source, lane_width));
      };
    }
    case ControllerType::kOracle: {
      const double v = c.num("reward.v_desired");
      return [v] {
        return Actor([f = OracleFollower(v)](Episode& ep) { return f(ep); });
      };
    }
    case ControllerType::kPolicy: {
      if (!policy) {
        const std::string file = c.str("policy.file");
        if (file.empty()) throw ConfigError("controller = policy needs policy.file");
        policy = load_policy(file);
      }
      if (policy->feature_dim != c.count("sensor.feature_dim")) {
        throw ConfigError("policy feature size does not match sensor.feature_dim");
      }
      LinearPolicy p = *policy;
      p.ik = {c.num("robot.r_hat"), c.num("robot.b_hat")};
      return [p] { return policy_actor(p); };
    }
  }
  throw ConfigError("unknown controller");
}

// Track built from the config, shared by scenes at several spacings.
inline std::shared_ptr<const TrackSpec> build_track(const RunConfig& c) {
  const TrackParams p = track_params(c);
  return detail::with_key("track", [&] {
    return std::make_shared<const TrackSpec>(make_track(p));
  });
}

inline Scene build_scene(const RunConfig& c, std::shared_ptr<const TrackSpec> track,
                         double ds) {
  return make_scene(std::move(track), ds, camera_model(c), marker_kind(c));
}

inline TrainResult train_policy(const RunConfig& c,
                                std::shared_ptr<const TrackSpec> track,
                                std::size_t jobs) {
  const Scene scene = build_scene(c, std::move(track), c.num("track.ds"));
  const TrainEnv env{&scene, episode_config(c), reward_mode(c)};
  CEMConfig cem = cem_config(c);
  cem.jobs = jobs;
  return cem_train(env, action_space(c), cem);
}

// Evaluation always scores the WpG metrics on the fine evaluation tables.
inline EvalResult evaluate_config(const RunConfig& c,
                                  std::shared_ptr<const TrackSpec> track,
                                  std::optional<LinearPolicy> policy,
                                  std::size_t jobs) {
  const Scene scene = build_scene(c, std::move(track), c.num("eval.ds"));
  EpisodeConfig e = episode_config(c);
  const TrainEnv env{&scene, e, RewardMode::kWaypoint};
  const ActorFactory f = actor_factory(c, scene, std::move(policy));
  return run_eval(env, f, c.count("eval.episodes"),
                  static_cast<std::uint64_t>(c.integer("eval.seed")), jobs);
}

}  // namespace lanekeep

#endif  // LANEKEEP_EXPERIMENT_HPP_
