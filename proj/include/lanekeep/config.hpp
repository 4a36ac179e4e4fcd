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

#ifndef LANEKEEP_CONFIG_HPP_
#define LANEKEEP_CONFIG_HPP_

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "lanekeep/errors.hpp"

namespace lanekeep {

enum class ValueType { kInt, kFloat, kString, kFloatList, kStringList };

struct KeySpec {
  ValueType type;
  std::string default_value;  // canonical text
  std::string doc;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::string format_double(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  std::string s(buf, r.ptr);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

inline bool read_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* b = s.data();
  if (*b == '+') ++b;
  const auto r = std::from_chars(b, s.data() + s.size(), out);
  return r.ec == std::errc() && r.ptr == s.data() + s.size() && std::isfinite(out);
}

inline bool read_int(const std::string& s, std::int64_t& out) {
  if (s.empty()) return false;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), out);
  return r.ec == std::errc() && r.ptr == s.data() + s.size();
}

inline std::string unquote(const std::string& s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
    return s.substr(1, s.size() - 2);
  }
  return s;
}

// Splits "[a, b, c]" (brackets optional) at top-level commas.
inline std::vector<std::string> split_list(std::string s) {
  s = trim(s);
  if (!s.empty() && s.front() == '[') {
    if (s.back() != ']') throw ConfigError("unterminated list: " + s);
    s = s.substr(1, s.size() - 2);
  }
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

}  // namespace detail

// Flat dotted-key run configuration. Values are stored in canonical text so
// parse -> serialize -> parse is the identity.
class RunConfig {
 public:
  static const std::map<std::string, KeySpec>& schema() {
    static const std::map<std::string, KeySpec> kSchema = build_schema();
    return kSchema;
  }

  RunConfig() {
    for (const auto& [k, spec] : schema()) values_[k] = spec.default_value;
  }

  static RunConfig parse(std::istream& in) {
    RunConfig cfg;
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = find_comment(line);
      if (hash != std::string::npos) line = line.substr(0, hash);
      line = detail::trim(line);
      if (line.empty()) continue;
      if (line.front() == '[' && line.back() == ']' &&
          line.find('=') == std::string::npos) {
        section = detail::trim(line.substr(1, line.size() - 2));
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
      }
      std::string key = detail::trim(line.substr(0, eq));
      if (!section.empty()) key = section + "." + key;
      cfg.set(key, detail::trim(line.substr(eq + 1)));
    }
    return cfg;
  }

  static RunConfig from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    return parse(in);
  }

  // Applies "key=value".
  void apply_override(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("override must be key=value: " + assignment);
    }
    set(detail::trim(assignment.substr(0, eq)), detail::trim(assignment.substr(eq + 1)));
  }

  void set(const std::string& key, const std::string& raw) {
    const auto it = schema().find(key);
    if (it == schema().end()) throw ConfigError("unknown config key: " + key);
    values_[key] = canonicalize(key, it->second.type, raw);
  }

  const std::string& raw(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown config key: " + key);
    return it->second;
  }

  double num(const std::string& key) const {
    expect(key, ValueType::kFloat, ValueType::kInt);
    double v = 0.0;
    detail::read_double(raw(key), v);
    return v;
  }

  std::int64_t integer(const std::string& key) const {
    expect(key, ValueType::kInt, ValueType::kInt);
    std::int64_t v = 0;
    detail::read_int(raw(key), v);
    return v;
  }

  std::size_t count(const std::string& key) const {
    const std::int64_t v = integer(key);
    if (v < 0) throw ConfigError(key + " must be >= 0");
    return static_cast<std::size_t>(v);
  }

  std::string str(const std::string& key) const {
    expect(key, ValueType::kString, ValueType::kString);
    return detail::unquote(raw(key));
  }

  std::vector<double> nums(const std::string& key) const {
    expect(key, ValueType::kFloatList, ValueType::kFloatList);
    std::vector<double> out;
    for (const auto& s : detail::split_list(raw(key))) {
      double v = 0.0;
      detail::read_double(s, v);
      out.push_back(v);
    }
    return out;
  }

  std::vector<std::string> strs(const std::string& key) const {
    expect(key, ValueType::kStringList, ValueType::kStringList);
    std::vector<std::string> out;
    for (const auto& s : detail::split_list(raw(key))) out.push_back(detail::unquote(s));
    return out;
  }

  std::string serialize() const {
    std::string out;
    for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
    return out;
  }

  bool operator==(const RunConfig& o) const { return values_ == o.values_; }

 private:
  static std::size_t find_comment(const std::string& line) {
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) return i;
    }
    return std::string::npos;
  }

  void expect(const std::string& key, ValueType a, ValueType b) const {
    const auto it = schema().find(key);
    if (it == schema().end()) throw ConfigError("unknown config key: " + key);
    if (it->second.type != a && it->second.type != b) {
      throw ConfigError("config key has a different type: " + key);
    }
  }

  static std::string canonicalize(const std::string& key, ValueType type,
                                  const std::string& raw) {
    auto bad = [&](const std::string& what) {
      return ConfigError("config key " + key + ": " + what + " (got '" + raw + "')");
    };
    switch (type) {
      case ValueType::kInt: {
        std::int64_t v = 0;
        if (!detail::read_int(raw, v)) throw bad("expected an integer");
        return std::to_string(v);
      }
      case ValueType::kFloat: {
        double v = 0.0;
        if (!detail::read_double(raw, v)) throw bad("expected a number");
        return detail::format_double(v);
      }
      case ValueType::kString: {
        const std::string s = detail::unquote(raw);
        if (s.find('"') != std::string::npos) throw bad("quote inside string");
        return "\"" + s + "\"";
      }
      case ValueType::kFloatList: {
        std::string out = "[";
        bool first = true;
        for (const auto& item : detail::split_list(raw)) {
          double v = 0.0;
          if (!detail::read_double(item, v)) throw bad("expected a list of numbers");
          out += (first ? "" : ", ") + detail::format_double(v);
          first = false;
        }
        return out + "]";
      }
      case ValueType::kStringList: {
        std::string out = "[";
        bool first = true;
        for (const auto& item : detail::split_list(raw)) {
          const std::string s = detail::unquote(item);
          if (s.empty() || s.find('"') != std::string::npos) throw bad("bad list item");
          out += (first ? "\"" : ", \"") + s + "\"";
          first = false;
        }
        return out + "]";
      }
    }
    throw bad("unknown type");
  }

  static std::map<std::string, KeySpec> build_schema() {
    using T = ValueType;
    std::map<std::string, KeySpec> s;
    auto add = [&](const std::string& k, T t, const std::string& v, const std::string& doc) {
      s[k] = KeySpec{t, canonicalize(k, t, v), doc};
    };
    add("track.shape", T::kString, "figure_eight", "figure_eight | circle | straight");
    add("track.seed", T::kInt, "1", "cone perturbation seed");
    add("track.scale", T::kFloat, "10", "figure-eight scale, circle radius or straight length (m)");
    add("track.n", T::kInt, "200", "points per lane curve");
    add("track.j", T::kInt, "10", "number of waypoint sets (even)");
    add("track.w", T::kInt, "40", "circular shift between sets");
    add("track.r", T::kFloat, "0.15", "cone perturbation radius (m)");
    add("track.cone_mode", T::kString, "exact", "exact | uniform_disc");
    add("track.ds", T::kFloat, "0.1", "training reference spacing (m)");
    add("track.lane_width", T::kFloat, "1.3", "lane separation (m)");

    add("robot.r_hat", T::kFloat, "0.165", "effective wheel radius (m)");
    add("robot.b_hat", T::kFloat, "0.55", "effective track width (m)");
    add("robot.dt", T::kFloat, "0.05", "control period (s)");
    add("robot.traversal_gain", T::kFloat, "1", "realized / commanded speed");
    add("robot.omega_gain", T::kFloat, "1", "realized / commanded yaw rate");
    add("robot.action_space", T::kString, "body_twist", "body_twist | wheel_speeds");

    add("camera.mount_height", T::kFloat, "0.5", "m");
    add("camera.pitch", T::kFloat, "0.35", "rad, downward");
    add("camera.focal", T::kFloat, "250", "px");
    add("camera.u0", T::kFloat, "159.5", "px");
    add("camera.v0", T::kFloat, "47.5", "px");

    add("sensor.marker", T::kString, "cone", "cone | cylinder | solid_lane");
    add("sensor.marker_size", T::kFloat, "0", "marker size (m), 0 = kind default");
    add("sensor.feature_dim", T::kInt, "64", "distilled feature count");
    add("sensor.source_hz", T::kFloat, "20", "camera frame rate (Hz)");
    add("sensor.blur_sigma", T::kFloat, "0", "Gaussian blur (px), 0 = off");
    add("sensor.missing", T::kString, "", "lane:s_begin:s_end;... marker removal spans");

    add("reward.mode", T::kString, "wpg", "wpg | icg");
    add("reward.v_desired", T::kFloat, "0.75", "m/s");
    add("reward.v_max", T::kFloat, "1", "m/s");
    add("reward.omega_max", T::kFloat, "0.5", "rad/s");
    add("reward.e_x_cap", T::kFloat, "1", "m");

    add("termination.e_x_limit", T::kFloat, "1", "m");
    add("termination.e_theta_limit", T::kFloat, "0.1", "quaternion error");
    add("termination.max_steps", T::kInt, "1000", "steps");

    add("tracking.alpha", T::kInt, "0", "look-ahead rows");
    add("tracking.table_index", T::kInt, "-1", "fixed reference table, -1 = random");

    add("controller.type", T::kString, "policy", "pd | pure_pursuit | nmpc | policy | oracle");
    add("controller.source", T::kString, "vision", "vision | ground_truth");

    add("pd.kp", T::kFloat, "1.2", "");
    add("pd.kd", T::kFloat, "0.1", "");
    add("pd.v_ref", T::kFloat, "0.75", "m/s");
    add("pure_pursuit.lookahead", T::kFloat, "1.5", "m");
    add("pure_pursuit.v", T::kFloat, "0.75", "m/s");
    add("nmpc.horizon", T::kInt, "10", "steps");
    add("nmpc.dt", T::kFloat, "0.1", "s");
    add("nmpc.q_pos", T::kFloat, "10", "");
    add("nmpc.q_theta", T::kFloat, "1", "");
    add("nmpc.r_v", T::kFloat, "0.1", "");
    add("nmpc.r_omega", T::kFloat, "0.1", "");
    add("nmpc.max_iterations", T::kInt, "100", "QP iteration cap");
    add("nmpc.v_ref", T::kFloat, "0.75", "m/s");

    add("policy.file", T::kString, "", "policy CSV for controller = policy");

    add("cem.population", T::kInt, "64", "");
    add("cem.elite_fraction", T::kFloat, "0.25", "");
    add("cem.iterations", T::kInt, "100", "");
    add("cem.init_std", T::kFloat, "0.5", "");
    add("cem.min_std", T::kFloat, "0.01", "");
    add("cem.episodes_per_candidate", T::kInt, "3", "");
    add("cem.seed", T::kInt, "1", "");

    add("eval.episodes", T::kInt, "100", "");
    add("eval.seed", T::kInt, "7", "");
    add("eval.ds", T::kFloat, "0.01", "evaluation reference spacing (m)");
    add("eval.histogram_width", T::kFloat, "0.02", "e_x histogram bin width (m)");
    add("eval.curvature_edges", T::kFloatList, "0.001, 0.2, 0.4, 0.6, 0.8, 0.99", "1/m");

    add("sweep.ds_grid", T::kFloatList, "1, 0.75, 0.5, 0.25, 0.1", "m");
    add("sweep.v_grid", T::kFloatList, "0.75, 0.6, 0.45, 0.3, 0.15", "m/s");
    add("sweep.alpha_grid", T::kFloatList, "0, 1, 2, 3, 4", "rows");
    add("sweep.hz_grid", T::kFloatList, "20, 4, 2, 1", "Hz");
    add("sweep.markers", T::kStringList, "cone, cylinder, solid_lane", "");
    add("sweep.controllers", T::kStringList, "pd, pure_pursuit, nmpc, policy", "");
    add("sweep.action_spaces", T::kStringList, "body_twist, wheel_speeds", "");

    add("features.sizes", T::kFloatList, "16, 32, 64, 128, 256, 512, 1024, 2048", "");
    add("features.samples", T::kInt, "500", "rendered poses");
    add("features.seed", T::kInt, "3", "");
    add("features.reference", T::kString, "cone", "");
    add("features.others", T::kStringList, "cone, cylinder, solid_lane", "");
    return s;
  }

  std::map<std::string, std::string> values_;
};

}  // namespace lanekeep

#endif  // LANEKEEP_CONFIG_HPP_
