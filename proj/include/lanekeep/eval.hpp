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

#ifndef LANEKEEP_EVAL_HPP_
#define LANEKEEP_EVAL_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "lanekeep/errors.hpp"
#include "lanekeep/geometry.hpp"
#include "lanekeep/policy.hpp"
#include "lanekeep/rng.hpp"
#include "lanekeep/sensor.hpp"
#include "lanekeep/track.hpp"
#include "lanekeep/tracking.hpp"

namespace lanekeep {

inline constexpr std::size_t kDefaultEvalEpisodes = 100;
inline constexpr double kEvalSpacing = 0.01;

struct MetricsRow {
  double mean_e_x = 0.0;
  double mean_e_theta = 0.0;
  double mean_e_v = 0.0;         // mean |v - v_d|, m/s
  double mean_e_v_signed = 0.0;  // mean (v - v_d); negative when too slow
  double mean_v = 0.0;
  double S_term = 0.0;
  double N = 0.0;
  double mean_reward = 0.0;  // mean episode return
  std::size_t episodes = 0;
  std::size_t steps = 0;
  std::size_t early_terminations = 0;
};

inline double normalized_error(double mean_e_x, double mean_e_v, double S_term) {
  if (!(S_term > 0.0)) {
    throw DomainError("normalized_error: undefined for S_term <= 0");
  }
  return std::abs(mean_e_x + mean_e_v) / S_term;
}

// Step-weighted means over every step of every record.
inline MetricsRow aggregate(const std::vector<EpisodeRecord>& records,
                            double v_desired) {
  MetricsRow m;
  m.episodes = records.size();
  for (const auto& r : records) {
    for (const auto& s : r.steps) {
      m.mean_e_x += s.e_x;
      m.mean_e_theta += s.e_theta;
      m.mean_e_v += std::abs(s.twist.v - v_desired);
      m.mean_e_v_signed += s.twist.v - v_desired;
      m.mean_v += s.twist.v;
      ++m.steps;
    }
    m.S_term += r.final_S();
    m.mean_reward += r.episode_return();
    if (r.done_reason != DoneReason::kMaxSteps) ++m.early_terminations;
  }
  if (m.steps > 0) {
    const double n = static_cast<double>(m.steps);
    m.mean_e_x /= n;
    m.mean_e_theta /= n;
    m.mean_e_v /= n;
    m.mean_e_v_signed /= n;
    m.mean_v /= n;
  }
  if (m.episodes > 0) {
    m.S_term /= static_cast<double>(m.episodes);
    m.mean_reward /= static_cast<double>(m.episodes);
  }
  m.N = m.S_term > 0.0 ? normalized_error(m.mean_e_x, m.mean_e_v, m.S_term) : 0.0;
  return m;
}

inline std::vector<std::uint64_t> eval_seeds(std::uint64_t seed, std::size_t n) {
  std::vector<std::uint64_t> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = derive_seed(seed, 0x4556414CULL, i);
  return out;
}

struct EvalResult {
  std::vector<EpisodeRecord> records;
  MetricsRow metrics;
};

inline EvalResult run_eval(const TrainEnv& env, const ActorFactory& factory,
                           std::size_t episodes, std::uint64_t seed,
                           std::size_t jobs = 1) {
  if (episodes < 1) throw DomainError("run_eval: episodes must be >= 1");
  const auto seeds = eval_seeds(seed, episodes);
  const RewardFn reward = make_reward(env.reward_mode);
  EvalResult res;
  res.records.resize(episodes);
  parallel_for(episodes, jobs, [&](std::size_t i) {
    res.records[i] = run_episode(*env.scene, env.episode, reward, factory(), seeds[i]);
  });
  res.metrics = aggregate(res.records, env.episode.weights.v_desired);
  return res;
}

inline const std::vector<double>& default_curvature_edges() {
  static const std::vector<double> kEdges{0.001, 0.2, 0.4, 0.6, 0.8, 0.99};
  return kEdges;
}

struct CurvatureBin {
  double kappa_lo = 0.0;
  double kappa_hi = 0.0;
  double mean_e_x = 0.0;
  double mean_v = 0.0;
  std::size_t samples = 0;
};

struct CurvatureReport {
  std::vector<CurvatureBin> bins;
  std::size_t overflow = 0;
};

// Bin index for curvature k; straights below the first edge join the first
// bin, anything above the last edge is overflow (-1).
inline int curvature_bin(double k, const std::vector<double>& edges) {
  if (k > edges.back()) return -1;
  const auto it = std::upper_bound(edges.begin(), edges.end(), k);
  const int i = static_cast<int>(it - edges.begin()) - 1;
  return std::clamp(i, 0, static_cast<int>(edges.size()) - 2);
}

inline CurvatureReport bin_by_curvature(const std::vector<EpisodeRecord>& records,
                                        const Scene& scene,
                                        const std::vector<double>& edges =
                                            default_curvature_edges()) {
  if (edges.size() < 2) throw DomainError("bin_by_curvature: need >= 2 edges");
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (!(edges[i] > edges[i - 1])) {
      throw DomainError("bin_by_curvature: edges not strictly increasing");
    }
  }
  CurvatureReport rep;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    rep.bins.push_back({edges[i], edges[i + 1], 0.0, 0.0, 0});
  }
  for (const auto& r : records) {
    const RefTable& table = scene.tables.at(r.table_index);
    const ArcPath& path = scene.paths().at(r.table_index);
    for (const auto& s : r.steps) {
      const int b = curvature_bin(curvature_at(path, table[s.i_star].S), edges);
      if (b < 0) {
        ++rep.overflow;
        continue;
      }
      auto& bin = rep.bins[static_cast<std::size_t>(b)];
      bin.mean_e_x += s.e_x;
      bin.mean_v += s.twist.v;
      ++bin.samples;
    }
  }
  for (auto& b : rep.bins) {
    if (b.samples > 0) {
      b.mean_e_x /= static_cast<double>(b.samples);
      b.mean_v /= static_cast<double>(b.samples);
    }
  }
  return rep;
}

struct ErrorHistogram {
  double bin_width = 0.0;
  std::vector<std::size_t> counts;
  double mean = 0.0;
  double stddev = 0.0;
};

inline ErrorHistogram error_histogram(const std::vector<double>& values,
                                      double bin_width) {
  if (!(bin_width > 0.0)) throw DomainError("error_histogram: bin_width <= 0");
  ErrorHistogram h;
  h.bin_width = bin_width;
  double hi = 0.0;
  for (double v : values) {
    h.mean += v;
    hi = std::max(hi, v);
  }
  const std::size_t nbins =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(hi / bin_width)));
  h.counts.assign(nbins, 0);
  if (values.empty()) return h;
  h.mean /= static_cast<double>(values.size());
  for (double v : values) {
    const double dv = v - h.mean;
    h.stddev += dv * dv;
    std::size_t i = static_cast<std::size_t>(std::max(0.0, std::floor(v / bin_width)));
    h.counts[std::min(i, nbins - 1)] += 1;
  }
  h.stddev = std::sqrt(h.stddev / static_cast<double>(values.size()));
  return h;
}

inline ErrorHistogram error_histogram(const std::vector<EpisodeRecord>& records,
                                      double bin_width) {
  std::vector<double> v;
  for (const auto& r : records) {
    for (const auto& s : r.steps) v.push_back(s.e_x);
  }
  return error_histogram(v, bin_width);
}

// ---------------------------------------------------------------------------
// Feature distribution study

inline constexpr std::size_t kKlBins = 20;
inline constexpr double kKlSmoothing = 1e-6;

struct FeatureHistogram {
  std::size_t dims = 0;
  std::vector<double> counts;  // dims x kKlBins
  std::size_t samples = 0;

  explicit FeatureHistogram(std::size_t d) : dims(d), counts(d * kKlBins, 0.0) {}

  void add(const FeatureVec& f) {
    for (std::size_t i = 0; i < dims; ++i) {
      const auto b = std::min<std::size_t>(
          kKlBins - 1, static_cast<std::size_t>(std::max(0.0, f[i]) * kKlBins));
      counts[i * kKlBins + b] += 1.0;
    }
    ++samples;
  }
};

// KL(p || q) per dimension with additive smoothing, averaged over dimensions.
inline double histogram_kl(const FeatureHistogram& p, const FeatureHistogram& q) {
  if (p.dims != q.dims) throw DomainError("histogram_kl: dimension mismatch");
  if (p.samples == 0 || q.samples == 0) throw DomainError("histogram_kl: empty");
  const double norm = 1.0 + kKlBins * kKlSmoothing;
  double total = 0.0;
  for (std::size_t i = 0; i < p.dims; ++i) {
    double kl = 0.0;
    for (std::size_t b = 0; b < kKlBins; ++b) {
      const double pb = (p.counts[i * kKlBins + b] / p.samples + kKlSmoothing) / norm;
      const double qb = (q.counts[i * kKlBins + b] / q.samples + kKlSmoothing) / norm;
      kl += pb * std::log(pb / qb);
    }
    total += kl;
  }
  return total / static_cast<double>(p.dims);
}

// Poses scattered around the reference tables: random row, lateral and
// heading jitter.
inline std::vector<Pose2D> sample_poses(const TrackSpec& track, std::size_t n,
                                        std::uint64_t seed,
                                        double lateral = 0.3,
                                        double heading = 0.15) {
  Rng rng(seed);
  std::vector<Pose2D> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const RefTable& t = track.ref_tables[rng.below(track.ref_tables.size())];
    const Pose2D p = t[rng.below(t.size())].pose();
    const double dy = rng.uniform(-lateral, lateral);
    const double dth = rng.uniform(-heading, heading);
    out.push_back(make_pose(p.x - dy * std::sin(p.theta),
                            p.y + dy * std::cos(p.theta), p.theta + dth));
  }
  return out;
}

inline std::vector<std::size_t> default_feature_sizes() {
  return {16, 32, 64, 128, 256, 512, 1024, 2048};
}

struct KlRow {
  std::size_t d = 0;
  std::string kind;
  double kl = 0.0;
};

inline std::vector<FeatureHistogram> feature_histograms(
    const TrackSpec& track, const CameraModel& cam, MarkerKind kind,
    const std::vector<Pose2D>& poses, const std::vector<std::size_t>& sizes) {
  const Renderer renderer(track, cam, kind);
  std::vector<FeatureHistogram> hist;
  for (std::size_t d : sizes) hist.emplace_back(d);
  BinaryImage img;
  for (const auto& pose : poses) {
    renderer.render_into(pose, img, {});
    for (std::size_t k = 0; k < sizes.size(); ++k) hist[k].add(distill(img, sizes[k]));
  }
  return hist;
}

// KL(other || reference) of distilled features over one shared pose set.
inline std::vector<KlRow> feature_kl(const TrackSpec& track, const CameraModel& cam,
                                     MarkerKind reference,
                                     const std::vector<MarkerKind>& others,
                                     const std::vector<std::size_t>& sizes,
                                     std::size_t samples, std::uint64_t seed) {
  if (samples < 100) throw DomainError("feature_kl: samples must be >= 100");
  const auto poses = sample_poses(track, samples, seed);
  const auto ref = feature_histograms(track, cam, reference, poses, sizes);
  std::vector<KlRow> rows;
  for (const auto& kind : others) {
    const auto hist = feature_histograms(track, cam, kind, poses, sizes);
    for (std::size_t k = 0; k < sizes.size(); ++k) {
      rows.push_back({sizes[k], to_string(kind.type), histogram_kl(hist[k], ref[k])});
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// CSV writers (floats at 6 significant digits)

inline std::string fmt6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

inline const char* metrics_header() {
  return "mean_e_x,mean_e_theta,mean_e_v,S_term,N,mean_reward";
}

inline std::string metrics_cells(const MetricsRow& m) {
  return fmt6(m.mean_e_x) + "," + fmt6(m.mean_e_theta) + "," + fmt6(m.mean_e_v) +
         "," + fmt6(m.S_term) + "," + fmt6(m.N) + "," + fmt6(m.mean_reward);
}

inline void write_metrics_csv(std::ostream& out, const MetricsRow& m) {
  out << metrics_header() << ",mean_e_v_signed,mean_v,episodes,early_terminations\n";
  out << metrics_cells(m) << "," << fmt6(m.mean_e_v_signed) << "," << fmt6(m.mean_v)
      << "," << m.episodes << "," << m.early_terminations << "\n";
}

inline void write_curvature_csv(std::ostream& out, const CurvatureReport& rep) {
  out << "kappa_lo,kappa_hi,mean_e_x,mean_v,samples\n";
  for (const auto& b : rep.bins) {
    out << fmt6(b.kappa_lo) << "," << fmt6(b.kappa_hi) << "," << fmt6(b.mean_e_x)
        << "," << fmt6(b.mean_v) << "," << b.samples << "\n";
  }
  out << "# overflow=" << rep.overflow << "\n";
}

inline void write_histogram_csv(std::ostream& out, const ErrorHistogram& h) {
  out << "bin_lo,bin_hi,count\n";
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    out << fmt6(h.bin_width * i) << "," << fmt6(h.bin_width * (i + 1)) << ","
        << h.counts[i] << "\n";
  }
  out << "# mean=" << fmt6(h.mean) << " std=" << fmt6(h.stddev) << "\n";
}

inline void write_kl_csv(std::ostream& out, const std::vector<KlRow>& rows) {
  out << "d,kind,kl\n";
  for (const auto& r : rows) out << r.d << "," << r.kind << "," << fmt6(r.kl) << "\n";
}

}  // namespace lanekeep

#endif  // LANEKEEP_EVAL_HPP_
