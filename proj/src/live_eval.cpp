#include "reidbench/live_eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "reidbench/error.hpp"
#include "reidbench/parallel.hpp"

namespace reidbench {

namespace {

constexpr std::size_t kNoMatch = std::numeric_limits<std::size_t>::max();

bool candidate_before(const ScoredDetection& a, const ScoredDetection& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.detection.frame_idx != b.detection.frame_idx) return a.detection.frame_idx < b.detection.frame_idx;
  return a.order < b.order;
}

std::uint32_t frame_extent(const LiveSequence& seq) {
  std::uint32_t extent = 0;
  if (!seq.track.frames.empty()) extent = seq.track.frames.back().frame_idx + 1;
  for (const auto& e : seq.gt.entries) extent = std::max(extent, e.frame_idx + 1);
  return extent;
}

bool query_present(const VideoGroundTruth& gt, std::int64_t identity_id, const Window& window) {
  const auto lo = std::lower_bound(gt.entries.begin(), gt.entries.end(), window.begin,
                                   [](const GroundTruthEntry& e, std::uint32_t f) { return e.frame_idx < f; });
  for (auto it = lo; it != gt.entries.end() && it->frame_idx < window.end; ++it) {
    if (it->identity_id == identity_id) return true;
  }
  return false;
}

bool matches_gt(const DetectionRecord& det, const VideoGroundTruth& gt, std::int64_t identity_id,
                double iou_threshold) {
  auto it = std::lower_bound(gt.entries.begin(), gt.entries.end(), det.frame_idx,
                             [](const GroundTruthEntry& e, std::uint32_t f) { return e.frame_idx < f; });
  for (; it != gt.entries.end() && it->frame_idx == det.frame_idx; ++it) {
    if (it->identity_id == identity_id && iou(det.bbox, it->bbox) >= iou_threshold) return true;
  }
  return false;
}

struct TrialRef {
  std::size_t sequence;
  std::size_t window;
  std::size_t query;
};

struct Trials {
  std::vector<std::vector<Window>> windows;  // per sequence
  std::vector<TrialRef> refs;
};

Trials enumerate_trials(std::span<const LiveSequence> sequences, std::span<const QuerySpec> queries,
                        const LiveConfig& config) {
  if (sequences.empty() || queries.empty()) throw Error(ErrorCode::kNoTrials, "need at least one sequence and one query");
  Trials t;
  t.windows.reserve(sequences.size());
  for (std::size_t s = 0; s < sequences.size(); ++s) {
    t.windows.push_back(segment_windows(sequences[s].track, config.tau, frame_extent(sequences[s])));
    for (std::size_t w = 0; w < t.windows[s].size(); ++w) {
      for (std::size_t q = 0; q < queries.size(); ++q) t.refs.push_back(TrialRef{s, w, q});
    }
  }
  if (t.refs.empty()) throw Error(ErrorCode::kNoTrials, "no frames in any sequence");
  return t;
}

// Ranked scores of one trial, reusable across thresholds.
struct PreparedTrial {
  bool present = false;
  std::vector<double> scores;             // candidate order
  std::size_t first_match = kNoMatch;     // position in `scores`
};

}  // namespace

std::vector<double> make_beta_grid(double step) {
  if (!(step > 0.0 && step <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "beta step must lie in (0,1]");
  std::vector<double> grid;
  const double n = std::round(1.0 / step);
  if (std::abs(n * step - 1.0) < 1e-9) {
    for (int i = 0; i <= static_cast<int>(n); ++i) grid.push_back(i / n);
  } else {
    for (int i = 0; i * step <= 1.0 + 1e-12; ++i) grid.push_back(std::min(1.0, i * step));
  }
  return grid;
}

void LiveConfig::validate() const {
  if (tau < 1) throw Error(ErrorCode::kInvalidArgument, "tau must be >= 1");
  if (eta < 1) throw Error(ErrorCode::kInvalidArgument, "eta must be >= 1");
  if (beta_grid.empty()) throw Error(ErrorCode::kInvalidArgument, "beta grid is empty");
  for (std::size_t i = 0; i < beta_grid.size(); ++i) {
    if (!(beta_grid[i] >= 0.0 && beta_grid[i] <= 1.0)) {
      throw Error(ErrorCode::kInvalidArgument, "beta values must lie in [0,1]");
    }
    if (i > 0 && !(beta_grid[i] > beta_grid[i - 1])) {
      throw Error(ErrorCode::kInvalidArgument, "beta grid must be strictly increasing");
    }
  }
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "IoU threshold must lie in (0,1]");
  }
  if (gammas.empty() || std::any_of(gammas.begin(), gammas.end(), [](double g) { return !(g > 0.0); })) {
    throw Error(ErrorCode::kInvalidArgument, "gamma values must be > 0");
  }
}

std::vector<Window> segment_windows(const DetectionTrack& track, std::uint32_t tau,
                                    std::optional<std::uint32_t> frame_count) {
  if (tau < 1) throw Error(ErrorCode::kInvalidArgument, "tau must be >= 1");
  std::uint32_t extent = frame_count.value_or(track.frames.empty() ? 0 : track.frames.back().frame_idx + 1);
  if (!track.frames.empty()) extent = std::max(extent, track.frames.back().frame_idx + 1);

  std::vector<Window> windows;
  const std::span<const DetectionRecord> all(track.frames);
  std::size_t cursor = 0;
  for (std::uint64_t begin = 0; begin < extent; begin += tau) {
    Window w;
    w.index = windows.size();
    w.begin = static_cast<std::uint32_t>(begin);
    w.end = static_cast<std::uint32_t>(std::min<std::uint64_t>(begin + tau, extent));
    const std::size_t first = cursor;
    while (cursor < all.size() && all[cursor].frame_idx < w.end) ++cursor;
    w.detections = all.subspan(first, cursor - first);
    windows.push_back(w);
  }
  return windows;
}

std::vector<ScoredDetection> score_window(std::span<const DetectionRecord> detections, const QuerySpec& query,
                                          const EmbeddingStore& embeddings, SimilarityMetric metric) {
  std::vector<ScoredDetection> scored;
  scored.reserve(detections.size());
  for (std::size_t i = 0; i < detections.size(); ++i) {
    const double s = similarity(query.embedding, embeddings.row(detections[i].embedding_idx), metric);
    scored.push_back(ScoredDetection{detections[i], s, i});
  }
  return scored;
}

AlertOutcome raise_alert(std::span<const ScoredDetection> scored, double beta, std::uint32_t eta) {
  AlertOutcome out;
  std::vector<ScoredDetection> above;
  std::copy_if(scored.begin(), scored.end(), std::back_inserter(above),
               [beta](const ScoredDetection& d) { return d.score >= beta; });
  out.alert_raised = !above.empty();
  const std::size_t shown = std::min<std::size_t>(eta, above.size());
  std::partial_sort(above.begin(), above.begin() + static_cast<std::ptrdiff_t>(shown), above.end(), candidate_before);
  above.resize(shown);
  out.candidates = std::move(above);
  return out;
}

bool match_candidates_gt(std::span<const ScoredDetection> candidates, const VideoGroundTruth& gt,
                         std::int64_t identity_id, double iou_threshold) {
  return std::any_of(candidates.begin(), candidates.end(), [&](const ScoredDetection& c) {
    return matches_gt(c.detection, gt, identity_id, iou_threshold);
  });
}

std::vector<LiveSequence> pair_sequences(std::vector<DetectionTrack> tracks, std::vector<VideoGroundTruth> gts) {
  std::map<std::string, LiveSequence> joined;
  std::set<std::string> seen_tracks;
  std::set<std::string> seen_gts;
  for (auto& t : tracks) {
    if (!seen_tracks.insert(t.video_id).second) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate track '" + t.video_id + "'");
    }
    auto& seq = joined[t.video_id];
    seq.gt.video_id = t.video_id;
    seq.track = std::move(t);
  }
  for (auto& g : gts) {
    if (!seen_gts.insert(g.video_id).second) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate ground truth '" + g.video_id + "'");
    }
    auto& seq = joined[g.video_id];
    if (seq.track.video_id.empty()) seq.track.video_id = g.video_id;
    seq.gt = std::move(g);
  }
  std::vector<LiveSequence> out;
  out.reserve(joined.size());
  for (auto& [id, seq] : joined) out.push_back(std::move(seq));
  return out;
}

double f_gamma(double fr, double tvr, double gamma) {
  const double g2 = gamma * gamma;
  const double denom = g2 * fr + tvr;
  if (denom == 0.0) return 0.0;
  return (1.0 + g2) * fr * tvr / denom;
}

LivePoint make_live_point(double beta, const TrialCounts& counts, std::span<const double> gammas) {
  LivePoint p;
  p.beta = beta;
  p.counts = counts;
  p.fr = counts.present == 0 ? 0.0 : static_cast<double>(counts.found_present) / static_cast<double>(counts.present);
  p.tvr = counts.alerts == 0 ? 1.0 : static_cast<double>(counts.true_alerts) / static_cast<double>(counts.alerts);
  for (double g : gammas) p.f_gamma[g] = f_gamma(p.fr, p.tvr, g);
  return p;
}

LivePoint evaluate_at_beta(std::span<const LiveSequence> sequences, std::span<const QuerySpec> queries,
                           const EmbeddingStore& embeddings, const LiveConfig& config, double beta) {
  config.validate();
  if (!(beta >= 0.0 && beta <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "beta must lie in [0,1]");
  const Trials trials = enumerate_trials(sequences, queries, config);

  std::vector<AlertOutcome> outcomes(trials.refs.size());
  parallel_for(trials.refs.size(), config.threads, [&](std::size_t i) {
    const auto& ref = trials.refs[i];
    const auto& seq = sequences[ref.sequence];
    const auto& window = trials.windows[ref.sequence][ref.window];
    const auto& query = queries[ref.query];
    const auto scored = score_window(window.detections, query, embeddings, config.metric);
    AlertOutcome out = raise_alert(scored, beta, config.eta);
    out.window = window.index;
    out.query_present_gt = query_present(seq.gt, query.identity_id, window);
    out.query_found = out.alert_raised && match_candidates_gt(out.candidates, seq.gt, query.identity_id,
                                                              config.iou_threshold);
    outcomes[i] = std::move(out);
  });

  TrialCounts counts;
  for (const auto& o : outcomes) {
    ++counts.trials;
    counts.present += o.query_present_gt;
    counts.alerts += o.alert_raised;
    counts.true_alerts += o.query_found;
    counts.found_present += o.query_present_gt && o.query_found;
  }
  return make_live_point(beta, counts, config.gammas);
}

std::vector<FStar> optimal_f_gamma(std::span<const LivePoint> points, std::span<const double> gammas) {
  std::vector<FStar> best;
  for (double g : gammas) {
    FStar f{g, -1.0, 0.0};
    for (const auto& p : points) {
      const auto it = p.f_gamma.find(g);
      const double v = it != p.f_gamma.end() ? it->second : f_gamma(p.fr, p.tvr, g);
      if (v > f.value || (v == f.value && p.beta < f.beta)) {
        f.value = v;
        f.beta = p.beta;
      }
    }
    if (points.empty()) f.value = 0.0;
    best.push_back(f);
  }
  return best;
}

double live_map_from_points(std::span<const LivePoint> points) {
  std::map<double, double> curve;
  for (const auto& p : points) {
    auto [it, inserted] = curve.try_emplace(p.fr, p.tvr);
    if (!inserted) it->second = std::max(it->second, p.tvr);
  }
  double area = 0.0;
  double prev_fr = 0.0;
  double prev_tvr = 1.0;
  for (const auto& [fr, tvr] : curve) {
    area += (fr - prev_fr) * (prev_tvr + tvr) / 2.0;
    prev_fr = fr;
    prev_tvr = tvr;
  }
  return area;
}

SweepResult sweep(std::span<const LiveSequence> sequences, std::span<const QuerySpec> queries,
                  const EmbeddingStore& embeddings, const LiveConfig& config) {
  config.validate();
  const Trials trials = enumerate_trials(sequences, queries, config);

  std::vector<PreparedTrial> prepared(trials.refs.size());
  parallel_for(trials.refs.size(), config.threads, [&](std::size_t i) {
    const auto& ref = trials.refs[i];
    const auto& seq = sequences[ref.sequence];
    const auto& window = trials.windows[ref.sequence][ref.window];
    const auto& query = queries[ref.query];
    auto scored = score_window(window.detections, query, embeddings, config.metric);
    std::sort(scored.begin(), scored.end(), candidate_before);
    PreparedTrial& t = prepared[i];
    t.present = query_present(seq.gt, query.identity_id, window);
    t.scores.reserve(scored.size());
    for (std::size_t k = 0; k < scored.size(); ++k) {
      t.scores.push_back(scored[k].score);
      if (t.first_match == kNoMatch && matches_gt(scored[k].detection, seq.gt, query.identity_id, config.iou_threshold)) {
        t.first_match = k;
      }
    }
  });

  SweepResult result;
  result.points.reserve(config.beta_grid.size());
  for (double beta : config.beta_grid) {
    TrialCounts counts;
    for (const auto& t : prepared) {
      const auto above = static_cast<std::size_t>(
          std::partition_point(t.scores.begin(), t.scores.end(), [beta](double s) { return s >= beta; }) -
          t.scores.begin());
      const bool alert = above > 0;
      const bool found = t.first_match < std::min<std::size_t>(above, config.eta);
      ++counts.trials;
      counts.present += t.present;
      counts.alerts += alert;
      counts.true_alerts += found;
      counts.found_present += t.present && found;
    }
    result.points.push_back(make_live_point(beta, counts, config.gammas));
  }
  if (!result.points.empty() && result.points.front().counts.present == 0) {
    result.warnings.push_back("the query is never present in any window; FR is reported as 0");
  }
  result.f_star = optimal_f_gamma(result.points, config.gammas);
  result.live_map = live_map_from_points(result.points);
  return result;
}

}  // namespace reidbench
