#pragma once

// Simulation of live deployment: detections from whole-scene video are cut
// into windows of tau frames, each (query, window) trial may raise an alert
// showing up to eta candidates, and a verifier checks the candidates against
// ground truth. The alert threshold beta is swept to produce FR / TVR curves.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "reidbench/ingest.hpp"
#include "reidbench/standard_eval.hpp"

namespace reidbench {

// {0, step, 2*step, ..., 1}. Grid points are i/n when 1/step is a whole
// number n, so 0.02 yields 51 exact-as-possible points ending at 1.0.
std::vector<double> make_beta_grid(double step);

struct LiveConfig {
  std::uint32_t tau = 1000;
  std::uint32_t eta = 20;
  std::vector<double> beta_grid = make_beta_grid(0.02);
  double iou_threshold = 0.5;
  std::vector<double> gammas = {0.5, 1.0, 2.0};
  SimilarityMetric metric = SimilarityMetric::kCosine;
  unsigned threads = 1;

  void validate() const;
};

struct Window {
  std::size_t index = 0;
  std::uint32_t begin = 0;  // inclusive
  std::uint32_t end = 0;    // exclusive
  std::span<const DetectionRecord> detections;
};

// Consecutive windows [0,tau), [tau,2tau), ... covering [0, frame_count);
// the last one may be partial. frame_count defaults to the last detection
// frame + 1.
std::vector<Window> segment_windows(const DetectionTrack& track, std::uint32_t tau,
                                    std::optional<std::uint32_t> frame_count = std::nullopt);

struct ScoredDetection {
  DetectionRecord detection;
  double score = 0.0;
  std::size_t order = 0;  // position within the window
};

std::vector<ScoredDetection> score_window(std::span<const DetectionRecord> detections, const QuerySpec& query,
                                          const EmbeddingStore& embeddings,
                                          SimilarityMetric metric = SimilarityMetric::kCosine);

struct AlertOutcome {
  std::size_t window = 0;
  bool alert_raised = false;
  std::vector<ScoredDetection> candidates;  // score desc, then frame, then order
  bool query_present_gt = false;
  bool query_found = false;
};

// Fills the alert and candidate fields; GT fields are left for the caller.
AlertOutcome raise_alert(std::span<const ScoredDetection> scored, double beta, std::uint32_t eta);

bool match_candidates_gt(std::span<const ScoredDetection> candidates, const VideoGroundTruth& gt,
                         std::int64_t identity_id, double iou_threshold);

struct LiveSequence {
  DetectionTrack track;
  VideoGroundTruth gt;
};

// Joins tracks and ground truth on video_id. A video with ground truth but no
// detections gets an empty track, and vice versa. Ordered by video_id.
std::vector<LiveSequence> pair_sequences(std::vector<DetectionTrack> tracks, std::vector<VideoGroundTruth> gts);

struct TrialCounts {
  std::size_t trials = 0;
  std::size_t present = 0;        // query visible in the window per GT
  std::size_t alerts = 0;         // alert raised
  std::size_t true_alerts = 0;    // alert raised and query among candidates
  std::size_t found_present = 0;  // present, alerted and found

  bool operator==(const TrialCounts&) const = default;
};

struct LivePoint {
  double beta = 0.0;
  double fr = 0.0;
  double tvr = 1.0;
  std::map<double, double> f_gamma;
  TrialCounts counts;
};

// Weighted harmonic mean (1 + g^2) * FR * TVR / (g^2 * FR + TVR); 0 when both
// rates are 0.
double f_gamma(double fr, double tvr, double gamma);

// FR = found_present / present (0 if never present);
// TVR = true_alerts / alerts (1 if no alert was raised).
LivePoint make_live_point(double beta, const TrialCounts& counts, std::span<const double> gammas);

LivePoint evaluate_at_beta(std::span<const LiveSequence> sequences, std::span<const QuerySpec> queries,
                           const EmbeddingStore& embeddings, const LiveConfig& config, double beta);

struct FStar {
  double gamma = 0.0;
  double value = 0.0;
  double beta = 0.0;
};

struct SweepResult {
  std::vector<LivePoint> points;
  std::vector<FStar> f_star;  // one per gamma, config order
  double live_map = 0.0;
  std::vector<std::string> warnings;
};

// Best F_gamma per gamma; ties resolve to the smallest beta.
std::vector<FStar> optimal_f_gamma(std::span<const LivePoint> points, std::span<const double> gammas);

// Trapezoidal area under TVR-vs-FR. Points sharing an FR keep their largest
// TVR; the anchor (0, 1) is prepended. No monotone envelope.
double live_map_from_points(std::span<const LivePoint> points);

SweepResult sweep(std::span<const LiveSequence> sequences, std::span<const QuerySpec> queries,
                  const EmbeddingStore& embeddings, const LiveConfig& config);

}  // namespace reidbench
