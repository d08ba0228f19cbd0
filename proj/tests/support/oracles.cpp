#include "oracles.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>

namespace reidbench::oracle {

double pair_similarity(std::span<const float> u, std::span<const float> v, SimilarityMetric metric) {
  if (metric == SimilarityMetric::kEuclidean) {
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += (double(u[i]) - v[i]) * (double(u[i]) - v[i]);
    return 1.0 / (1.0 + std::sqrt(s));
  }
  double uv = 0.0, uu = 0.0, vv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    uv += double(u[i]) * v[i];
    uu += double(u[i]) * u[i];
    vv += double(v[i]) * v[i];
  }
  return (1.0 + std::clamp(uv / std::sqrt(uu * vv), -1.0, 1.0)) / 2.0;
}

std::vector<QueryMetrics> brute_force_queries(const DatasetManifest& manifest, const EmbeddingStore& store,
                                              SimilarityMetric metric) {
  std::vector<const ImageRecord*> queries, gallery;
  for (const auto& r : manifest.records) {
    if (r.split == Split::kQuery) queries.push_back(&r);
    if (r.split == Split::kGallery) gallery.push_back(&r);
  }
  std::vector<QueryMetrics> out;
  for (const auto* q : queries) {
    std::vector<double> score(gallery.size());
    std::vector<bool> valid(gallery.size());
    for (std::size_t j = 0; j < gallery.size(); ++j) {
      score[j] = pair_similarity(store.row(q->embedding_idx), store.row(gallery[j]->embedding_idx), metric);
      valid[j] = !(gallery[j]->identity_id == q->identity_id && gallery[j]->camera_id == q->camera_id);
    }
    std::vector<std::size_t> match_ranks;
    for (std::size_t j = 0; j < gallery.size(); ++j) {
      if (!valid[j] || gallery[j]->identity_id != q->identity_id) continue;
      std::size_t rank = 1;
      for (std::size_t k = 0; k < gallery.size(); ++k) {
        if (valid[k] && (score[k] > score[j] || (score[k] == score[j] && k < j))) ++rank;
      }
      match_ranks.push_back(rank);
    }
    QueryMetrics m;
    m.first_rank = *std::min_element(match_ranks.begin(), match_ranks.end());
    double ap = 0.0;
    for (std::size_t r : match_ranks) {
      const auto at_or_above = std::count_if(match_ranks.begin(), match_ranks.end(), [r](std::size_t x) { return x <= r; });
      ap += double(at_or_above) / double(r);
    }
    m.ap = ap / double(match_ranks.size());
    m.inp = double(match_ranks.size()) / double(*std::max_element(match_ranks.begin(), match_ranks.end()));
    out.push_back(m);
  }
  return out;
}

StandardMetrics brute_force_standard(const DatasetManifest& manifest, const EmbeddingStore& store,
                                     SimilarityMetric metric) {
  const auto per_query = brute_force_queries(manifest, store, metric);
  StandardMetrics s;
  const double n = double(per_query.size());
  for (const auto& q : per_query) {
    s.rank1 += q.first_rank <= 1;
    s.rank5 += q.first_rank <= 5;
    s.rank10 += q.first_rank <= 10;
    s.map += q.ap;
    s.minp += q.inp;
  }
  s.rank1 /= n;
  s.rank5 /= n;
  s.rank10 /= n;
  s.map /= n;
  s.minp /= n;
  return s;
}

double box_iou(const BBox& a, const BBox& b) {
  const double x1 = std::max(a.x, b.x), y1 = std::max(a.y, b.y);
  const double x2 = std::min(a.x + a.w, b.x + b.w), y2 = std::min(a.y + a.h, b.y + b.h);
  if (x2 <= x1 || y2 <= y1) return 0.0;
  const double inter = (x2 - x1) * (y2 - y1);
  return inter / (a.w * a.h + b.w * b.h - inter);
}

std::vector<ScoredDetection> full_sort_top(std::vector<ScoredDetection> scored, double beta, std::size_t k) {
  std::stable_sort(scored.begin(), scored.end(), [](const ScoredDetection& a, const ScoredDetection& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.detection.frame_idx < b.detection.frame_idx;
  });
  std::vector<ScoredDetection> out;
  for (const auto& s : scored) {
    if (s.score >= beta && out.size() < k) out.push_back(s);
  }
  return out;
}

TrialCounts brute_force_live_counts(std::span<const LiveSequence> sequences, std::span<const QuerySpec> queries,
                                    const EmbeddingStore& store, const LiveConfig& config, double beta) {
  TrialCounts c;
  for (const auto& seq : sequences) {
    std::uint32_t last = 0;
    bool any = false;
    for (const auto& d : seq.track.frames) last = std::max(last, d.frame_idx), any = true;
    for (const auto& e : seq.gt.entries) last = std::max(last, e.frame_idx), any = true;
    if (!any) continue;
    const std::uint32_t windows = last / config.tau + 1;
    for (std::uint32_t w = 0; w < windows; ++w) {
      for (const auto& q : queries) {
        bool present = false;
        for (const auto& e : seq.gt.entries) present |= e.identity_id == q.identity_id && e.frame_idx / config.tau == w;
        std::vector<ScoredDetection> scored;
        for (const auto& d : seq.track.frames) {
          if (d.frame_idx / config.tau != w) continue;
          scored.push_back(ScoredDetection{d, pair_similarity(q.embedding, store.row(d.embedding_idx), config.metric),
                                           scored.size()});
        }
        const bool alert = std::any_of(scored.begin(), scored.end(), [beta](const auto& s) { return s.score >= beta; });
        bool found = false;
        for (const auto& cand : full_sort_top(scored, beta, config.eta)) {
          for (const auto& e : seq.gt.entries) {
            found |= e.frame_idx == cand.detection.frame_idx && e.identity_id == q.identity_id &&
                     box_iou(cand.detection.bbox, e.bbox) >= config.iou_threshold;
          }
        }
        ++c.trials;
        c.present += present;
        c.alerts += alert;
        c.true_alerts += alert && found;
        c.found_present += present && alert && found;
      }
    }
  }
  return c;
}

double t_cdf_quadrature(double t, double df) {
  const double norm = std::exp(std::lgamma((df + 1.0) / 2.0) - std::lgamma(df / 2.0)) / std::sqrt(df * std::numbers::pi);
  const auto density = [&](double x) { return norm * std::pow(1.0 + x * x / df, -(df + 1.0) / 2.0); };
  const double half = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(density, 0.0, std::abs(t), 15, 1e-15);
  return t >= 0.0 ? 0.5 + half : 0.5 - half;
}

}  // namespace reidbench::oracle
