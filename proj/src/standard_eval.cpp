#include "reidbench/standard_eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "reidbench/error.hpp"
#include "reidbench/parallel.hpp"

namespace reidbench {

namespace {

double squared_norm(std::span<const float> u) {
  double s = 0.0;
  for (float x : u) s += static_cast<double>(x) * x;
  return s;
}

double dot(std::span<const float> u, std::span<const float> v) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += static_cast<double>(u[i]) * v[i];
  return s;
}

// Takes precomputed squared norms so the matrix path and the pairwise path
// round identically. sqrt(su * sv) is exact for u == v, which keeps
// self-similarity at exactly 1.
double cosine_score(std::span<const float> u, double su, std::span<const float> v, double sv) {
  const double c = std::clamp(dot(u, v) / std::sqrt(su * sv), -1.0, 1.0);
  return (1.0 + c) / 2.0;
}

double euclidean_score(std::span<const float> u, std::span<const float> v) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double d = static_cast<double>(u[i]) - v[i];
    s += d * d;
  }
  return 1.0 / (1.0 + std::sqrt(s));
}

void check_dims(std::span<const float> u, std::span<const float> v) {
  if (u.size() != v.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "dimensions " + std::to_string(u.size()) + " and " + std::to_string(v.size()));
  }
}

std::vector<double> squared_norms(const FeatureRows& rows, const char* what) {
  std::vector<double> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out[i] = squared_norm(rows[i]);
    if (out[i] == 0.0) throw Error(ErrorCode::kZeroVector, std::string(what) + " row " + std::to_string(i));
  }
  return out;
}

}  // namespace

std::string_view to_string(SimilarityMetric metric) {
  return metric == SimilarityMetric::kCosine ? "cosine" : "euclidean";
}

std::optional<SimilarityMetric> parse_similarity_metric(std::string_view text) {
  if (text == "cosine") return SimilarityMetric::kCosine;
  if (text == "euclidean") return SimilarityMetric::kEuclidean;
  return std::nullopt;
}

double similarity(std::span<const float> u, std::span<const float> v, SimilarityMetric metric) {
  check_dims(u, v);
  if (metric == SimilarityMetric::kEuclidean) return euclidean_score(u, v);
  const double su = squared_norm(u);
  const double sv = squared_norm(v);
  if (su == 0.0 || sv == 0.0) throw Error(ErrorCode::kZeroVector, "cosine similarity of a zero vector");
  return cosine_score(u, su, v, sv);
}

FeatureRows gather_rows(const EmbeddingStore& store, std::span<const ImageRecord> records) {
  FeatureRows rows;
  rows.reserve(records.size());
  for (const auto& r : records) rows.push_back(store.row(r.embedding_idx));
  return rows;
}

ScoreMatrix distance_matrix(const FeatureRows& queries, const FeatureRows& gallery, SimilarityMetric metric,
                            unsigned threads) {
  if (queries.empty() || gallery.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "distance matrix needs at least one query and one gallery row");
  }
  const std::size_t dim = queries.front().size();
  for (const auto& r : queries) check_dims(r, queries.front());
  for (const auto& r : gallery) {
    if (r.size() != dim) check_dims(queries.front(), r);
  }
  std::vector<double> qn;
  std::vector<double> gn;
  if (metric == SimilarityMetric::kCosine) {
    qn = squared_norms(queries, "query");
    gn = squared_norms(gallery, "gallery");
  }
  ScoreMatrix scores(queries.size(), gallery.size());
  parallel_for(queries.size(), threads, [&](std::size_t q) {
    for (std::size_t g = 0; g < gallery.size(); ++g) {
      scores.at(q, g) = metric == SimilarityMetric::kCosine ? cosine_score(queries[q], qn[q], gallery[g], gn[g])
                                                            : euclidean_score(queries[q], gallery[g]);
    }
  });
  return scores;
}

std::size_t RankingResult::match_count() const {
  return static_cast<std::size_t>(std::count(matches.begin(), matches.end(), true));
}

RankingResult rank_gallery(std::span<const double> scores, const ImageRecord& query,
                           std::span<const ImageRecord> gallery) {
  if (scores.size() != gallery.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "score row has " + std::to_string(scores.size()) +
                                                   " entries for a gallery of " + std::to_string(gallery.size()));
  }
  std::vector<std::size_t> order;
  order.reserve(gallery.size());
  for (std::size_t g = 0; g < gallery.size(); ++g) {
    const bool same_view = gallery[g].identity_id == query.identity_id && gallery[g].camera_id == query.camera_id;
    if (!same_view) order.push_back(g);
  }
  if (order.empty()) throw Error(ErrorCode::kEmptyGalleryAfterFilter, "query '" + query.image_id + "'");
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  RankingResult result;
  result.query_id = query.image_id;
  result.gallery_indices = order;
  result.scores.reserve(order.size());
  result.matches.reserve(order.size());
  for (std::size_t g : order) {
    result.scores.push_back(scores[g]);
    result.matches.push_back(gallery[g].identity_id == query.identity_id);
  }
  return result;
}

std::size_t first_match_rank(const RankingResult& ranking) {
  const auto it = std::find(ranking.matches.begin(), ranking.matches.end(), true);
  if (it == ranking.matches.end()) throw Error(ErrorCode::kNoMatchInGallery, "query '" + ranking.query_id + "'");
  return static_cast<std::size_t>(it - ranking.matches.begin()) + 1;
}

double cmc_at(std::span<const RankingResult> rankings, std::size_t n) {
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "rank n must be >= 1");
  if (rankings.empty()) throw Error(ErrorCode::kInvalidArgument, "no rankings");
  std::size_t hits = 0;
  for (const auto& r : rankings) {
    if (first_match_rank(r) <= n) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(rankings.size());
}

double average_precision(const RankingResult& ranking) {
  double sum = 0.0;
  std::size_t found = 0;
  for (std::size_t i = 0; i < ranking.matches.size(); ++i) {
    if (!ranking.matches[i]) continue;
    ++found;
    sum += static_cast<double>(found) / static_cast<double>(i + 1);
  }
  if (found == 0) throw Error(ErrorCode::kNoMatchInGallery, "query '" + ranking.query_id + "'");
  return sum / static_cast<double>(found);
}

double inverse_negative_penalty(const RankingResult& ranking) {
  const auto last = std::find(ranking.matches.rbegin(), ranking.matches.rend(), true);
  if (last == ranking.matches.rend()) throw Error(ErrorCode::kNoMatchInGallery, "query '" + ranking.query_id + "'");
  const auto hardest_rank = static_cast<std::size_t>(ranking.matches.rend() - last);
  return static_cast<double>(ranking.match_count()) / static_cast<double>(hardest_rank);
}

namespace {

template <typename PerQuery>
double mean_over(std::span<const RankingResult> rankings, PerQuery&& per_query) {
  if (rankings.empty()) throw Error(ErrorCode::kInvalidArgument, "no rankings");
  double sum = 0.0;
  for (const auto& r : rankings) sum += per_query(r);
  return sum / static_cast<double>(rankings.size());
}

}  // namespace

double mean_ap(std::span<const RankingResult> rankings) { return mean_over(rankings, average_precision); }

double minp(std::span<const RankingResult> rankings) { return mean_over(rankings, inverse_negative_penalty); }

std::vector<RankingResult> rank_all(const DatasetManifest& manifest, const EmbeddingStore& embeddings,
                                    SimilarityMetric metric, unsigned threads) {
  validate_manifest_against(manifest, embeddings);
  const auto queries = manifest.split_records(Split::kQuery);
  const auto gallery = manifest.split_records(Split::kGallery);
  if (queries.empty() || gallery.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "manifest '" + manifest.dataset_name + "' needs query and gallery images");
  }
  const auto scores = distance_matrix(gather_rows(embeddings, queries), gather_rows(embeddings, gallery), metric, threads);
  std::vector<RankingResult> rankings(queries.size());
  parallel_for(queries.size(), threads,
               [&](std::size_t q) { rankings[q] = rank_gallery(scores.row(q), queries[q], gallery); });
  return rankings;
}

StandardMetrics evaluate_standard(const DatasetManifest& manifest, const EmbeddingStore& embeddings,
                                  SimilarityMetric metric, unsigned threads) {
  const auto rankings = rank_all(manifest, embeddings, metric, threads);
  StandardMetrics m;
  m.rank1 = cmc_at(rankings, 1);
  m.rank5 = cmc_at(rankings, 5);
  m.rank10 = cmc_at(rankings, 10);
  m.map = mean_ap(rankings);
  m.minp = minp(rankings);
  return m;
}

}  // namespace reidbench
