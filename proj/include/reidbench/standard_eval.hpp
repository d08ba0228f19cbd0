#pragma once

// Closed-set retrieval metrics over query / gallery embeddings: CMC rank-n,
// mean average precision and mean inverse negative penalty.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "reidbench/ingest.hpp"

namespace reidbench {

enum class SimilarityMetric { kCosine, kEuclidean };

std::string_view to_string(SimilarityMetric metric);
std::optional<SimilarityMetric> parse_similarity_metric(std::string_view text);

// Similarity in [0,1], 1 meaning identical direction (cosine) or identical
// point (euclidean):
//   cosine:    (1 + cos(u, v)) / 2
//   euclidean: 1 / (1 + |u - v|)
// Throws DimensionMismatch, and ZeroVector for a zero-norm input in cosine mode.
double similarity(std::span<const float> u, std::span<const float> v, SimilarityMetric metric);

class ScoreMatrix {
 public:
  ScoreMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), values_(rows * cols, 0.0) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double& at(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double at(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
  std::span<const double> row(std::size_t r) const { return std::span<const double>(values_).subspan(r * cols_, cols_); }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> values_;
};

using FeatureRows = std::vector<std::span<const float>>;

FeatureRows gather_rows(const EmbeddingStore& store, std::span<const ImageRecord> records);

ScoreMatrix distance_matrix(const FeatureRows& queries, const FeatureRows& gallery, SimilarityMetric metric,
                            unsigned threads = 1);

struct RankingResult {
  std::string query_id;
  // Positions into the caller's gallery list, best first.
  std::vector<std::size_t> gallery_indices;
  std::vector<double> scores;
  std::vector<bool> matches;

  std::size_t match_count() const;
};

// Drops gallery entries sharing both identity and camera with the query, then
// sorts by score descending with ties broken by ascending gallery index.
RankingResult rank_gallery(std::span<const double> scores, const ImageRecord& query,
                           std::span<const ImageRecord> gallery);

// 1-based rank of the first true match; NoMatchInGallery if there is none.
std::size_t first_match_rank(const RankingResult& ranking);

double cmc_at(std::span<const RankingResult> rankings, std::size_t n);
double average_precision(const RankingResult& ranking);
double mean_ap(std::span<const RankingResult> rankings);
// |matches| / rank of the worst-ranked match.
double inverse_negative_penalty(const RankingResult& ranking);
double minp(std::span<const RankingResult> rankings);

struct StandardMetrics {
  double rank1 = 0.0;
  double rank5 = 0.0;
  double rank10 = 0.0;
  double map = 0.0;
  double minp = 0.0;
};

std::vector<RankingResult> rank_all(const DatasetManifest& manifest, const EmbeddingStore& embeddings,
                                    SimilarityMetric metric, unsigned threads = 1);

StandardMetrics evaluate_standard(const DatasetManifest& manifest, const EmbeddingStore& embeddings,
                                  SimilarityMetric metric = SimilarityMetric::kCosine, unsigned threads = 1);

}  // namespace reidbench
