#pragma once

// Interchange formats and domain types: dataset manifests (CSV), EMB1
// embedding files, detection / ground-truth / query JSONL streams.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace reidbench {

enum class Split { kTrain, kQuery, kGallery };

std::string_view to_string(Split split);
std::optional<Split> parse_split(std::string_view text);

struct ImageRecord {
  std::string image_id;
  std::int64_t identity_id = 0;
  std::int64_t camera_id = 0;
  Split split = Split::kTrain;
  std::uint32_t embedding_idx = 0;

  bool operator==(const ImageRecord&) const = default;
};

struct SplitSummary {
  std::size_t identities = 0;
  std::size_t images = 0;
  std::size_t cameras = 0;
};

struct DatasetManifest {
  std::string dataset_name;
  std::vector<ImageRecord> records;

  SplitSummary summary(Split split) const;
  std::vector<ImageRecord> split_records(Split split) const;

  bool operator==(const DatasetManifest&) const = default;
};

inline constexpr std::string_view kManifestHeader =
    "image_id,identity_id,camera_id,split,embedding_idx";

// Checks every manifest invariant; throws Error naming the first offending row
// (1-based data row number, header excluded).
void validate_manifest(const DatasetManifest& manifest);

DatasetManifest parse_manifest(std::istream& in, std::string dataset_name);
// The dataset name defaults to the file stem.
DatasetManifest load_manifest(const std::filesystem::path& path,
                              std::optional<std::string> dataset_name = std::nullopt);
void write_manifest(std::ostream& out, const DatasetManifest& manifest);
void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);

// Dense row-major float32 matrix; row i holds the feature vector for
// embedding_idx i.
class EmbeddingStore {
 public:
  EmbeddingStore() = default;
  // Throws on rows == 0, dim == 0, size mismatch or non-finite values.
  EmbeddingStore(std::uint32_t rows, std::uint32_t dim, std::vector<float> data);

  static EmbeddingStore from_rows(const std::vector<std::vector<float>>& rows);

  std::uint32_t rows() const noexcept { return rows_; }
  std::uint32_t dim() const noexcept { return dim_; }
  std::span<const float> row(std::size_t i) const;
  std::span<const float> data() const noexcept { return data_; }

  bool operator==(const EmbeddingStore&) const = default;

 private:
  std::uint32_t rows_ = 0;
  std::uint32_t dim_ = 0;
  std::vector<float> data_;
};

inline constexpr std::uint32_t kEmbeddingFormatVersion = 1;

EmbeddingStore read_embeddings(std::istream& in);
EmbeddingStore load_embeddings(const std::filesystem::path& path);
void write_embeddings(std::ostream& out, const EmbeddingStore& store);
void save_embeddings(const std::filesystem::path& path, const EmbeddingStore& store);

// Throws OutOfRangeIndex when any record points past the end of the store.
void validate_manifest_against(const DatasetManifest& manifest, const EmbeddingStore& store);

struct BBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double area() const noexcept { return w * h; }
  bool operator==(const BBox&) const = default;
};

double iou(const BBox& a, const BBox& b) noexcept;

struct DetectionRecord {
  std::uint32_t frame_idx = 0;
  BBox bbox;
  double det_score = 0.0;
  std::uint32_t embedding_idx = 0;

  bool operator==(const DetectionRecord&) const = default;
};

struct DetectionTrack {
  std::string video_id;
  std::int64_t camera_id = 0;
  // Sorted by frame_idx; detections within a frame keep file order.
  std::vector<DetectionRecord> frames;

  bool operator==(const DetectionTrack&) const = default;
};

inline constexpr double kDefaultDetectionThreshold = 0.5;

// Keeps records with det_score >= threshold, preserving order.
DetectionTrack filter_detections(const DetectionTrack& track,
                                 double threshold = kDefaultDetectionThreshold);

struct GroundTruthEntry {
  std::uint32_t frame_idx = 0;
  std::int64_t identity_id = 0;
  BBox bbox;

  bool operator==(const GroundTruthEntry&) const = default;
};

struct VideoGroundTruth {
  std::string video_id;
  std::vector<GroundTruthEntry> entries;  // sorted by frame_idx, stable

  bool operator==(const VideoGroundTruth&) const = default;
};

struct QuerySpec {
  std::string query_id;
  std::int64_t identity_id = 0;
  std::vector<float> embedding;

  bool operator==(const QuerySpec&) const = default;
};

// JSONL readers. Records of several videos may share one file; the result
// holds one entry per video_id in order of first appearance. When
// `embedding_rows` is given, embedding indices are range-checked against it.
std::vector<DetectionTrack> parse_detections(std::istream& in,
                                             std::optional<std::size_t> embedding_rows = std::nullopt);
std::vector<DetectionTrack> load_detections(const std::filesystem::path& path,
                                            std::optional<std::size_t> embedding_rows = std::nullopt);
void write_detections(std::ostream& out, const std::vector<DetectionTrack>& tracks);

std::vector<VideoGroundTruth> parse_video_gt(std::istream& in);
std::vector<VideoGroundTruth> load_video_gt(const std::filesystem::path& path);
void write_video_gt(std::ostream& out, const std::vector<VideoGroundTruth>& videos);

// When `dim` is given every embedding must have exactly that length.
std::vector<QuerySpec> parse_queries(std::istream& in, std::optional<std::size_t> dim = std::nullopt);
std::vector<QuerySpec> load_queries(const std::filesystem::path& path,
                                    std::optional<std::size_t> dim = std::nullopt);
void write_queries(std::ostream& out, const std::vector<QuerySpec>& queries);

}  // namespace reidbench
