#include "reidbench/ingest.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"
#include "reidbench/error.hpp"

namespace reidbench {

namespace {

using nlohmann::json;

std::ifstream open_input(const std::filesystem::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  return out;
}

std::string row_label(std::size_t row) { return "row " + std::to_string(row); }

// RFC 4180 field splitting: commas separate, double quotes enclose, "" escapes.
std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  fields.push_back(std::move(current));
  return fields;
}

std::string quote_csv_field(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

template <typename Int>
std::optional<Int> parse_int(std::string_view text) {
  Int value{};
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return value;
}

std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

// Little-endian u32 / f32 helpers; the file format is LE regardless of host.
void put_u32(std::ostream& out, std::uint32_t v) {
  const std::array<char, 4> bytes = {static_cast<char>(v & 0xFFu), static_cast<char>((v >> 8) & 0xFFu),
                                     static_cast<char>((v >> 16) & 0xFFu), static_cast<char>((v >> 24) & 0xFFu)};
  out.write(bytes.data(), bytes.size());
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

json::const_reference require(const json& obj, const char* key, std::size_t line_no) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw Error(ErrorCode::kMalformedLine, "line " + std::to_string(line_no) + ": missing field '" + key + "'");
  }
  return *it;
}

std::uint32_t require_index(const json& obj, const char* key, std::size_t line_no, ErrorCode negative_code) {
  const json& v = require(obj, key, line_no);
  if (!v.is_number_integer()) {
    throw Error(ErrorCode::kMalformedLine, "line " + std::to_string(line_no) + ": '" + key + "' must be an integer");
  }
  const auto value = v.get<std::int64_t>();
  if (value < 0 || value > static_cast<std::int64_t>(UINT32_MAX)) {
    throw Error(negative_code, "line " + std::to_string(line_no) + ": '" + key + "' out of range");
  }
  return static_cast<std::uint32_t>(value);
}

std::int64_t require_int(const json& obj, const char* key, std::size_t line_no) {
  const json& v = require(obj, key, line_no);
  if (!v.is_number_integer()) {
    throw Error(ErrorCode::kMalformedLine, "line " + std::to_string(line_no) + ": '" + key + "' must be an integer");
  }
  return v.get<std::int64_t>();
}

std::string require_string(const json& obj, const char* key, std::size_t line_no) {
  const json& v = require(obj, key, line_no);
  if (!v.is_string()) {
    throw Error(ErrorCode::kMalformedLine, "line " + std::to_string(line_no) + ": '" + key + "' must be a string");
  }
  return v.get<std::string>();
}

BBox require_bbox(const json& obj, std::size_t line_no) {
  const json& v = require(obj, "bbox", line_no);
  if (!v.is_array() || v.size() != 4 || !std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_number(); })) {
    throw Error(ErrorCode::kMalformedLine, "line " + std::to_string(line_no) + ": 'bbox' must be [x,y,w,h]");
  }
  BBox box{v[0].get<double>(), v[1].get<double>(), v[2].get<double>(), v[3].get<double>()};
  if (!std::isfinite(box.x) || !std::isfinite(box.y) || !std::isfinite(box.w) || !std::isfinite(box.h)) {
    throw Error(ErrorCode::kMalformedLine, "line " + std::to_string(line_no) + ": non-finite bbox");
  }
  if (!(box.w > 0.0) || !(box.h > 0.0)) {
    throw Error(ErrorCode::kNegativeDimension, "line " + std::to_string(line_no) + ": bbox width and height must be > 0");
  }
  return box;
}

// Iterates non-blank JSONL lines, handing each parsed object and its 1-based
// line number to `fn`.
template <typename Fn>
void for_each_jsonl(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto view = strip_cr(line);
    if (view.find_first_not_of(" \t") == std::string_view::npos) continue;
    json obj = json::parse(view, nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) {
      throw Error(ErrorCode::kMalformedLine, "line " + std::to_string(line_no) + ": not a JSON object");
    }
    fn(obj, line_no);
  }
}

json bbox_json(const BBox& b) { return json::array({b.x, b.y, b.w, b.h}); }

}  // namespace

std::string_view to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kQuery: return "query";
    case Split::kGallery: return "gallery";
  }
  return "train";
}

std::optional<Split> parse_split(std::string_view text) {
  if (text == "train") return Split::kTrain;
  if (text == "query") return Split::kQuery;
  if (text == "gallery") return Split::kGallery;
  return std::nullopt;
}

SplitSummary DatasetManifest::summary(Split split) const {
  std::set<std::int64_t> ids;
  std::set<std::int64_t> cams;
  SplitSummary s;
  for (const auto& r : records) {
    if (r.split != split) continue;
    ++s.images;
    ids.insert(r.identity_id);
    cams.insert(r.camera_id);
  }
  s.identities = ids.size();
  s.cameras = cams.size();
  return s;
}

std::vector<ImageRecord> DatasetManifest::split_records(Split split) const {
  std::vector<ImageRecord> out;
  std::copy_if(records.begin(), records.end(), std::back_inserter(out),
               [split](const ImageRecord& r) { return r.split == split; });
  return out;
}

void validate_manifest(const DatasetManifest& manifest) {
  std::unordered_set<std::string_view> image_ids;
  std::unordered_set<std::uint32_t> embedding_indices;
  std::unordered_set<std::int64_t> gallery_ids;
  for (std::size_t i = 0; i < manifest.records.size(); ++i) {
    const auto& r = manifest.records[i];
    if (r.identity_id < 0) throw Error(ErrorCode::kBadValue, row_label(i + 1) + ": identity_id must be >= 0");
    if (r.camera_id < 0) throw Error(ErrorCode::kBadValue, row_label(i + 1) + ": camera_id must be >= 0");
    if (!image_ids.insert(r.image_id).second) {
      throw Error(ErrorCode::kDuplicateImageId, row_label(i + 1) + ": image_id '" + r.image_id + "' repeated");
    }
    if (!embedding_indices.insert(r.embedding_idx).second) {
      throw Error(ErrorCode::kDuplicateEmbeddingIndex,
                  row_label(i + 1) + ": embedding_idx " + std::to_string(r.embedding_idx) + " repeated");
    }
    if (r.split == Split::kGallery) gallery_ids.insert(r.identity_id);
  }
  for (std::size_t i = 0; i < manifest.records.size(); ++i) {
    const auto& r = manifest.records[i];
    if (r.split == Split::kQuery && !gallery_ids.contains(r.identity_id)) {
      throw Error(ErrorCode::kQueryWithoutGalleryMatch,
                  row_label(i + 1) + ": query identity " + std::to_string(r.identity_id) + " has no gallery image");
    }
  }
}

DatasetManifest parse_manifest(std::istream& in, std::string dataset_name) {
  DatasetManifest manifest;
  manifest.dataset_name = std::move(dataset_name);
  std::string line;
  if (!std::getline(in, line) || strip_cr(line) != kManifestHeader) {
    throw Error(ErrorCode::kMissingColumn, "header must be exactly '" + std::string(kManifestHeader) + "'");
  }
  std::size_t row = 0;
  while (std::getline(in, line)) {
    const auto view = strip_cr(line);
    if (view.empty()) continue;
    ++row;
    const auto fields = split_csv_line(view);
    if (fields.size() != 5) {
      throw Error(ErrorCode::kMissingColumn,
                  row_label(row) + ": expected 5 columns, found " + std::to_string(fields.size()));
    }
    ImageRecord rec;
    rec.image_id = fields[0];
    if (rec.image_id.empty()) throw Error(ErrorCode::kBadValue, row_label(row) + ": empty image_id");
    const auto identity = parse_int<std::int64_t>(fields[1]);
    const auto camera = parse_int<std::int64_t>(fields[2]);
    if (!identity) throw Error(ErrorCode::kBadValue, row_label(row) + ": identity_id '" + fields[1] + "'");
    if (!camera) throw Error(ErrorCode::kBadValue, row_label(row) + ": camera_id '" + fields[2] + "'");
    const auto split = parse_split(fields[3]);
    if (!split) throw Error(ErrorCode::kBadSplitValue, row_label(row) + ": split '" + fields[3] + "'");
    const auto emb = parse_int<std::uint32_t>(fields[4]);
    if (!emb) throw Error(ErrorCode::kBadValue, row_label(row) + ": embedding_idx '" + fields[4] + "'");
    rec.identity_id = *identity;
    rec.camera_id = *camera;
    rec.split = *split;
    rec.embedding_idx = *emb;
    manifest.records.push_back(std::move(rec));
  }
  validate_manifest(manifest);
  return manifest;
}

DatasetManifest load_manifest(const std::filesystem::path& path, std::optional<std::string> dataset_name) {
  auto in = open_input(path);
  return parse_manifest(in, dataset_name.value_or(path.stem().string()));
}

void write_manifest(std::ostream& out, const DatasetManifest& manifest) {
  out << kManifestHeader << '\n';
  for (const auto& r : manifest.records) {
    out << quote_csv_field(r.image_id) << ',' << r.identity_id << ',' << r.camera_id << ',' << to_string(r.split)
        << ',' << r.embedding_idx << '\n';
  }
}

void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest) {
  auto out = open_output(path, std::ios::out | std::ios::binary);
  write_manifest(out, manifest);
}

EmbeddingStore::EmbeddingStore(std::uint32_t rows, std::uint32_t dim, std::vector<float> data)
    : rows_(rows), dim_(dim), data_(std::move(data)) {
  if (rows_ == 0 || dim_ == 0) throw Error(ErrorCode::kInvalidArgument, "embedding store needs rows >= 1 and dim >= 1");
  if (data_.size() != static_cast<std::size_t>(rows_) * dim_) {
    throw Error(ErrorCode::kTruncatedPayload, "expected " + std::to_string(static_cast<std::size_t>(rows_) * dim_) +
                                                  " values, got " + std::to_string(data_.size()));
  }
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      throw Error(ErrorCode::kNonFiniteValue, "row " + std::to_string(i / dim_) + ", column " + std::to_string(i % dim_));
    }
  }
}

EmbeddingStore EmbeddingStore::from_rows(const std::vector<std::vector<float>>& rows) {
  if (rows.empty()) throw Error(ErrorCode::kInvalidArgument, "embedding store needs at least one row");
  const std::size_t dim = rows.front().size();
  std::vector<float> data;
  data.reserve(rows.size() * dim);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != dim) {
      throw Error(ErrorCode::kDimensionMismatch, "row " + std::to_string(i) + " has dim " +
                                                     std::to_string(rows[i].size()) + ", expected " + std::to_string(dim));
    }
    data.insert(data.end(), rows[i].begin(), rows[i].end());
  }
  return EmbeddingStore(static_cast<std::uint32_t>(rows.size()), static_cast<std::uint32_t>(dim), std::move(data));
}

std::span<const float> EmbeddingStore::row(std::size_t i) const {
  if (i >= rows_) {
    throw Error(ErrorCode::kOutOfRangeIndex, "embedding row " + std::to_string(i) + " >= " + std::to_string(rows_));
  }
  return std::span<const float>(data_).subspan(i * dim_, dim_);
}

EmbeddingStore read_embeddings(std::istream& in) {
  std::array<unsigned char, 16> header{};
  in.read(reinterpret_cast<char*>(header.data()), header.size());
  if (in.gcount() < 4 || std::memcmp(header.data(), "REID", 4) != 0) {
    throw Error(ErrorCode::kBadMagic, "expected magic bytes 'REID'");
  }
  if (in.gcount() < static_cast<std::streamsize>(header.size())) {
    throw Error(ErrorCode::kTruncatedPayload, "header shorter than 16 bytes");
  }
  const std::uint32_t version = get_u32(header.data() + 4);
  if (version != kEmbeddingFormatVersion) {
    throw Error(ErrorCode::kVersionUnsupported, "version " + std::to_string(version));
  }
  const std::uint32_t rows = get_u32(header.data() + 8);
  const std::uint32_t dim = get_u32(header.data() + 12);
  if (rows == 0 || dim == 0) throw Error(ErrorCode::kInvalidArgument, "rows and dim must be >= 1");

  const std::size_t count = static_cast<std::size_t>(rows) * dim;
  std::vector<unsigned char> payload(count * 4);
  in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
  if (static_cast<std::size_t>(in.gcount()) != payload.size()) {
    throw Error(ErrorCode::kTruncatedPayload, "expected " + std::to_string(payload.size()) + " payload bytes, got " +
                                                  std::to_string(in.gcount()));
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw Error(ErrorCode::kBadValue, "trailing bytes after " + std::to_string(payload.size()) + " payload bytes");
  }
  std::vector<float> data(count);
  for (std::size_t i = 0; i < count; ++i) {
    data[i] = std::bit_cast<float>(get_u32(payload.data() + 4 * i));
  }
  return EmbeddingStore(rows, dim, std::move(data));
}

EmbeddingStore load_embeddings(const std::filesystem::path& path) {
  auto in = open_input(path, std::ios::in | std::ios::binary);
  return read_embeddings(in);
}

void write_embeddings(std::ostream& out, const EmbeddingStore& store) {
  out.write("REID", 4);
  put_u32(out, kEmbeddingFormatVersion);
  put_u32(out, store.rows());
  put_u32(out, store.dim());
  for (float v : store.data()) put_u32(out, std::bit_cast<std::uint32_t>(v));
}

void save_embeddings(const std::filesystem::path& path, const EmbeddingStore& store) {
  auto out = open_output(path, std::ios::out | std::ios::binary);
  write_embeddings(out, store);
}

void validate_manifest_against(const DatasetManifest& manifest, const EmbeddingStore& store) {
  for (std::size_t i = 0; i < manifest.records.size(); ++i) {
    if (manifest.records[i].embedding_idx >= store.rows()) {
      throw Error(ErrorCode::kOutOfRangeIndex, row_label(i + 1) + ": embedding_idx " +
                                                   std::to_string(manifest.records[i].embedding_idx) + " >= rows " +
                                                   std::to_string(store.rows()));
    }
  }
}

double iou(const BBox& a, const BBox& b) noexcept {
  const double ix = std::max(0.0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
  const double iy = std::max(0.0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

DetectionTrack filter_detections(const DetectionTrack& track, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "detection threshold must lie in [0,1]");
  }
  DetectionTrack out{track.video_id, track.camera_id, {}};
  std::copy_if(track.frames.begin(), track.frames.end(), std::back_inserter(out.frames),
               [threshold](const DetectionRecord& d) { return d.det_score >= threshold; });
  return out;
}

std::vector<DetectionTrack> parse_detections(std::istream& in, std::optional<std::size_t> embedding_rows) {
  std::vector<DetectionTrack> tracks;
  std::unordered_map<std::string, std::size_t> index;
  for_each_jsonl(in, [&](const json& obj, std::size_t line_no) {
    const std::string video_id = require_string(obj, "video_id", line_no);
    DetectionRecord d;
    d.frame_idx = require_index(obj, "frame_idx", line_no, ErrorCode::kMalformedLine);
    d.bbox = require_bbox(obj, line_no);
    const json& score = require(obj, "det_score", line_no);
    if (!score.is_number()) {
      throw Error(ErrorCode::kMalformedLine, "line " + std::to_string(line_no) + ": 'det_score' must be a number");
    }
    d.det_score = score.get<double>();
    if (!(d.det_score >= 0.0 && d.det_score <= 1.0)) {
      throw Error(ErrorCode::kBadValue, "line " + std::to_string(line_no) + ": det_score outside [0,1]");
    }
    d.embedding_idx = require_index(obj, "embedding_idx", line_no, ErrorCode::kOutOfRangeIndex);
    if (embedding_rows && d.embedding_idx >= *embedding_rows) {
      throw Error(ErrorCode::kOutOfRangeIndex, "line " + std::to_string(line_no) + ": embedding_idx " +
                                                   std::to_string(d.embedding_idx) + " >= rows " +
                                                   std::to_string(*embedding_rows));
    }
    auto [it, inserted] = index.try_emplace(video_id, tracks.size());
    if (inserted) {
      DetectionTrack t;
      t.video_id = video_id;
      if (auto cam = obj.find("camera_id"); cam != obj.end() && cam->is_number_integer()) {
        t.camera_id = cam->get<std::int64_t>();
      }
      tracks.push_back(std::move(t));
    }
    tracks[it->second].frames.push_back(d);
  });
  for (auto& t : tracks) {
    std::stable_sort(t.frames.begin(), t.frames.end(),
                     [](const DetectionRecord& a, const DetectionRecord& b) { return a.frame_idx < b.frame_idx; });
  }
  return tracks;
}

std::vector<DetectionTrack> load_detections(const std::filesystem::path& path,
                                            std::optional<std::size_t> embedding_rows) {
  auto in = open_input(path);
  return parse_detections(in, embedding_rows);
}

void write_detections(std::ostream& out, const std::vector<DetectionTrack>& tracks) {
  for (const auto& t : tracks) {
    for (const auto& d : t.frames) {
      json obj = {{"video_id", t.video_id},
                  {"frame_idx", d.frame_idx},
                  {"bbox", bbox_json(d.bbox)},
                  {"det_score", d.det_score},
                  {"embedding_idx", d.embedding_idx}};
      if (t.camera_id != 0) obj["camera_id"] = t.camera_id;
      out << obj.dump() << '\n';
    }
  }
}

std::vector<VideoGroundTruth> parse_video_gt(std::istream& in) {
  std::vector<VideoGroundTruth> videos;
  std::unordered_map<std::string, std::size_t> index;
  for_each_jsonl(in, [&](const json& obj, std::size_t line_no) {
    const std::string video_id = require_string(obj, "video_id", line_no);
    GroundTruthEntry e;
    e.frame_idx = require_index(obj, "frame_idx", line_no, ErrorCode::kMalformedLine);
    e.identity_id = require_int(obj, "identity_id", line_no);
    if (e.identity_id < 0) {
      throw Error(ErrorCode::kBadValue, "line " + std::to_string(line_no) + ": identity_id must be >= 0");
    }
    e.bbox = require_bbox(obj, line_no);
    auto [it, inserted] = index.try_emplace(video_id, videos.size());
    if (inserted) videos.push_back(VideoGroundTruth{video_id, {}});
    videos[it->second].entries.push_back(e);
  });
  for (auto& v : videos) {
    std::stable_sort(v.entries.begin(), v.entries.end(),
                     [](const GroundTruthEntry& a, const GroundTruthEntry& b) { return a.frame_idx < b.frame_idx; });
  }
  return videos;
}

std::vector<VideoGroundTruth> load_video_gt(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_video_gt(in);
}

void write_video_gt(std::ostream& out, const std::vector<VideoGroundTruth>& videos) {
  for (const auto& v : videos) {
    for (const auto& e : v.entries) {
      const json obj = {{"video_id", v.video_id},
                        {"frame_idx", e.frame_idx},
                        {"identity_id", e.identity_id},
                        {"bbox", bbox_json(e.bbox)}};
      out << obj.dump() << '\n';
    }
  }
}

std::vector<QuerySpec> parse_queries(std::istream& in, std::optional<std::size_t> dim) {
  std::vector<QuerySpec> queries;
  std::unordered_set<std::string> seen;
  for_each_jsonl(in, [&](const json& obj, std::size_t line_no) {
    QuerySpec q;
    q.query_id = require_string(obj, "query_id", line_no);
    if (!seen.insert(q.query_id).second) {
      throw Error(ErrorCode::kBadValue, "line " + std::to_string(line_no) + ": query_id '" + q.query_id + "' repeated");
    }
    q.identity_id = require_int(obj, "identity_id", line_no);
    if (q.identity_id < 0) {
      throw Error(ErrorCode::kBadValue, "line " + std::to_string(line_no) + ": identity_id must be >= 0");
    }
    const json& emb = require(obj, "embedding", line_no);
    if (!emb.is_array() || emb.empty()) {
      throw Error(ErrorCode::kMalformedLine, "line " + std::to_string(line_no) + ": 'embedding' must be a non-empty array");
    }
    q.embedding.reserve(emb.size());
    for (const auto& v : emb) {
      if (!v.is_number()) {
        throw Error(ErrorCode::kMalformedLine, "line " + std::to_string(line_no) + ": non-numeric embedding value");
      }
      const auto f = static_cast<float>(v.get<double>());
      if (!std::isfinite(f)) {
        throw Error(ErrorCode::kNonFiniteValue, "line " + std::to_string(line_no) + ": non-finite embedding value");
      }
      q.embedding.push_back(f);
    }
    if (dim && q.embedding.size() != *dim) {
      throw Error(ErrorCode::kDimensionMismatch, "line " + std::to_string(line_no) + ": embedding has dim " +
                                                     std::to_string(q.embedding.size()) + ", expected " +
                                                     std::to_string(*dim));
    }
    queries.push_back(std::move(q));
  });
  return queries;
}

std::vector<QuerySpec> load_queries(const std::filesystem::path& path, std::optional<std::size_t> dim) {
  auto in = open_input(path);
  return parse_queries(in, dim);
}

void write_queries(std::ostream& out, const std::vector<QuerySpec>& queries) {
  for (const auto& q : queries) {
    const json obj = {{"query_id", q.query_id}, {"identity_id", q.identity_id}, {"embedding", q.embedding}};
    out << obj.dump() << '\n';
  }
}

}  // namespace reidbench
