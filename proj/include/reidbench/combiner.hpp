#pragma once

// Builds COMBINED_all / COMBINED_others / COMBINED_scaled training manifests
// from several source datasets.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "reidbench/ingest.hpp"

namespace reidbench {

enum class CombineMode { kAll, kOthers, kScaled };

std::string_view to_string(CombineMode mode);
std::optional<CombineMode> parse_combine_mode(std::string_view text);

struct SourceSize {
  std::string name;
  std::size_t train_images = 0;
};

struct SourceQuota {
  std::string name;
  std::size_t source_size = 0;
  std::size_t quota = 0;

  bool operator==(const SourceQuota&) const = default;
};

struct CombinePlan {
  CombineMode mode = CombineMode::kAll;
  std::optional<std::string> excluded;
  std::vector<SourceQuota> quotas;  // included sources, input order
  std::size_t target_total = 0;

  std::optional<std::size_t> quota_for(std::string_view name) const;
};

// all:    every source at full size.
// others: the excluded source dropped, the rest at full size.
// scaled: as `others`, but the total equals the largest included source.
//         Shares are equal; a source smaller than its share is taken whole
//         and the shortfall is split among the rest until stable. Leftover
//         units go one each to the largest sources (ties by name).
CombinePlan plan_combined(std::span<const SourceSize> sources, CombineMode mode,
                          std::optional<std::string> excluded = std::nullopt);

// Identity-stratified sampling of each source's train split. Identities are
// visited in a seeded random order and taken whole until the next one would
// overflow the quota; that identity is trimmed (seeded) to fill it exactly.
// Output identities are relabeled 0..K-1 in order of first appearance,
// image ids are prefixed "<source>/", embedding_idx is renumbered 0..N-1.
DatasetManifest materialize_plan(const CombinePlan& plan, std::span<const DatasetManifest> manifests,
                                 std::uint64_t seed);

// Sidecar record of a plan: mode, excluded source, seed, sizes and quotas.
std::string plan_to_json(const CombinePlan& plan, std::uint64_t seed);

}  // namespace reidbench
