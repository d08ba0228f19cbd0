#include "reidbench/combiner.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <random>

#include "json.hpp"
#include "reidbench/error.hpp"

namespace reidbench {

namespace {

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// std::shuffle and the standard distributions are implementation-defined, so
// draws are made directly from the engine to keep outputs portable.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x = rng();
  while (x >= limit) x = rng();
  return x % bound;
}

template <typename T>
void seeded_shuffle(std::vector<T>& items, std::mt19937_64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::swap(items[i - 1], items[uniform_below(rng, i)]);
  }
}

}  // namespace

std::string_view to_string(CombineMode mode) {
  switch (mode) {
    case CombineMode::kAll: return "all";
    case CombineMode::kOthers: return "others";
    case CombineMode::kScaled: return "scaled";
  }
  return "all";
}

std::optional<CombineMode> parse_combine_mode(std::string_view text) {
  if (text == "all") return CombineMode::kAll;
  if (text == "others") return CombineMode::kOthers;
  if (text == "scaled") return CombineMode::kScaled;
  return std::nullopt;
}

std::optional<std::size_t> CombinePlan::quota_for(std::string_view name) const {
  for (const auto& q : quotas) {
    if (q.name == name) return q.quota;
  }
  return std::nullopt;
}

CombinePlan plan_combined(std::span<const SourceSize> sources, CombineMode mode, std::optional<std::string> excluded) {
  if (mode == CombineMode::kAll && excluded) {
    throw Error(ErrorCode::kInvalidArgument, "mode 'all' does not take an excluded dataset");
  }
  for (const auto& s : sources) {
    if (s.train_images == 0) throw Error(ErrorCode::kInvalidArgument, "source '" + s.name + "' is empty");
  }
  if (excluded && std::none_of(sources.begin(), sources.end(), [&](const SourceSize& s) { return s.name == *excluded; })) {
    throw Error(ErrorCode::kExcludedNotFound, "'" + *excluded + "' is not among the sources");
  }

  CombinePlan plan;
  plan.mode = mode;
  plan.excluded = excluded;
  for (const auto& s : sources) {
    if (excluded && s.name == *excluded) continue;
    plan.quotas.push_back(SourceQuota{s.name, s.train_images, s.train_images});
  }
  if (plan.quotas.size() < 2) {
    throw Error(ErrorCode::kTooFewSources, "need at least 2 included sources, have " + std::to_string(plan.quotas.size()));
  }

  if (mode != CombineMode::kScaled) {
    plan.target_total = std::accumulate(plan.quotas.begin(), plan.quotas.end(), std::size_t{0},
                                        [](std::size_t acc, const SourceQuota& q) { return acc + q.quota; });
    return plan;
  }

  plan.target_total = std::max_element(plan.quotas.begin(), plan.quotas.end(), [](const auto& a, const auto& b) {
                        return a.source_size < b.source_size;
                      })->source_size;

  std::vector<std::size_t> open(plan.quotas.size());
  std::iota(open.begin(), open.end(), std::size_t{0});
  std::size_t remaining = plan.target_total;
  // The largest source always satisfies size * |open| >= remaining, so `open`
  // never empties.
  for (bool capped = true; capped;) {
    capped = false;
    const std::size_t k = open.size();
    std::vector<std::size_t> still_open;
    std::size_t removed = 0;
    for (std::size_t i : open) {
      if (plan.quotas[i].source_size * k < remaining) {
        plan.quotas[i].quota = plan.quotas[i].source_size;
        removed += plan.quotas[i].source_size;
        capped = true;
      } else {
        still_open.push_back(i);
      }
    }
    remaining -= removed;
    open = std::move(still_open);
  }

  const std::size_t share = remaining / open.size();
  std::size_t extra = remaining % open.size();
  std::sort(open.begin(), open.end(), [&](std::size_t a, std::size_t b) {
    if (plan.quotas[a].source_size != plan.quotas[b].source_size) {
      return plan.quotas[a].source_size > plan.quotas[b].source_size;
    }
    return plan.quotas[a].name < plan.quotas[b].name;
  });
  for (std::size_t i : open) {
    plan.quotas[i].quota = share + (extra > 0 ? 1 : 0);
    if (extra > 0) --extra;
  }
  return plan;
}

DatasetManifest materialize_plan(const CombinePlan& plan, std::span<const DatasetManifest> manifests,
                                 std::uint64_t seed) {
  DatasetManifest out;
  out.dataset_name = "COMBINED_" + std::string(to_string(plan.mode));
  std::map<std::pair<std::string, std::int64_t>, std::int64_t> labels;
  std::uint32_t next_embedding = 0;

  for (const auto& quota : plan.quotas) {
    const auto source = std::find_if(manifests.begin(), manifests.end(),
                                     [&](const DatasetManifest& m) { return m.dataset_name == quota.name; });
    if (source == manifests.end()) throw Error(ErrorCode::kUnknownSource, "no manifest named '" + quota.name + "'");

    std::map<std::int64_t, std::vector<const ImageRecord*>> by_identity;
    std::size_t available = 0;
    for (const auto& r : source->records) {
      if (r.split != Split::kTrain) continue;
      by_identity[r.identity_id].push_back(&r);
      ++available;
    }
    if (quota.quota > available) {
      throw Error(ErrorCode::kQuotaExceedsSource, "'" + quota.name + "' quota " + std::to_string(quota.quota) +
                                                      " exceeds its " + std::to_string(available) + " train images");
    }

    std::mt19937_64 rng(seed ^ fnv1a(quota.name));
    std::vector<std::int64_t> identities;
    identities.reserve(by_identity.size());
    for (const auto& [id, images] : by_identity) identities.push_back(id);
    seeded_shuffle(identities, rng);

    const auto emit = [&](const ImageRecord& r) {
      const auto [it, inserted] =
          labels.try_emplace({quota.name, r.identity_id}, static_cast<std::int64_t>(labels.size()));
      out.records.push_back(ImageRecord{quota.name + "/" + r.image_id, it->second, r.camera_id, Split::kTrain,
                                        next_embedding++});
    };

    std::size_t taken = 0;
    for (std::int64_t id : identities) {
      if (taken == quota.quota) break;
      auto images = by_identity[id];
      if (taken + images.size() > quota.quota) {
        seeded_shuffle(images, rng);
        images.resize(quota.quota - taken);
      }
      for (const ImageRecord* r : images) emit(*r);
      taken += images.size();
    }
  }
  validate_manifest(out);
  return out;
}

std::string plan_to_json(const CombinePlan& plan, std::uint64_t seed) {
  nlohmann::ordered_json j;
  j["mode"] = to_string(plan.mode);
  j["excluded"] = plan.excluded ? nlohmann::ordered_json(*plan.excluded) : nlohmann::ordered_json(nullptr);
  j["seed"] = seed;
  j["target_total"] = plan.target_total;
  for (const auto& q : plan.quotas) {
    j["sources"].push_back({{"name", q.name}, {"source_size", q.source_size}, {"quota", q.quota}});
  }
  return j.dump(2) + "\n";
}

}  // namespace reidbench
