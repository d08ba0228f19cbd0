#include "reidbench/results.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>
#include <tuple>

#include "json.hpp"
#include "reidbench/error.hpp"

namespace reidbench {

namespace {

using nlohmann::ordered_json;

ordered_json to_json(const ResultCell& cell) {
  ordered_json metrics = ordered_json::object();
  for (const auto& [k, v] : cell.metrics) metrics[k] = v;
  return ordered_json{{"approach", cell.approach},
                      {"train_set", cell.train_set},
                      {"eval_set", cell.eval_set},
                      {"metrics", metrics}};
}

ResultCell from_json(const nlohmann::json& j, std::size_t index) {
  const auto where = "cell " + std::to_string(index);
  if (!j.is_object()) throw Error(ErrorCode::kBadValue, where + ": not an object");
  ResultCell cell;
  for (const char* key : {"approach", "train_set", "eval_set"}) {
    const auto it = j.find(key);
    if (it == j.end() || !it->is_string()) {
      throw Error(ErrorCode::kMissingColumn, where + ": missing string field '" + key + "'");
    }
  }
  cell.approach = j["approach"].get<std::string>();
  cell.train_set = j["train_set"].get<std::string>();
  cell.eval_set = j["eval_set"].get<std::string>();
  const auto m = j.find("metrics");
  if (m == j.end() || !m->is_object()) throw Error(ErrorCode::kMissingColumn, where + ": missing 'metrics' object");
  for (const auto& [k, v] : m->items()) {
    if (!v.is_number()) throw Error(ErrorCode::kBadValue, where + ": metric '" + k + "' is not a number");
    cell.metrics[k] = v.get<double>();
  }
  return cell;
}

bool is_combined(std::string_view train_set) { return train_set.starts_with(kCombinedPrefix); }

}  // namespace

ResultCell make_standard_cell(std::string approach, std::string train_set, std::string eval_set,
                              const StandardMetrics& m) {
  return ResultCell{std::move(approach),
                    std::move(train_set),
                    std::move(eval_set),
                    {{"rank1", m.rank1}, {"rank5", m.rank5}, {"rank10", m.rank10}, {"map", m.map}, {"minp", m.minp}}};
}

void validate_cells(std::span<const ResultCell> cells) {
  std::set<std::tuple<std::string_view, std::string_view, std::string_view>> keys;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& c = cells[i];
    if (!keys.emplace(c.approach, c.train_set, c.eval_set).second) {
      throw Error(ErrorCode::kInconsistentKeys, "cell " + std::to_string(i) + ": duplicate (" + c.approach + ", " +
                                                    c.train_set + ", " + c.eval_set + ")");
    }
    for (const auto& [k, v] : c.metrics) {
      if (!(v >= 0.0 && v <= 1.0)) {
        throw Error(ErrorCode::kBadValue, "cell " + std::to_string(i) + ": metric '" + k + "' outside [0,1]");
      }
    }
  }
}

std::string cell_to_json(const ResultCell& cell) { return to_json(cell).dump(2) + "\n"; }

ResultTable parse_cells(std::string_view text) {
  const auto j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::kMalformedLine, "result table is not valid JSON");
  ResultTable cells;
  if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) cells.push_back(from_json(j[i], i));
  } else {
    cells.push_back(from_json(j, 0));
  }
  validate_cells(cells);
  return cells;
}

ResultTable load_cells(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_cells(buffer.str());
}

void write_cells(std::ostream& out, std::span<const ResultCell> cells) {
  ordered_json arr = ordered_json::array();
  for (const auto& c : cells) arr.push_back(to_json(c));
  out << arr.dump(2) << '\n';
}

Selector Selector::parse(std::string_view text) {
  if (text == "single") return {Kind::kSingle, {}};
  if (text == "best_individual") return {Kind::kBestIndividual, {}};
  if (text == "combined_all") return {Kind::kCombinedAll, {}};
  if (text == "combined_others") return {Kind::kCombinedOthers, {}};
  if (text == "combined_scaled") return {Kind::kCombinedScaled, {}};
  if (text.starts_with("train:") && text.size() > 6) return {Kind::kTrainSet, std::string(text.substr(6))};
  throw Error(ErrorCode::kInvalidArgument, "unknown selector '" + std::string(text) + "'");
}

std::string Selector::name() const {
  switch (kind) {
    case Kind::kSingle: return "single";
    case Kind::kBestIndividual: return "best_individual";
    case Kind::kCombinedAll: return "combined_all";
    case Kind::kCombinedOthers: return "combined_others";
    case Kind::kCombinedScaled: return "combined_scaled";
    case Kind::kTrainSet: return "train:" + train_set;
  }
  return {};
}

std::vector<SelectedValue> select_values(std::span<const ResultCell> cells, std::string_view metric,
                                         const Selector& selector) {
  std::set<std::string_view> training_sources;
  for (const auto& c : cells) training_sources.insert(c.train_set);

  // Lower rank wins when several cells qualify for the same key.
  const auto rank_of = [&](const ResultCell& c) -> int {
    switch (selector.kind) {
      case Selector::Kind::kSingle: return c.train_set == c.eval_set ? 0 : -1;
      case Selector::Kind::kBestIndividual:
        return !is_combined(c.train_set) && c.train_set != c.eval_set ? 0 : -1;
      case Selector::Kind::kCombinedAll: return c.train_set == "COMBINED_all" ? 0 : -1;
      case Selector::Kind::kCombinedOthers:
        if (c.train_set == "COMBINED_others") return 0;
        if (c.train_set == kCombinedPrefix && !training_sources.contains(c.eval_set)) return 1;
        return -1;
      case Selector::Kind::kCombinedScaled: return c.train_set == "COMBINED_scaled" ? 0 : -1;
      case Selector::Kind::kTrainSet: return c.train_set == selector.train_set ? 0 : -1;
    }
    return -1;
  };

  struct Best {
    SelectedValue value;
    int rank;
  };
  std::map<std::pair<std::string, std::string>, Best> chosen;
  for (const auto& c : cells) {
    const auto m = c.metrics.find(std::string(metric));
    if (m == c.metrics.end()) continue;
    const int rank = rank_of(c);
    if (rank < 0) continue;
    SelectedValue v{c.eval_set, c.approach, c.train_set, m->second};
    auto [it, inserted] = chosen.try_emplace({c.eval_set, c.approach}, Best{v, rank});
    if (inserted) continue;
    Best& best = it->second;
    const bool better = selector.kind == Selector::Kind::kBestIndividual ? v.value > best.value.value
                                                                         : rank < best.rank;
    if (better) best = Best{v, rank};
  }
  std::vector<SelectedValue> out;
  out.reserve(chosen.size());
  for (auto& [key, best] : chosen) out.push_back(std::move(best.value));
  return out;
}

}  // namespace reidbench
