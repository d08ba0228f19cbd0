#pragma once

// ResultCell tables and the selectors used to pull comparable cell sets out
// of them.

#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "reidbench/standard_eval.hpp"

namespace reidbench {

// One (approach, training set, evaluation set) measurement.
struct ResultCell {
  std::string approach;
  std::string train_set;
  std::string eval_set;
  std::map<std::string, double> metrics;

  bool operator==(const ResultCell&) const = default;
};

using ResultTable = std::vector<ResultCell>;

ResultCell make_standard_cell(std::string approach, std::string train_set, std::string eval_set,
                              const StandardMetrics& metrics);

// Metric values must lie in [0,1] and (approach, train_set, eval_set) must be
// unique.
void validate_cells(std::span<const ResultCell> cells);

std::string cell_to_json(const ResultCell& cell);
// Accepts a JSON array of cells or a single cell object.
ResultTable parse_cells(std::string_view text);
ResultTable load_cells(const std::filesystem::path& path);
void write_cells(std::ostream& out, std::span<const ResultCell> cells);

// Training-set names beginning with this prefix denote dataset unions.
inline constexpr std::string_view kCombinedPrefix = "COMBINED";

// single           train_set == eval_set
// best_individual  per (eval_set, approach), the best non-combined training
//                  set other than the evaluation set itself (per metric)
// combined_all     train_set == COMBINED_all
// combined_others  train_set == COMBINED_others, or COMBINED where the
//                  evaluation set has no training split of its own
// combined_scaled  train_set == COMBINED_scaled
// train:NAME       train_set == NAME
struct Selector {
  enum class Kind { kSingle, kBestIndividual, kCombinedAll, kCombinedOthers, kCombinedScaled, kTrainSet };

  Kind kind = Kind::kSingle;
  std::string train_set;  // kTrainSet only

  static Selector parse(std::string_view text);
  std::string name() const;
};

struct SelectedValue {
  std::string eval_set;
  std::string approach;
  std::string train_set;
  double value = 0.0;
};

// Cells lacking `metric` are skipped. Output is sorted by (eval_set, approach)
// and holds at most one value per pair.
std::vector<SelectedValue> select_values(std::span<const ResultCell> cells, std::string_view metric,
                                         const Selector& selector);

}  // namespace reidbench
