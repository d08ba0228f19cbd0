#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "reidbench/live_eval.hpp"
#include "reidbench/results.hpp"

namespace reidbench {

enum class TableLayout {
  // Rows (eval_set, approach), one column per metric; best approach per
  // evaluation set and column is marked.
  kByApproach,
  // Rows (eval_set, train_set), one column per (approach, metric); best
  // approach per row and metric is marked.
  kByTrainSet,
};

enum class TableFormat { kMarkdown, kCsv };

std::optional<TableLayout> parse_table_layout(std::string_view text);
std::optional<TableFormat> parse_table_format(std::string_view text);

struct TableSpec {
  TableLayout layout = TableLayout::kByApproach;
  std::vector<std::string> metrics;  // empty: every metric present, canonical order
  std::optional<Selector> filter;
  int precision = 2;
};

struct TableEntry {
  std::optional<double> value;
  bool best = false;
};

struct TableModel {
  std::vector<std::string> key_headers;
  std::vector<std::string> value_headers;
  std::vector<std::vector<std::string>> row_keys;
  std::vector<std::vector<TableEntry>> rows;
};

// Best marks use exact comparison of the stored values; every tied maximum
// is marked. A selected cell carrying only some of the table's metrics is an
// InconsistentKeys error.
TableModel build_table(std::span<const ResultCell> cells, const TableSpec& spec);

std::string render_table(const TableModel& table, TableFormat format, int precision = 2);
std::string render_table(std::span<const ResultCell> cells, const TableSpec& spec, TableFormat format);

// Shortest decimal text that round-trips to the same double.
std::string format_number(double value);

// Columns: beta,FR,TVR, then F<gamma> per configured gamma.
std::string export_curves(const SweepResult& result);

// {"f_star": {"F<gamma>": {"value", "beta"}}, "live_map", "warnings"}.
std::string sweep_summary_json(const SweepResult& result);

}  // namespace reidbench
