#include "reidbench/report.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "reidbench/error.hpp"

namespace reidbench {

namespace {

constexpr std::array<std::string_view, 7> kCanonicalMetrics = {"rank1", "rank5",   "rank10",  "map",
                                                               "minp",  "f1_star", "live_map"};

std::vector<std::string> order_metrics(const std::set<std::string>& present) {
  std::vector<std::string> out;
  for (auto m : kCanonicalMetrics) {
    if (present.contains(std::string(m))) out.emplace_back(m);
  }
  for (const auto& m : present) {
    if (std::find(kCanonicalMetrics.begin(), kCanonicalMetrics.end(), m) == kCanonicalMetrics.end()) out.push_back(m);
  }
  return out;
}

std::string fixed(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  return out + "\"";
}

// Index of `key` in `order`, appending it on first sight.
std::size_t intern(std::vector<std::string>& order, const std::string& key) {
  const auto it = std::find(order.begin(), order.end(), key);
  if (it != order.end()) return static_cast<std::size_t>(it - order.begin());
  order.push_back(key);
  return order.size() - 1;
}

void mark_best(std::vector<TableEntry*>& group) {
  std::optional<double> best;
  for (const auto* e : group) {
    if (e->value && (!best || *e->value > *best)) best = e->value;
  }
  for (auto* e : group) e->best = e->value && best && *e->value == *best;
}

std::string gamma_label(double gamma) { return "F" + format_number(gamma); }

}  // namespace

std::optional<TableLayout> parse_table_layout(std::string_view text) {
  if (text == "by_approach") return TableLayout::kByApproach;
  if (text == "by_train_set") return TableLayout::kByTrainSet;
  return std::nullopt;
}

std::optional<TableFormat> parse_table_format(std::string_view text) {
  if (text == "markdown" || text == "md") return TableFormat::kMarkdown;
  if (text == "csv") return TableFormat::kCsv;
  return std::nullopt;
}

std::string format_number(double value) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), ptr);
}

TableModel build_table(std::span<const ResultCell> cells, const TableSpec& spec) {
  validate_cells(cells);

  std::vector<const ResultCell*> chosen;
  if (spec.filter) {
    // Reuse the selector's matching rule on every metric a cell carries.
    std::set<std::tuple<std::string, std::string, std::string>> keep;
    std::set<std::string> all_metrics;
    for (const auto& c : cells) {
      for (const auto& [m, v] : c.metrics) all_metrics.insert(m);
    }
    for (const auto& m : all_metrics) {
      for (const auto& s : select_values(cells, m, *spec.filter)) keep.emplace(s.approach, s.train_set, s.eval_set);
    }
    for (const auto& c : cells) {
      if (keep.contains({c.approach, c.train_set, c.eval_set})) chosen.push_back(&c);
    }
  } else {
    for (const auto& c : cells) chosen.push_back(&c);
  }

  std::vector<std::string> metrics = spec.metrics;
  if (metrics.empty()) {
    std::set<std::string> present;
    for (const auto* c : chosen) {
      for (const auto& [m, v] : c->metrics) present.insert(m);
    }
    metrics = order_metrics(present);
  }

  std::vector<const ResultCell*> used;
  for (const auto* c : chosen) {
    const auto have = std::count_if(metrics.begin(), metrics.end(), [&](const std::string& m) {
      return c->metrics.contains(m);
    });
    if (have == 0) continue;
    if (static_cast<std::size_t>(have) != metrics.size()) {
      throw Error(ErrorCode::kInconsistentKeys, "cell (" + c->approach + ", " + c->train_set + ", " + c->eval_set +
                                                    ") lacks some of the table's metrics");
    }
    used.push_back(c);
  }

  TableModel t;
  if (spec.layout == TableLayout::kByApproach) {
    t.key_headers = {"eval_set", "approach"};
    t.value_headers = metrics;
    std::map<std::pair<std::string, std::string>, std::size_t> row_of;
    for (const auto* c : used) {
      const auto key = std::make_pair(c->eval_set, c->approach);
      if (row_of.contains(key)) {
        throw Error(ErrorCode::kInconsistentKeys, "several training sets for (" + c->eval_set + ", " + c->approach +
                                                      "); filter the cells first");
      }
      row_of[key] = t.rows.size();
      t.row_keys.push_back({c->eval_set, c->approach});
      std::vector<TableEntry> row;
      for (const auto& m : metrics) row.push_back(TableEntry{c->metrics.at(m), false});
      t.rows.push_back(std::move(row));
    }
    std::vector<std::string> groups;
    for (const auto& k : t.row_keys) intern(groups, k[0]);
    for (const auto& g : groups) {
      for (std::size_t col = 0; col < metrics.size(); ++col) {
        std::vector<TableEntry*> group;
        for (std::size_t r = 0; r < t.rows.size(); ++r) {
          if (t.row_keys[r][0] == g) group.push_back(&t.rows[r][col]);
        }
        mark_best(group);
      }
    }
    return t;
  }

  t.key_headers = {"eval_set", "train_set"};
  std::vector<std::string> row_order;
  std::vector<std::string> approaches;
  for (const auto* c : used) {
    intern(row_order, c->eval_set + '\x1f' + c->train_set);
    intern(approaches, c->approach);
  }
  for (const auto& a : approaches) {
    for (const auto& m : metrics) t.value_headers.push_back(a + " " + m);
  }
  t.rows.assign(row_order.size(), std::vector<TableEntry>(t.value_headers.size()));
  for (const auto& key : row_order) {
    const auto sep = key.find('\x1f');
    t.row_keys.push_back({key.substr(0, sep), key.substr(sep + 1)});
  }
  for (const auto* c : used) {
    const std::size_t r = intern(row_order, c->eval_set + '\x1f' + c->train_set);
    const std::size_t a = intern(approaches, c->approach);
    for (std::size_t m = 0; m < metrics.size(); ++m) {
      t.rows[r][a * metrics.size() + m].value = c->metrics.at(metrics[m]);
    }
  }
  for (auto& row : t.rows) {
    for (std::size_t m = 0; m < metrics.size(); ++m) {
      std::vector<TableEntry*> group;
      for (std::size_t a = 0; a < approaches.size(); ++a) group.push_back(&row[a * metrics.size() + m]);
      mark_best(group);
    }
  }
  return t;
}

std::string render_table(const TableModel& table, TableFormat format, int precision) {
  std::ostringstream out;
  const auto value_text = [&](const TableEntry& e) -> std::string {
    if (!e.value) return "-";
    const auto v = fixed(*e.value, precision);
    if (!e.best) return v;
    return format == TableFormat::kMarkdown ? "**" + v + "**" : v + "*";
  };
  if (format == TableFormat::kCsv) {
    bool first = true;
    for (const auto& h : table.key_headers) {
      out << (first ? "" : ",") << csv_field(h);
      first = false;
    }
    for (const auto& h : table.value_headers) out << ',' << csv_field(h);
    out << '\n';
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      first = true;
      for (const auto& k : table.row_keys[r]) {
        out << (first ? "" : ",") << csv_field(k);
        first = false;
      }
      for (const auto& e : table.rows[r]) out << ',' << value_text(e);
      out << '\n';
    }
    return out.str();
  }

  out << '|';
  for (const auto& h : table.key_headers) out << ' ' << h << " |";
  for (const auto& h : table.value_headers) out << ' ' << h << " |";
  out << "\n|";
  for (std::size_t i = 0; i < table.key_headers.size(); ++i) out << "---|";
  for (std::size_t i = 0; i < table.value_headers.size(); ++i) out << "---:|";
  out << '\n';
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    out << '|';
    for (const auto& k : table.row_keys[r]) out << ' ' << k << " |";
    for (const auto& e : table.rows[r]) out << ' ' << value_text(e) << " |";
    out << '\n';
  }
  return out.str();
}

std::string render_table(std::span<const ResultCell> cells, const TableSpec& spec, TableFormat format) {
  return render_table(build_table(cells, spec), format, spec.precision);
}

std::string export_curves(const SweepResult& result) {
  std::ostringstream out;
  out << "beta,FR,TVR";
  std::vector<double> gammas;
  if (!result.points.empty()) {
    for (const auto& [g, v] : result.points.front().f_gamma) gammas.push_back(g);
  }
  for (double g : gammas) out << ',' << gamma_label(g);
  out << '\n';
  for (const auto& p : result.points) {
    out << format_number(p.beta) << ',' << format_number(p.fr) << ',' << format_number(p.tvr);
    for (double g : gammas) out << ',' << format_number(p.f_gamma.at(g));
    out << '\n';
  }
  return out.str();
}

std::string sweep_summary_json(const SweepResult& result) {
  nlohmann::ordered_json j;
  j["f_star"] = nlohmann::ordered_json::object();
  for (const auto& f : result.f_star) {
    j["f_star"][gamma_label(f.gamma)] = {{"gamma", f.gamma}, {"value", f.value}, {"beta", f.beta}};
  }
  j["live_map"] = result.live_map;
  j["points"] = result.points.size();
  j["warnings"] = result.warnings;
  return j.dump(2) + "\n";
}

}  // namespace reidbench
