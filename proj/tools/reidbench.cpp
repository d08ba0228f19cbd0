// reidbench: command-line front end for the benchmarking library.
//
//   reidbench eval-standard --manifest m.csv --embeddings e.emb --approach MGN --out cell.json
//   reidbench combine --mode scaled --exclude CUHK03 --source DukeMTMC=duke.csv ... --out combined.csv
//   reidbench eval-live --detections d.jsonl --gt g.jsonl --queries q.jsonl --embeddings e.emb --out sweep.csv
//   reidbench stats paired-t --table cells.json --metric rank10 --select-a best_individual --select-b combined_others
//   reidbench report --table cells.json --layout by_train_set --format markdown
//
// Exit status: 0 on success, 2 on invalid input, 1 on anything else.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "reidbench/combiner.hpp"
#include "reidbench/error.hpp"
#include "reidbench/ingest.hpp"
#include "reidbench/live_eval.hpp"
#include "reidbench/report.hpp"
#include "reidbench/results.hpp"
#include "reidbench/standard_eval.hpp"
#include "reidbench/stats.hpp"

namespace fs = std::filesystem;
using namespace reidbench;

namespace {

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out << text;
}

std::pair<std::string, std::string> split_assignment(const std::string& text, const char* what) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == text.size()) {
    throw Error(ErrorCode::kInvalidArgument, std::string(what) + " must look like NAME=VALUE, got '" + text + "'");
  }
  return {text.substr(0, eq), text.substr(eq + 1)};
}

SimilarityMetric metric_arg(const std::string& text) {
  const auto m = parse_similarity_metric(text);
  if (!m) throw Error(ErrorCode::kInvalidArgument, "unknown metric '" + text + "'");
  return *m;
}

nlohmann::ordered_json test_json(const PairedTestResult& r) {
  nlohmann::ordered_json j;
  j["n"] = r.n;
  j["mean_a"] = r.mean_a;
  j["std_a"] = r.std_a;
  j["mean_b"] = r.mean_b;
  j["std_b"] = r.std_b;
  j["mean_diff"] = r.mean_diff;
  j["std_diff"] = r.std_diff;
  j["t"] = r.t_statistic;
  j["df"] = r.df;
  j["p_value"] = r.p_value;
  j["two_sided"] = r.two_sided;
  return j;
}

struct StandardArgs {
  std::string manifest, embeddings, metric = "cosine", approach, train_set, eval_set, out;
  unsigned threads = 1;
};

void run_standard(const StandardArgs& a) {
  const auto manifest = load_manifest(a.manifest);
  const auto store = load_embeddings(a.embeddings);
  validate_manifest_against(manifest, store);
  const auto m = evaluate_standard(manifest, store, metric_arg(a.metric), a.threads);
  const auto cell = make_standard_cell(a.approach, a.train_set.empty() ? manifest.dataset_name : a.train_set,
                                       a.eval_set.empty() ? manifest.dataset_name : a.eval_set, m);
  write_text(a.out, cell_to_json(cell) + "\n");
}

struct CombineArgs {
  std::string mode, exclude, out, plan_out;
  std::vector<std::string> sources, sizes;
  std::uint64_t seed = 0;
};

void run_combine(const CombineArgs& a) {
  const auto mode = parse_combine_mode(a.mode);
  if (!mode) throw Error(ErrorCode::kInvalidArgument, "unknown mode '" + a.mode + "'");
  const std::optional<std::string> excluded = a.exclude.empty() ? std::nullopt : std::optional(a.exclude);
  if (a.sources.empty() == a.sizes.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "give either --source NAME=manifest.csv or --sizes NAME=COUNT");
  }

  if (!a.sizes.empty()) {
    std::vector<SourceSize> sizes;
    for (const auto& s : a.sizes) {
      const auto [name, count] = split_assignment(s, "--sizes");
      std::size_t n = 0;
      try {
        std::size_t used = 0;
        n = std::stoull(count, &used);
        if (used != count.size()) throw std::invalid_argument(count);
      } catch (const std::logic_error&) {
        throw Error(ErrorCode::kInvalidArgument, "bad image count '" + count + "' for " + name);
      }
      sizes.push_back({name, n});
    }
    write_text(a.plan_out.empty() ? a.out : a.plan_out, plan_to_json(plan_combined(sizes, *mode, excluded), a.seed));
    return;
  }

  if (a.out.empty()) throw Error(ErrorCode::kInvalidArgument, "--out is required with --source");
  std::vector<DatasetManifest> manifests;
  std::vector<SourceSize> sizes;
  for (const auto& s : a.sources) {
    const auto [name, path] = split_assignment(s, "--source");
    manifests.push_back(load_manifest(path, name));
    sizes.push_back({name, manifests.back().summary(Split::kTrain).images});
  }
  const auto plan = plan_combined(sizes, *mode, excluded);
  const auto combined = materialize_plan(plan, manifests, a.seed);
  save_manifest(a.out, combined);
  const std::string plan_path =
      a.plan_out.empty() ? fs::path(a.out).replace_extension(".plan.json").string() : a.plan_out;
  write_text(plan_path, plan_to_json(plan, a.seed));
  std::fprintf(stderr, "wrote %zu images to %s, plan to %s\n", combined.records.size(), a.out.c_str(),
               plan_path.c_str());
}

struct LiveArgs {
  std::string detections, gt, queries, embeddings, out, summary, metric = "cosine";
  std::uint32_t tau = 1000, eta = 20;
  double beta_step = 0.02, iou = 0.5, det_threshold = kDefaultDetectionThreshold;
  unsigned threads = 1;
};

void run_live(const LiveArgs& a) {
  const auto store = load_embeddings(a.embeddings);
  std::vector<DetectionTrack> tracks;
  for (const auto& t : load_detections(a.detections, store.rows())) tracks.push_back(filter_detections(t, a.det_threshold));
  auto gts = load_video_gt(a.gt);
  const auto queries = load_queries(a.queries, store.dim());
  const auto sequences = pair_sequences(std::move(tracks), std::move(gts));

  LiveConfig cfg;
  cfg.tau = a.tau;
  cfg.eta = a.eta;
  cfg.beta_grid = make_beta_grid(a.beta_step);
  cfg.iou_threshold = a.iou;
  cfg.metric = metric_arg(a.metric);
  cfg.threads = a.threads;
  const auto result = sweep(sequences, queries, store, cfg);
  for (const auto& w : result.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());

  write_text(a.out, export_curves(result));
  std::string summary = a.summary;
  if (summary.empty() && !a.out.empty() && a.out != "-") summary = fs::path(a.out).replace_extension(".json").string();
  if (summary.empty()) {
    std::cerr << sweep_summary_json(result);
  } else {
    write_text(summary, sweep_summary_json(result));
  }
}

struct StatsArgs {
  std::string table, metric, select_a, select_b, select;
  bool one_sided = false;
};

void run_paired_t(const StatsArgs& a) {
  const auto cells = load_cells(a.table);
  validate_cells(cells);
  const auto r = paired_t_test(cells, a.metric, Selector::parse(a.select_a), Selector::parse(a.select_b), !a.one_sided);
  auto j = test_json(r);
  j["metric"] = a.metric;
  j["select_a"] = a.select_a;
  j["select_b"] = a.select_b;
  std::cout << j.dump(2) << "\n";
}

void run_aggregate(const StatsArgs& a) {
  const auto cells = load_cells(a.table);
  validate_cells(cells);
  const auto agg = aggregate(cells, a.metric, Selector::parse(a.select));
  nlohmann::ordered_json j;
  j["metric"] = a.metric;
  j["select"] = a.select;
  j["n"] = agg.n;
  j["mean"] = agg.mean;
  j["stddev"] = agg.stddev;
  std::cout << j.dump(2) << "\n";
}

struct ReportArgs {
  std::string table, layout = "by_approach", format = "markdown", select, out;
  std::vector<std::string> metrics;
  int precision = 2;
};

void run_report(const ReportArgs& a) {
  TableSpec spec;
  const auto layout = parse_table_layout(a.layout);
  if (!layout) throw Error(ErrorCode::kInvalidArgument, "unknown layout '" + a.layout + "'");
  const auto format = parse_table_format(a.format);
  if (!format) throw Error(ErrorCode::kInvalidArgument, "unknown format '" + a.format + "'");
  spec.layout = *layout;
  spec.metrics = a.metrics;
  spec.precision = a.precision;
  if (!a.select.empty()) spec.filter = Selector::parse(a.select);
  write_text(a.out, render_table(load_cells(a.table), spec, *format));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Person re-identification benchmarking: standard and live evaluation, dataset unions, statistics"};
  app.require_subcommand(1);

  StandardArgs sa;
  auto* standard = app.add_subcommand("eval-standard", "closed-set CMC / mAP / mINP for one manifest");
  standard->add_option("--manifest", sa.manifest, "dataset manifest CSV")->required();
  standard->add_option("--embeddings", sa.embeddings, "EMB1 embedding file")->required();
  standard->add_option("--metric", sa.metric, "cosine or euclidean")->capture_default_str();
  standard->add_option("--approach", sa.approach, "approach name for the result cell")->required();
  standard->add_option("--train-set", sa.train_set, "training set name (default: manifest name)");
  standard->add_option("--eval-set", sa.eval_set, "evaluation set name (default: manifest name)");
  standard->add_option("--threads", sa.threads)->capture_default_str();
  standard->add_option("--out", sa.out, "output JSON (default: stdout)");

  CombineArgs ca;
  auto* combine = app.add_subcommand("combine", "build a COMBINED training manifest");
  combine->add_option("--mode", ca.mode, "all, others or scaled")->required();
  combine->add_option("--exclude", ca.exclude, "source left out (the evaluation domain)");
  combine->add_option("--seed", ca.seed)->capture_default_str();
  combine->add_option("--source", ca.sources, "NAME=manifest.csv, repeatable");
  combine->add_option("--sizes", ca.sizes, "NAME=COUNT, repeatable; prints the plan only");
  combine->add_option("--out", ca.out, "combined manifest CSV");
  combine->add_option("--plan", ca.plan_out, "plan JSON (default: <out>.plan.json)");

  LiveArgs la;
  auto* live = app.add_subcommand("eval-live", "live evaluation sweep over the alert threshold");
  live->add_option("--detections", la.detections, "detections JSONL")->required();
  live->add_option("--gt", la.gt, "ground-truth JSONL")->required();
  live->add_option("--queries", la.queries, "queries JSONL")->required();
  live->add_option("--embeddings", la.embeddings, "EMB1 file for detection embeddings")->required();
  live->add_option("--tau", la.tau, "window length in frames")->capture_default_str();
  live->add_option("--eta", la.eta, "candidates shown per alert")->capture_default_str();
  live->add_option("--beta-step", la.beta_step)->capture_default_str();
  live->add_option("--iou", la.iou, "IoU needed to accept a candidate")->capture_default_str();
  live->add_option("--det-threshold", la.det_threshold, "detector score cut")->capture_default_str();
  live->add_option("--metric", la.metric)->capture_default_str();
  live->add_option("--threads", la.threads)->capture_default_str();
  live->add_option("--out", la.out, "curve CSV (default: stdout)");
  live->add_option("--summary", la.summary, "summary JSON (default: <out>.json)");

  StatsArgs st;
  auto* stats = app.add_subcommand("stats", "aggregate and test result tables");
  stats->require_subcommand(1);
  auto* paired = stats->add_subcommand("paired-t", "paired t-test between two selections");
  paired->add_option("--table", st.table, "result cells JSON")->required();
  paired->add_option("--metric", st.metric)->required();
  paired->add_option("--select-a", st.select_a)->required();
  paired->add_option("--select-b", st.select_b)->required();
  paired->add_flag("--one-sided", st.one_sided, "test mean(a - b) > 0");
  auto* agg = stats->add_subcommand("aggregate", "mean and sample std of one selection");
  agg->add_option("--table", st.table, "result cells JSON")->required();
  agg->add_option("--metric", st.metric)->required();
  agg->add_option("--select", st.select)->required();

  ReportArgs ra;
  auto* report = app.add_subcommand("report", "render a result table");
  report->add_option("--table", ra.table, "result cells JSON")->required();
  report->add_option("--layout", ra.layout, "by_approach or by_train_set")->capture_default_str();
  report->add_option("--format", ra.format, "markdown or csv")->capture_default_str();
  report->add_option("--select", ra.select, "keep only cells picked by this selector");
  report->add_option("--metrics", ra.metrics, "columns, in order")->delimiter(',');
  report->add_option("--precision", ra.precision)->capture_default_str();
  report->add_option("--out", ra.out, "output file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*standard) run_standard(sa);
    if (*combine) run_combine(ca);
    if (*live) run_live(la);
    if (*paired) run_paired_t(st);
    if (*agg) run_aggregate(st);
    if (*report) run_report(ra);
  } catch (const Error& e) {
    std::fprintf(stderr, "reidbench: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "reidbench: %s\n", e.what());
    return 1;
  }
  return 0;
}
