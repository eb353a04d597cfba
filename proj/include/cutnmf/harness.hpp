#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cutnmf/baselines.hpp"
#include "cutnmf/data_io.hpp"
#include "cutnmf/engine.hpp"
#include "cutnmf/metrics.hpp"

namespace cutnmf {

// Reproducible experiment runner behind the CLI verbs. Every random stream
// (factor init, splits, synthetic data, SGD shuffles) is derived from one
// master seed with a stable label, so a sub-seed does not move when an
// unrelated knob changes.
struct ExperimentConfig {
  DatasetSpec dataset;
  std::optional<SyntheticSpec> synthetic;  // used when dataset.source == synthetic

  std::vector<std::string> algos{"cutnmf"};
  std::vector<std::uint32_t> k_list{10};
  std::optional<double> split_fraction;
  std::vector<std::string> eval_sets{"omega80", "theta20"};

  std::uint64_t master_seed = 0;
  std::string out_dir = ".";

  std::uint32_t j_max = 2000;
  double tol = 1e-7;
  std::uint32_t trace_every = 0;
  bool trace_elapsed = true;  // drop the wall-clock column for byte-stable diffs

  NnlsOptions nnls;
  KnnConfig knn;
  double rnmf_lambda = 0.05;
  double rnmf_learning_rate = 0.005;
  std::uint32_t rnmf_epochs = 60;
  std::uint32_t nmf_iterations = 200;

  int threshold = 0;  // 0 -> default for the dataset's scale

  void validate() const {
    check_arg(!k_list.empty(), "ExperimentConfig: empty k list");
    check_arg(!algos.empty(), "ExperimentConfig: no algorithm selected");
    for (const std::string& s : eval_sets) {
      check_arg(s == "omega" || s == "omega80" || s == "theta20",
                "ExperimentConfig: unknown eval set label");
      check_arg(s != "theta20" || split_fraction.has_value(),
                "ExperimentConfig: theta20 evaluation requires a split");
    }
    nnls.validate();
    knn.validate();
  }
};

struct CellResult {
  std::string algo;
  std::uint32_t k = 0;
  std::uint32_t iterations = 0;
  MetricReport report;
};

struct StudyOutput {
  std::vector<CellResult> cells;
  std::vector<std::string> files;
};

namespace detail {

inline MatrixI factor_predictions(const MatrixD& w, const MatrixD& h,
                                  const RatingScale& scale) {
  return cut_upper(round_nearest(matmul_transposed(w, h)), scale.v_max);
}

inline std::string results_header() {
  return "algo,set_label,k,iterations,mae,cmae,zero_one,precision,recall";
}

inline std::string cell_csv_row(const CellResult& c) {
  return c.algo + "," + metric_csv_row(c.report, c.k, c.iterations);
}

inline std::string trace_path(const std::string& out_dir, const std::string& algo,
                              std::uint32_t k) {
  return (std::filesystem::path(out_dir) /
          ("trace_" + algo + "_k" + std::to_string(k) + ".csv"))
      .string();
}

}  // namespace detail

inline Dataset load_dataset(const ExperimentConfig& cfg) {
  if (cfg.dataset.source == DatasetSource::synthetic) {
    check_arg(cfg.synthetic.has_value(),
              "load_dataset: synthetic source needs generation parameters");
    SyntheticSpec spec = *cfg.synthetic;
    spec.seed = derive_seed(cfg.master_seed, "synthetic");
    SyntheticData data = generate_synthetic(spec);
    std::vector<std::int64_t> user_ids(spec.n_users), item_ids(spec.n_items);
    for (std::uint32_t u = 0; u < spec.n_users; ++u) user_ids[u] = u;
    for (std::uint32_t i = 0; i < spec.n_items; ++i) item_ids[i] = i;
    return Dataset{std::move(data.observed), std::move(user_ids), std::move(item_ids)};
  }
  return load_movielens(cfg.dataset);
}

inline int effective_threshold(const ExperimentConfig& cfg, const RatingScale& scale) {
  return cfg.threshold > 0 ? cfg.threshold : default_threshold(scale);
}

struct TrainOutcome {
  MatrixI predictions;  // integer predictions, defined at least on the eval cells
  std::uint32_t iterations = 0;
};

// Train one algorithm on the training ratings only and return integer
// predictions. The test side of a split is never passed in here, which is
// what keeps held-out cells structurally unreachable during training.
inline TrainOutcome train_and_predict(const std::string& algo,
                                      const ObservedRatings& train, std::uint32_t k,
                                      const ExperimentConfig& cfg,
                                      std::span<const Cell> prediction_cells,
                                      std::vector<IterationTrace>* trace_out = nullptr) {
  if (algo == "cutnmf") {
    CutNmfConfig engine_cfg;
    engine_cfg.k = k;
    engine_cfg.max_iterations = cfg.j_max;
    engine_cfg.tol = cfg.tol;
    engine_cfg.seed = derive_seed(cfg.master_seed, "cutnmf/k=" + std::to_string(k));
    engine_cfg.nnls = cfg.nnls;
    CutNmfResult result = cutnmf(train, engine_cfg);
    if (trace_out) *trace_out = result.trace;
    return {predicted_ratings(result.factors, train.scale()), result.iterations()};
  }
  if (algo == "knn") {
    std::vector<int> values = knn_predict(train, cfg.knn, prediction_cells);
    MatrixI pred(train.n_users(), train.n_items());
    for (std::size_t i = 0; i < prediction_cells.size(); ++i) {
      pred(prediction_cells[i].row, prediction_cells[i].col) = values[i];
    }
    return {std::move(pred), 0};
  }
  if (algo == "nmf") {
    const FactorPair factors =
        nmf_multiplicative(train.to_dense(), k, cfg.nmf_iterations,
                           derive_seed(cfg.master_seed, "nmf/k=" + std::to_string(k)));
    return {predicted_ratings(factors, train.scale()), cfg.nmf_iterations};
  }
  if (algo == "rnmf") {
    RegNmfConfig rc;
    rc.k = k;
    rc.lambda = cfg.rnmf_lambda;
    rc.learning_rate = cfg.rnmf_learning_rate;
    rc.epochs = cfg.rnmf_epochs;
    rc.seed = derive_seed(cfg.master_seed, "rnmf/k=" + std::to_string(k));
    const FactorPair factors = regularized_mf(train, rc);
    return {predicted_ratings(factors, train.scale()), rc.epochs};
  }
  throw std::invalid_argument("unknown algorithm: " + algo);
}

// Convergence study: full-Omega training runs of the adaptive engine for each
// rank, emitting the per-iteration error trace plus periodic full metric rows
// on Omega, and one final summary row per rank.
inline StudyOutput run_convergence_study(const ExperimentConfig& config) {
  ExperimentConfig cfg = config;
  cfg.eval_sets = {"omega"};  // convergence runs always report on Omega
  cfg.validate();
  check_arg(!cfg.split_fraction.has_value(),
            "run_convergence_study: convergence runs train on the full Omega");
  const Dataset data = load_dataset(cfg);
  const ObservedRatings& a = data.ratings;
  const int threshold = effective_threshold(cfg, a.scale());
  std::filesystem::create_directories(cfg.out_dir);

  StudyOutput output;
  std::vector<std::string> result_rows;
  for (const std::uint32_t k : cfg.k_list) {
    CutNmfConfig engine_cfg;
    engine_cfg.k = k;
    engine_cfg.max_iterations = cfg.j_max;
    engine_cfg.tol = cfg.tol;
    engine_cfg.seed = derive_seed(cfg.master_seed, "cutnmf/k=" + std::to_string(k));
    engine_cfg.nnls = cfg.nnls;
    engine_cfg.trace_every = cfg.trace_every;

    const EvalSet omega{"omega", a.entries()};
    std::map<std::uint32_t, MetricReport> metric_rows;
    const EngineObserver observer = [&](const IterationTrace& t, const MatrixD& w,
                                        const MatrixD& h) {
      const MatrixI pred = detail::factor_predictions(w, h, a.scale());
      metric_rows[t.iteration] = evaluate_metrics(omega, pred, threshold);
    };
    const CutNmfResult result = cutnmf(a, engine_cfg, observer);

    std::string trace_csv = cfg.trace_elapsed
                                ? "iteration,mfe,mie,elapsed,mae,cmae,zero_one,precision,recall\n"
                                : "iteration,mfe,mie,mae,cmae,zero_one,precision,recall\n";
    for (const IterationTrace& t : result.trace) {
      trace_csv += std::to_string(t.iteration);
      trace_csv += ',';
      trace_csv += format_double(t.mfe);
      trace_csv += ',';
      trace_csv += std::to_string(t.mie);
      if (cfg.trace_elapsed) {
        trace_csv += ',';
        trace_csv += format_double(t.elapsed_seconds);
      }
      const auto it = metric_rows.find(t.iteration);
      if (it != metric_rows.end()) {
        const MetricReport& r = it->second;
        trace_csv += ',' + format_double(r.mae) + ',' + format_optional(r.cmae) + ',' +
                     format_double(r.zero_one) + ',' + format_optional(r.precision) +
                     ',' + format_optional(r.recall);
      } else {
        trace_csv += ",,,,,";
      }
      trace_csv += '\n';
    }
    const std::string tpath = detail::trace_path(cfg.out_dir, "cutnmf", k);
    write_file_atomic(tpath, trace_csv);
    output.files.push_back(tpath);

    const MatrixI pred = predicted_ratings(result.factors, a.scale());
    CellResult cell{"cutnmf", k, result.iterations(),
                    evaluate_metrics(omega, pred, threshold)};
    result_rows.push_back(detail::cell_csv_row(cell));
    output.cells.push_back(std::move(cell));
  }

  std::string results_csv = detail::results_header() + "\n";
  for (const std::string& row : result_rows) results_csv += row + "\n";
  const std::string rpath = (std::filesystem::path(cfg.out_dir) / "results.csv").string();
  write_file_atomic(rpath, results_csv);
  output.files.push_back(rpath);
  return output;
}

// Accuracy study: train every selected algorithm on the 80% side and report
// metrics on the requested evaluation sets; one results row per
// (algorithm, k, set).
inline StudyOutput run_accuracy_study(const ExperimentConfig& cfg) {
  cfg.validate();
  check_arg(cfg.split_fraction.has_value(), "run_accuracy_study: split required");
  const Dataset data = load_dataset(cfg);
  const ObservedRatings& a = data.ratings;
  const int threshold = effective_threshold(cfg, a.scale());
  std::filesystem::create_directories(cfg.out_dir);

  const Split split =
      split_train_test(a, *cfg.split_fraction, derive_seed(cfg.master_seed, "split"));

  std::vector<Cell> prediction_cells;
  prediction_cells.reserve(a.size());
  for (const Rating& r : a.entries()) prediction_cells.push_back({r.user, r.item});

  StudyOutput output;
  std::vector<std::string> result_rows;
  for (const std::string& algo : cfg.algos) {
    // neighborhood prediction has no rank parameter; run it once
    const std::vector<std::uint32_t> ks =
        algo == "knn" ? std::vector<std::uint32_t>{0} : cfg.k_list;
    for (const std::uint32_t k : ks) {
      std::vector<IterationTrace> trace;
      const TrainOutcome outcome =
          train_and_predict(algo, split.train, k, cfg, prediction_cells,
                            cfg.trace_every > 0 ? &trace : nullptr);
      for (const std::string& set_label : cfg.eval_sets) {
        const EvalSet set{set_label, set_label == "omega"     ? a.entries()
                                     : set_label == "omega80" ? split.train.entries()
                                                              : split.test.entries()};
        CellResult cell{algo, k, outcome.iterations,
                        evaluate_metrics(set, outcome.predictions, threshold)};
        result_rows.push_back(detail::cell_csv_row(cell));
        output.cells.push_back(std::move(cell));
      }
      if (!trace.empty()) {
        std::string trace_csv =
            cfg.trace_elapsed ? "iteration,mfe,mie,elapsed\n" : "iteration,mfe,mie\n";
        for (const IterationTrace& t : trace) {
          trace_csv += std::to_string(t.iteration) + ',' + format_double(t.mfe) + ',' +
                       std::to_string(t.mie);
          if (cfg.trace_elapsed) trace_csv += ',' + format_double(t.elapsed_seconds);
          trace_csv += '\n';
        }
        const std::string tpath = detail::trace_path(cfg.out_dir, algo, k);
        write_file_atomic(tpath, trace_csv);
        output.files.push_back(tpath);
      }
    }
  }

  std::string results_csv = detail::results_header() + "\n";
  for (const std::string& row : result_rows) results_csv += row + "\n";
  const std::string rpath = (std::filesystem::path(cfg.out_dir) / "results.csv").string();
  write_file_atomic(rpath, results_csv);
  output.files.push_back(rpath);
  return output;
}

// --- report rendering ---

enum class QuotedBaselines { none, ml1m, ml10m };

struct ReportRow {
  std::string provenance;  // "computed" or "quoted"
  std::string algo;
  std::string set_label;
  std::string k;
  std::string iterations;
  std::optional<double> mae;
  std::optional<double> cmae;
  std::optional<double> zero_one;
  std::optional<double> precision;
  std::optional<double> recall;
};

namespace detail {

inline std::optional<double> parse_opt_double(std::string_view s) {
  double v = 0.0;
  if (s.empty() || !parse_double(s, v)) return std::nullopt;
  return v;
}

}  // namespace detail

// Merge results files into one table, append the published probabilistic-NMF
// reference numbers as explicitly quoted rows, add the distance-from-origin
// tradeoff column for the (MAE, 0-1) scatter, and sort by 0-1 loss.
inline std::string render_report(const std::vector<std::string>& results_files,
                                 const std::string& out_path,
                                 QuotedBaselines quoted = QuotedBaselines::ml1m) {
  std::vector<ReportRow> rows;
  for (const std::string& file : results_files) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("render_report: missing input file: " + file);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line_no == 1 || line.empty()) continue;  // header
      const auto f = detail::split(line, ",");
      if (f.size() != 9) throw detail::parse_error(file, line_no, "expected 9 fields");
      ReportRow row;
      row.provenance = "computed";
      row.algo = std::string(f[0]);
      row.set_label = std::string(f[1]);
      row.k = std::string(f[2]);
      row.iterations = std::string(f[3]);
      row.mae = detail::parse_opt_double(f[4]);
      row.cmae = detail::parse_opt_double(f[5]);
      row.zero_one = detail::parse_opt_double(f[6]);
      row.precision = detail::parse_opt_double(f[7]);
      row.recall = detail::parse_opt_double(f[8]);
      rows.push_back(std::move(row));
    }
  }
  if (quoted != QuotedBaselines::none) {
    ReportRow q;
    q.provenance = "quoted";
    q.algo = "pnmf";
    q.set_label = "theta20";
    q.k = "6";
    q.iterations = "";
    if (quoted == QuotedBaselines::ml1m) {
      q.mae = 0.664;
      q.cmae = 0.526;
      q.zero_one = 0.270;
    } else {
      q.mae = 0.676;
      q.cmae = 0.542;
      q.zero_one = 0.284;
    }
    rows.push_back(std::move(q));
  }
  std::stable_sort(rows.begin(), rows.end(), [](const ReportRow& a, const ReportRow& b) {
    const double za = a.zero_one.value_or(std::numeric_limits<double>::infinity());
    const double zb = b.zero_one.value_or(std::numeric_limits<double>::infinity());
    if (za != zb) return za < zb;
    return a.algo < b.algo;
  });

  std::string csv =
      "provenance,algo,set_label,k,iterations,mae,cmae,zero_one,precision,recall,"
      "dist_origin\n";
  for (const ReportRow& r : rows) {
    csv += r.provenance + ',' + r.algo + ',' + r.set_label + ',' + r.k + ',' +
           r.iterations + ',' + format_optional(r.mae) + ',' + format_optional(r.cmae) +
           ',' + format_optional(r.zero_one) + ',' + format_optional(r.precision) + ',' +
           format_optional(r.recall) + ',';
    if (r.mae && r.zero_one) {
      csv += format_double(std::sqrt(*r.mae * *r.mae + *r.zero_one * *r.zero_one));
    }
    csv += '\n';
  }
  write_file_atomic(out_path, csv);
  return csv;
}

}  // namespace cutnmf
