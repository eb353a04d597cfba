// Experiment CLI: convergence studies, train/test accuracy studies, report
// rendering, and synthetic dataset generation.
//
//   cutnmf converge      --dataset u.data --format 100k --k 10,50 --out runs/
//   cutnmf evaluate      --dataset u.data --format 100k --k 6 --split 0.8
//                        --algo cutnmf,knn --out runs/
//   cutnmf report        runs/results.csv --out runs/report.csv --quoted ml1m
//   cutnmf gen-synthetic --users 1000 --items 5000 --rank 20 --observed 500000
//                        --out data/

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cutnmf/cutnmf.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

cutnmf::DatasetSource parse_format(const std::string& format) {
  if (format == "100k") return cutnmf::DatasetSource::movielens_100k;
  if (format == "1m") return cutnmf::DatasetSource::movielens_1m;
  if (format == "10m") return cutnmf::DatasetSource::movielens_10m;
  if (format == "csv") return cutnmf::DatasetSource::generic_csv;
  if (format == "synthetic") return cutnmf::DatasetSource::synthetic;
  throw CLI::ValidationError("--format", "unknown format: " + format);
}

struct CommonFlags {
  std::string dataset;
  std::string format = "csv";
  std::vector<std::uint32_t> k_list{10};
  std::uint32_t jmax = 2000;
  double tol = 1e-7;
  std::uint64_t seed = 0;
  std::string out = ".";
  std::uint32_t trace_every = 0;
  bool no_trace_elapsed = false;
  std::uint32_t inner_sweeps = 2;
  double coord_tol = 1e-9;
  bool cyclic = false;
  int threshold = 0;
  int threads = 0;
  int v_min = 1;
  int v_max = 5;
  std::uint32_t synth_users = 300;
  std::uint32_t synth_items = 800;
  std::uint32_t synth_rank = 10;
  std::uint64_t synth_observed = 48000;
};

void add_common_flags(CLI::App& cmd, CommonFlags& f) {
  cmd.add_option("--dataset", f.dataset, "ratings file (not used with --format synthetic)");
  cmd.add_option("--format", f.format, "100k | 1m | 10m | csv | synthetic")
      ->capture_default_str();
  cmd.add_option("--k", f.k_list, "ranks to sweep")->delimiter(',')->capture_default_str();
  cmd.add_option("--jmax", f.jmax, "outer iteration budget")->capture_default_str();
  cmd.add_option("--tol", f.tol, "relative mFE stagnation tolerance")->capture_default_str();
  cmd.add_option("--seed", f.seed, "master seed")->capture_default_str();
  cmd.add_option("--out", f.out, "output directory")->capture_default_str();
  cmd.add_option("--trace-every", f.trace_every,
                 "emit full metric rows every N iterations (0 = off)")
      ->capture_default_str();
  cmd.add_flag("--no-trace-elapsed", f.no_trace_elapsed,
               "omit the wall-clock column from trace files");
  cmd.add_option("--inner-sweeps", f.inner_sweeps, "coordinate passes per half-step")
      ->capture_default_str();
  cmd.add_option("--coord-tol", f.coord_tol, "per-coordinate optimality threshold")
      ->capture_default_str();
  cmd.add_flag("--cyclic", f.cyclic, "cyclic coordinate order instead of greedy");
  cmd.add_option("--threshold", f.threshold,
                 "recommendability threshold (0 = scale default)");
  cmd.add_option("--threads", f.threads, "worker threads (0 = runtime default)");
  cmd.add_option("--vmin", f.v_min, "minimum vote for csv/synthetic datasets")
      ->capture_default_str();
  cmd.add_option("--vmax", f.v_max, "maximum vote for csv/synthetic datasets")
      ->capture_default_str();
  cmd.add_option("--synth-users", f.synth_users, "synthetic: users")->capture_default_str();
  cmd.add_option("--synth-items", f.synth_items, "synthetic: items")->capture_default_str();
  cmd.add_option("--synth-rank", f.synth_rank, "synthetic: planted rank")
      ->capture_default_str();
  cmd.add_option("--synth-observed", f.synth_observed, "synthetic: observed cells")
      ->capture_default_str();
}

cutnmf::ExperimentConfig to_config(const CommonFlags& f) {
  cutnmf::ExperimentConfig cfg;
  cfg.dataset.source = parse_format(f.format);
  cfg.dataset.path = f.dataset;
  cfg.dataset.scale = cutnmf::RatingScale{f.v_min, f.v_max};
  if (cfg.dataset.source == cutnmf::DatasetSource::synthetic) {
    cutnmf::SyntheticSpec spec;
    spec.n_users = f.synth_users;
    spec.n_items = f.synth_items;
    spec.true_rank = f.synth_rank;
    spec.n_observed = f.synth_observed;
    spec.scale = cfg.dataset.scale;
    cfg.synthetic = spec;
  }
  cfg.k_list = f.k_list;
  cfg.master_seed = f.seed;
  cfg.out_dir = f.out;
  cfg.j_max = f.jmax;
  cfg.tol = f.tol;
  cfg.trace_every = f.trace_every;
  cfg.trace_elapsed = !f.no_trace_elapsed;
  cfg.nnls.inner_sweeps = f.inner_sweeps;
  cfg.nnls.coord_tol = f.coord_tol;
  cfg.nnls.greedy = !f.cyclic;
  cfg.threshold = f.threshold;
#ifdef _OPENMP
  if (f.threads > 0) omp_set_num_threads(f.threads);
#endif
  return cfg;
}

void print_cells(const cutnmf::StudyOutput& output) {
  for (const cutnmf::CellResult& c : output.cells) {
    std::printf("%-8s k=%-4u iters=%-6u %-8s mae=%.4f zero_one=%.4f", c.algo.c_str(),
                c.k, c.iterations, c.report.set_label.c_str(), c.report.mae,
                c.report.zero_one);
    if (c.report.precision) std::printf(" precision=%.2f", *c.report.precision);
    if (c.report.recall) std::printf(" recall=%.2f", *c.report.recall);
    std::printf("\n");
  }
  for (const std::string& f : output.files) std::printf("wrote %s\n", f.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cutnmf: adaptive matrix-completion recommender toolkit"};
  // key=value lines grouped under a [verb] section; command-line flags win
  app.set_config("--config", "", "read flags from a config file (before the verb)");
  app.require_subcommand(1);

  CommonFlags converge_flags, evaluate_flags;
  double split_fraction = 0.8;
  std::vector<std::string> algos{"cutnmf"};
  std::vector<std::string> eval_sets{"omega80", "theta20"};
  cutnmf::KnnConfig knn;
  double rnmf_lambda = 0.05, rnmf_lr = 0.005;
  std::uint32_t rnmf_epochs = 60, nmf_iters = 200;

  CLI::App* converge = app.add_subcommand(
      "converge", "full-Omega convergence study; per-iteration error traces");
  add_common_flags(*converge, converge_flags);

  CLI::App* evaluate = app.add_subcommand(
      "evaluate", "train on a split and score the held-out ratings");
  add_common_flags(*evaluate, evaluate_flags);
  evaluate->add_option("--split", split_fraction, "training fraction of Omega")
      ->capture_default_str();
  evaluate->add_option("--algo", algos, "algorithms: cutnmf, knn, nmf, rnmf")
      ->delimiter(',')
      ->capture_default_str();
  evaluate->add_option("--eval-sets", eval_sets, "omega | omega80 | theta20")
      ->delimiter(',')
      ->capture_default_str();
  evaluate->add_option("--neighbors", knn.n_neighbors, "knn: neighborhood size")
      ->capture_default_str();
  evaluate->add_option("--min-overlap", knn.min_overlap, "knn: minimum co-rated items")
      ->capture_default_str();
  evaluate->add_option("--lambda", rnmf_lambda, "rnmf: regularization weight")
      ->capture_default_str();
  evaluate->add_option("--learning-rate", rnmf_lr, "rnmf: SGD step size")
      ->capture_default_str();
  evaluate->add_option("--epochs", rnmf_epochs, "rnmf: SGD epochs")->capture_default_str();
  evaluate->add_option("--nmf-iters", nmf_iters, "nmf: multiplicative update iterations")
      ->capture_default_str();

  std::vector<std::string> report_inputs;
  std::string report_out = "report.csv";
  std::string quoted = "ml1m";
  CLI::App* report = app.add_subcommand(
      "report", "merge results files into a ranked comparison table");
  report->add_option("inputs", report_inputs, "results.csv files")->required();
  report->add_option("--out", report_out, "output path")->capture_default_str();
  report->add_option("--quoted", quoted, "append published pNMF row: ml1m | ml10m | none")
      ->capture_default_str();

  CommonFlags gen_flags;
  std::string gen_name = "synthetic";
  CLI::App* gen = app.add_subcommand(
      "gen-synthetic", "write a planted low-rank dataset and its ground truth");
  gen->add_option("--users", gen_flags.synth_users, "users")->capture_default_str();
  gen->add_option("--items", gen_flags.synth_items, "items")->capture_default_str();
  gen->add_option("--rank", gen_flags.synth_rank, "planted rank")->capture_default_str();
  gen->add_option("--observed", gen_flags.synth_observed, "observed cells")
      ->capture_default_str();
  gen->add_option("--seed", gen_flags.seed, "master seed")->capture_default_str();
  gen->add_option("--vmin", gen_flags.v_min, "minimum vote")->capture_default_str();
  gen->add_option("--vmax", gen_flags.v_max, "maximum vote")->capture_default_str();
  gen->add_option("--out", gen_flags.out, "output directory")->capture_default_str();
  gen->add_option("--name", gen_name, "basename for the written files")
      ->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (converge->parsed()) {
      cutnmf::ExperimentConfig cfg = to_config(converge_flags);
      cfg.eval_sets = {"omega"};
      print_cells(cutnmf::run_convergence_study(cfg));
    } else if (evaluate->parsed()) {
      cutnmf::ExperimentConfig cfg = to_config(evaluate_flags);
      cfg.split_fraction = split_fraction;
      cfg.algos = algos;
      cfg.eval_sets = eval_sets;
      cfg.knn = knn;
      cfg.rnmf_lambda = rnmf_lambda;
      cfg.rnmf_learning_rate = rnmf_lr;
      cfg.rnmf_epochs = rnmf_epochs;
      cfg.nmf_iterations = nmf_iters;
      print_cells(cutnmf::run_accuracy_study(cfg));
    } else if (report->parsed()) {
      cutnmf::QuotedBaselines q = quoted == "ml1m"    ? cutnmf::QuotedBaselines::ml1m
                                  : quoted == "ml10m" ? cutnmf::QuotedBaselines::ml10m
                                                      : cutnmf::QuotedBaselines::none;
      cutnmf::render_report(report_inputs, report_out, q);
      std::printf("wrote %s\n", report_out.c_str());
    } else if (gen->parsed()) {
      cutnmf::SyntheticSpec spec;
      spec.n_users = gen_flags.synth_users;
      spec.n_items = gen_flags.synth_items;
      spec.true_rank = gen_flags.synth_rank;
      spec.n_observed = gen_flags.synth_observed;
      spec.scale = cutnmf::RatingScale{gen_flags.v_min, gen_flags.v_max};
      spec.seed = cutnmf::derive_seed(gen_flags.seed, "synthetic");
      const cutnmf::SyntheticData data = cutnmf::generate_synthetic(spec);
      std::filesystem::create_directories(gen_flags.out);
      const auto base = std::filesystem::path(gen_flags.out) / gen_name;
      cutnmf::save_generic_csv(base.string() + ".csv", data.observed);
      cutnmf::save_matrix_csv(base.string() + ".truth.csv", data.ground_truth);
      std::printf("wrote %s.csv and %s.truth.csv\n", base.string().c_str(),
                  base.string().c_str());
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
