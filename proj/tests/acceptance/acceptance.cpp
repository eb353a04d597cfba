// Acceptance suite: one pass/fail line per criterion, every tolerance pinned
// in code. Criteria that call for the MovieLens 100K dataset use the real
// file when CUTNMF_ML100K points at it (u.data layout) and otherwise fall
// back to a deterministic fixture with matched shape, margins, popularity
// skew, and latent-plus-noise structure (see tests/support/ml100k_like.hpp).

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "cutnmf/cutnmf.hpp"
#include "support/ml100k_like.hpp"
#include "support/test_support.hpp"

using namespace cutnmf;

namespace {

constexpr std::uint64_t kMasterSeed = 42;

struct CriterionResult {
  int id;
  std::string name;
  bool pass;
  std::string detail;
  double seconds;
};

std::vector<CriterionResult> g_results;

void run_criterion(int id, const std::string& name,
                   const std::function<std::pair<bool, std::string>()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  bool pass = false;
  std::string detail;
  try {
    std::tie(pass, detail) = body();
  } catch (const std::exception& e) {
    pass = false;
    detail = std::string("exception: ") + e.what();
  }
  const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
  g_results.push_back({id, name, pass, detail, dt.count()});
  std::printf("[%s] C%d %s (%.1fs) %s\n", pass ? "PASS" : "FAIL", id, name.c_str(),
              dt.count(), detail.c_str());
  std::fflush(stdout);
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", x);
  return buf;
}

// ---- dataset selection for the ML-100K criteria ----

const ObservedRatings& acceptance_dataset(std::string* provenance = nullptr) {
  static std::string source;
  static std::optional<ObservedRatings> data;
  if (!data) {
    const char* path = std::getenv("CUTNMF_ML100K");
    if (path != nullptr && std::filesystem::exists(path)) {
      Dataset d = load_movielens({DatasetSource::movielens_100k, path, {1, 5}});
      data = std::move(d.ratings);
      source = std::string("real ml-100k (") + path + ")";
    } else {
      data = testsupport::make_ml100k_like(1337);
      source = "ml100k-shaped deterministic fixture";
    }
  }
  if (provenance) *provenance = source;
  return *data;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

// one trained cutnmf cell on an 80/20 split of the acceptance dataset
struct SplitCell {
  MetricReport omega80;
  MetricReport theta20;
  std::uint32_t iterations;
};

SplitCell run_split_cell(const ObservedRatings& a, std::uint32_t k,
                         std::uint64_t master, std::uint32_t j_max) {
  const Split split = split_train_test(a, 0.8, derive_seed(master, "split"));
  CutNmfConfig cfg;
  cfg.k = k;
  cfg.max_iterations = j_max;
  cfg.tol = 1e-7;
  cfg.seed = derive_seed(master, "cutnmf/k=" + std::to_string(k));
  const CutNmfResult result = cutnmf::cutnmf(split.train, cfg);
  const MatrixI pred = predicted_ratings(result.factors, a.scale());
  return {evaluate_metrics("omega80", split.train.entries(), pred, 4),
          evaluate_metrics("theta20", split.test.entries(), pred, 4),
          result.iterations()};
}

// ---- criteria ----

std::pair<bool, std::string> criterion_1_nnls_oracle() {
  Rng rng(901);
  double worst_gap = 0.0, worst_kkt = 0.0;
  NnlsOptions opt;
  opt.inner_sweeps = 20000;
  opt.coord_tol = 1e-13;
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t n = 2 + rng.below(4);  // n, m <= 5
    const std::size_t m = 2 + rng.below(4);
    const std::size_t k = 1 + rng.below(2);  // k <= 2
    const MatrixD c = testsupport::random_matrix(n, m, rng, 5.0);
    const MatrixD w = testsupport::random_matrix(n, k, rng);
    const MatrixD h = solve_for_H(c, w, MatrixD(m, k), opt);
    const MatrixD oracle =
        testsupport::oracle_projected_gradient(c, w, MatrixD(m, k), 1e-10);
    const double got = testsupport::oracle_subproblem_objective(c, w, h);
    const double want = testsupport::oracle_subproblem_objective(c, w, oracle);
    worst_gap = std::max(worst_gap, std::abs(got - want));
    worst_kkt = std::max(worst_kkt, kkt_residual(c, w, h));
  }
  const bool pass = worst_gap <= 1e-6 && worst_kkt <= 1e-6;
  return {pass, "worst objective gap " + fmt(worst_gap * 1e6) + "e-6, worst kkt " +
                    fmt(worst_kkt * 1e6) + "e-6"};
}

std::pair<bool, std::string> criterion_2_3_metric_oracles(bool consistency_side) {
  Rng rng(902);
  double worst = 0.0;
  bool consistent = true;
  for (int rep = 0; rep < 100; ++rep) {
    const ObservedRatings a = testsupport::random_ratings(20, 30, 0.35, rng);
    const MatrixI c = testsupport::random_predictions(20, 30, rng);
    const MatrixD b = testsupport::random_matrix(20, 30, rng, 7.0);

    worst = std::max(worst, std::abs(mae(a.entries(), c) - testsupport::oracle_mae(a, c)));
    worst = std::max(worst, std::abs(zero_one_loss(a.entries(), c, 4) -
                                     testsupport::oracle_zero_one(a, c, 4)));
    const auto gc = cmae(a.entries(), c, 4);
    const auto wc = testsupport::oracle_cmae(a, c, 4);
    if (gc.has_value() != wc.has_value()) return {false, "cmae presence mismatch"};
    if (gc) worst = std::max(worst, std::abs(*gc - *wc));
    const auto [gp, gr] = precision_recall(a.entries(), c, 4);
    const auto [wp, wr] = testsupport::oracle_precision_recall(a, c, 4);
    if (gp.has_value() != wp.has_value() || gr.has_value() != wr.has_value()) {
      return {false, "precision/recall presence mismatch"};
    }
    if (gp) worst = std::max(worst, std::abs(*gp - *wp));
    if (gr) worst = std::max(worst, std::abs(*gr - *wr));
    worst = std::max(worst, std::abs(mfe(a, b) - testsupport::oracle_mfe(a, b)));
    if (mie(a, b) != testsupport::oracle_mie(a, b)) return {false, "mie mismatch"};

    // cross-metric consistency: 0-1 = 0 iff S = R (P = R = 100 or S empty)
    const double loss = zero_one_loss(a.entries(), c, 4);
    std::size_t s_size = 0;
    for (const Rating& r : a.entries()) s_size += r.value >= 4;
    if (loss == 0.0) {
      if (s_size > 0 && !(gp && gr && *gp == 100.0 && *gr == 100.0)) consistent = false;
      if (s_size == 0 && gr.has_value()) consistent = false;
    } else if (gp && gr && *gp == 100.0 && *gr == 100.0) {
      consistent = false;
    }
  }
  if (consistency_side) {
    return {consistent, consistent ? "0-1 = 0 equivalence held on all 100 instances"
                                   : "equivalence violated"};
  }
  return {worst <= 1e-12, "worst oracle deviation " + fmt(worst * 1e12) + "e-12"};
}

std::pair<bool, std::string> criterion_4_synthetic_recovery() {
  SyntheticSpec spec;
  spec.n_users = 300;
  spec.n_items = 800;
  spec.true_rank = 10;
  spec.n_observed = 48000;  // 20% of the cells
  spec.seed = derive_seed(kMasterSeed, "synthetic");
  spec.scale = {1, 5};
  const SyntheticData data = generate_synthetic(spec);

  std::map<std::uint32_t, double> mae_by_k;
  double zero_one_k10 = 1.0;
  for (const std::uint32_t k : {5u, 10u, 15u}) {
    CutNmfConfig cfg;
    cfg.k = k;
    cfg.max_iterations = 5000;
    cfg.tol = 1e-9;
    cfg.seed = derive_seed(kMasterSeed, "cutnmf/k=" + std::to_string(k));
    const CutNmfResult result = cutnmf::cutnmf(data.observed, cfg);
    const MatrixI pred = predicted_ratings(result.factors, data.observed.scale());
    const MetricReport rep = evaluate_metrics("omega", data.observed.entries(), pred, 4);
    mae_by_k[k] = rep.mae;
    if (k == 10) zero_one_k10 = rep.zero_one;
  }
  const bool accuracy = mae_by_k[10] <= 0.30 && zero_one_k10 <= 0.06;
  const bool monotone = mae_by_k[15] <= mae_by_k[10] && mae_by_k[10] <= mae_by_k[5];
  return {accuracy && monotone,
          "mae(k=5,10,15) = " + fmt(mae_by_k[5]) + ", " + fmt(mae_by_k[10]) + ", " +
              fmt(mae_by_k[15]) + "; 0-1(k=10) = " + fmt(zero_one_k10)};
}

std::pair<bool, std::string> criterion_5_full_omega_convergence() {
  std::string provenance;
  const ObservedRatings& a = acceptance_dataset(&provenance);
  CutNmfConfig cfg;
  cfg.k = 100;
  cfg.max_iterations = 5000;
  cfg.tol = 1e-7;
  cfg.seed = derive_seed(kMasterSeed, "cutnmf/k=100");
  const CutNmfResult result = cutnmf::cutnmf(a, cfg);
  const MatrixI pred = predicted_ratings(result.factors, a.scale());
  const MetricReport rep = evaluate_metrics("omega", a.entries(), pred, 4);

  double worst_rise = 0.0;
  for (std::size_t j = 10; j < result.trace.size(); ++j) {
    worst_rise = std::max(worst_rise, result.trace[j].mfe - result.trace[j - 1].mfe);
  }
  const bool pass = rep.mae <= 0.25 && rep.precision.value_or(0.0) >= 95.0 &&
                    rep.recall.value_or(0.0) >= 95.0 && worst_rise <= 1e-9;
  return {pass, "[" + provenance + "] mae " + fmt(rep.mae) + ", P " +
                    fmt(rep.precision.value_or(0)) + ", R " +
                    fmt(rep.recall.value_or(0)) + ", iters " +
                    std::to_string(result.iterations()) + ", worst mfe rise " +
                    fmt(worst_rise * 1e9) + "e-9"};
}

// shared across criteria 6 and 7: five-seed sweep at k = 6 and k = 50
struct SeedSweep {
  std::vector<double> zero_one_k6, prec_k6, rec_k6, mae80_k6;
  std::vector<double> zero_one_k50, mae80_k50;
};

const SeedSweep& seed_sweep() {
  static std::optional<SeedSweep> sweep;
  if (!sweep) {
    sweep.emplace();
    const ObservedRatings& a = acceptance_dataset();
    for (std::uint64_t rep = 0; rep < 5; ++rep) {
      const std::uint64_t master = derive_seed(kMasterSeed, "rep=" + std::to_string(rep));
      const SplitCell k6 = run_split_cell(a, 6, master, 2000);
      sweep->zero_one_k6.push_back(k6.theta20.zero_one);
      sweep->prec_k6.push_back(k6.theta20.precision.value_or(0.0));
      sweep->rec_k6.push_back(k6.theta20.recall.value_or(0.0));
      sweep->mae80_k6.push_back(k6.omega80.mae);
      const SplitCell k50 = run_split_cell(a, 50, master, 2000);
      sweep->zero_one_k50.push_back(k50.theta20.zero_one);
      sweep->mae80_k50.push_back(k50.omega80.mae);
    }
  }
  return *sweep;
}

std::pair<bool, std::string> criterion_6_generalization() {
  const SeedSweep& s = seed_sweep();
  const double zo = median(s.zero_one_k6);
  const double p = median(s.prec_k6);
  const double r = median(s.rec_k6);
  const bool pass = zo >= 0.20 && zo <= 0.33 && p >= 68.0 && r >= 68.0;
  return {pass, "median over 5 seeds: 0-1 " + fmt(zo) + " (band [0.20, 0.33]), P " +
                    fmt(p) + ", R " + fmt(r) + " (floor 68)"};
}

std::pair<bool, std::string> criterion_7_overfitting_direction() {
  const SeedSweep& s = seed_sweep();
  const double train_k6 = median(s.mae80_k6);
  const double train_k50 = median(s.mae80_k50);
  const double test_k6 = median(s.zero_one_k6);
  const double test_k50 = median(s.zero_one_k50);
  const bool train_improves = train_k50 < train_k6;
  const bool test_does_not = test_k50 >= test_k6 - 0.01;
  return {train_improves && test_does_not,
          "median mae_o80 k50 " + fmt(train_k50) + " < k6 " + fmt(train_k6) +
              "; median 0-1_t20 k50 " + fmt(test_k50) + " vs k6 " + fmt(test_k6) +
              " (allowed drop 0.01)"};
}

std::pair<bool, std::string> criterion_8_reduction() {
  // fully observed planted votes; fitting below the planted rank keeps the
  // reconstruction from becoming integer-exact inside the window
  Rng rng(908);
  const std::uint32_t n = 30, m = 20, planted = 10, k = 4;
  const MatrixD wt = testsupport::random_matrix(n, planted, rng);
  const MatrixD ht = testsupport::random_matrix(m, planted, rng);
  const MatrixD p = matmul_transposed(wt, ht);
  double lo = p(0, 0), hi = p(0, 0);
  for (std::size_t i = 0; i < p.size(); ++i) {
    lo = std::min(lo, p.data()[i]);
    hi = std::max(hi, p.data()[i]);
  }
  std::vector<Rating> entries;
  for (std::uint32_t u = 0; u < n; ++u) {
    for (std::uint32_t i = 0; i < m; ++i) {
      const int vote = 1 + static_cast<int>(std::llround(4.0 * (p(u, i) - lo) / (hi - lo)));
      entries.push_back({u, i, static_cast<std::int8_t>(vote)});
    }
  }
  const ObservedRatings a(n, m, std::move(entries), {1, 5});

  CutNmfConfig cfg;
  cfg.k = k;
  cfg.max_iterations = 50;
  cfg.tol = 1e-300;
  cfg.seed = derive_seed(kMasterSeed, "reduction");
  cfg.trace_every = 1;
  std::vector<MatrixD> cut_w, cut_h;
  const CutNmfResult result = cutnmf::cutnmf(
      a, cfg, [&](const IterationTrace&, const MatrixD& w, const MatrixD& h) {
        cut_w.push_back(w);
        cut_h.push_back(h);
      });
  if (result.iterations() != 50) {
    return {false, "cutnmf stopped early: " + std::to_string(result.iterations()) +
                       " iterations (" + to_string(result.stop_reason) + ")"};
  }
  std::vector<MatrixD> anls_w, anls_h;
  anls(a.to_dense(), random_uniform_matrix(n, k, cfg.seed), k, {50, 0.0}, cfg.nnls,
       [&](const IterationTrace&, const MatrixD& w, const MatrixD& h) {
         anls_w.push_back(w);
         anls_h.push_back(h);
       });
  for (std::size_t j = 0; j < 50; ++j) {
    if (!(cut_w[j] == anls_w[j]) || !(cut_h[j] == anls_h[j])) {
      return {false, "factor traces diverge at iteration " + std::to_string(j + 1)};
    }
  }
  return {true, "50 iterations bit-exact between cutnmf and anls"};
}

std::pair<bool, std::string> criterion_9_baseline_sanity() {
  const ObservedRatings& a = acceptance_dataset();
  const Split split = split_train_test(a, 0.8, derive_seed(kMasterSeed, "split"));

  // cutnmf reference cell on the shared measurement path
  CutNmfConfig cfg;
  cfg.k = 6;
  cfg.max_iterations = 2000;
  cfg.tol = 1e-7;
  cfg.seed = derive_seed(kMasterSeed, "cutnmf/k=6");
  const CutNmfResult cut = cutnmf::cutnmf(split.train, cfg);
  const double cut_zo = zero_one_loss(
      split.test.entries(), predicted_ratings(cut.factors, a.scale()), 4);

  // zero-filled multiplicative NMF, same measurement path
  const FactorPair mu = nmf_multiplicative(split.train.to_dense(), 6, 200,
                                           derive_seed(kMasterSeed, "nmf/k=6"));
  const double nmf_zo =
      zero_one_loss(split.test.entries(), predicted_ratings(mu, a.scale()), 4);

  // KNN on the published comparison's convention: the band is lifted from a
  // table whose KNN row thresholds raw-valued predictions at 4, so the band
  // clause is measured on raw predictions; the integer-rounded figure is
  // reported alongside for the toolkit's standard path.
  const KnnConfig knn_cfg;
  const MatrixD sims = user_similarity_matrix(split.train, knn_cfg);
  std::vector<double> mean(a.n_users(), 0.0);
  std::vector<int> count(a.n_users(), 0);
  double global_mean = 0.0;
  for (const Rating& r : split.train.entries()) {
    mean[r.user] += r.value;
    ++count[r.user];
    global_mean += r.value;
  }
  global_mean /= static_cast<double>(split.train.size());
  for (std::uint32_t u = 0; u < a.n_users(); ++u) {
    if (count[u]) mean[u] /= count[u];
  }
  std::size_t raw_mismatches = 0, rounded_mismatches = 0;
  for (const Rating& q : split.test.entries()) {
    std::vector<std::pair<double, std::uint32_t>> cand;
    for (const std::uint32_t e : split.train.entry_ids_by_item(q.item)) {
      const Rating& r = split.train.entry(e);
      if (r.user == q.user) continue;
      const double s = sims(q.user, r.user);
      if (std::isnan(s) || s <= 0.0) continue;
      cand.emplace_back(s, e);
    }
    double pred;
    if (cand.empty()) {
      pred = count[q.user] ? mean[q.user] : global_mean;
    } else {
      const std::size_t keep =
          std::min(cand.size(), static_cast<std::size_t>(knn_cfg.n_neighbors));
      std::partial_sort(cand.begin(), cand.begin() + keep, cand.end(),
                        [](const auto& x, const auto& y) {
                          return x.first != y.first ? x.first > y.first
                                                    : x.second < y.second;
                        });
      double num = 0.0, den = 0.0;
      for (std::size_t t = 0; t < keep; ++t) {
        const Rating& r = split.train.entry(cand[t].second);
        num += cand[t].first * (r.value - mean[r.user]);
        den += cand[t].first;
      }
      pred = (count[q.user] ? mean[q.user] : global_mean) + num / den;
    }
    pred = std::clamp(pred, 1.0, 5.0);
    const bool truth_pos = q.value >= 4;
    raw_mismatches += truth_pos != (pred >= 4.0);
    rounded_mismatches += truth_pos != (std::llround(pred) >= 4);
  }
  const double knn_raw = static_cast<double>(raw_mismatches) / split.test.size();
  const double knn_rounded = static_cast<double>(rounded_mismatches) / split.test.size();

  const bool band = knn_raw >= 0.35 && knn_raw <= 0.50;
  const bool ordering = nmf_zo > cut_zo;
  return {band && ordering,
          "knn 0-1 raw " + fmt(knn_raw) + " (band [0.35, 0.50]; rounded " +
              fmt(knn_rounded) + "), nmf " + fmt(nmf_zo) + " > cutnmf " + fmt(cut_zo) +
              (ordering ? " ok" : " VIOLATED")};
}

std::pair<bool, std::string> criterion_10_determinism() {
  // representative harness run (cutnmf + knn accuracy cell) repeated with the
  // same master seed at different thread counts; CSV bytes must match
  const auto base = std::filesystem::temp_directory_path() / "cutnmf_acceptance_det";
  std::filesystem::remove_all(base);

  auto run_into = [&](const std::string& name, int threads) {
#ifdef _OPENMP
    omp_set_num_threads(threads);
#else
    (void)threads;
#endif
    ExperimentConfig cfg;
    cfg.dataset.source = DatasetSource::synthetic;
    cfg.dataset.scale = {1, 5};
    SyntheticSpec spec;
    spec.n_users = 200;
    spec.n_items = 300;
    spec.true_rank = 8;
    spec.n_observed = 12000;
    spec.scale = {1, 5};
    cfg.synthetic = spec;
    cfg.master_seed = kMasterSeed;
    cfg.split_fraction = 0.8;
    cfg.algos = {"cutnmf", "knn"};
    cfg.k_list = {6};
    cfg.j_max = 400;
    cfg.tol = 1e-9;
    cfg.trace_every = 50;
    cfg.trace_elapsed = false;  // wall-clock is exempt from byte-stability
    cfg.out_dir = (base / name).string();
    run_accuracy_study(cfg);
    return cfg.out_dir;
  };
  auto slurp = [](const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };

#ifdef _OPENMP
  const int max_threads = omp_get_max_threads();
#else
  const int max_threads = 1;
#endif
  const std::string d1 = run_into("t1", 1);
  const std::string d2 = run_into("tN", std::max(2, max_threads));
  const std::string d3 = run_into("t1b", 1);
#ifdef _OPENMP
  omp_set_num_threads(max_threads);
#endif
  bool ok = true;
  for (const char* f : {"results.csv", "trace_cutnmf_k6.csv"}) {
    const std::string c1 = slurp(d1 + "/" + f);
    ok = ok && !c1.empty() && c1 == slurp(d2 + "/" + f) && c1 == slurp(d3 + "/" + f);
  }
  std::filesystem::remove_all(base);
  return {ok, ok ? "results.csv and trace bytes identical across reruns and 1 vs " +
                       std::to_string(std::max(2, max_threads)) + " threads"
                 : "outputs differ across runs or thread counts"};
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
  auto wanted = [&](int id) {
    return only.empty() || std::find(only.begin(), only.end(), id) != only.end();
  };

  std::string provenance;
  acceptance_dataset(&provenance);
  std::printf("acceptance dataset: %s\n", provenance.c_str());

  if (wanted(1)) run_criterion(1, "nnls oracle equivalence", criterion_1_nnls_oracle);
  if (wanted(2)) {
    run_criterion(2, "metric oracle equivalence",
                  [] { return criterion_2_3_metric_oracles(false); });
  }
  if (wanted(3)) {
    run_criterion(3, "cross-metric consistency",
                  [] { return criterion_2_3_metric_oracles(true); });
  }
  if (wanted(4)) run_criterion(4, "synthetic recovery", criterion_4_synthetic_recovery);
  if (wanted(5)) {
    run_criterion(5, "full-omega convergence", criterion_5_full_omega_convergence);
  }
  if (wanted(6)) run_criterion(6, "split generalization", criterion_6_generalization);
  if (wanted(7)) {
    run_criterion(7, "overfitting direction", criterion_7_overfitting_direction);
  }
  if (wanted(8)) run_criterion(8, "anls reduction", criterion_8_reduction);
  if (wanted(9)) run_criterion(9, "baseline sanity", criterion_9_baseline_sanity);
  if (wanted(10)) run_criterion(10, "csv determinism", criterion_10_determinism);

  int failures = 0;
  for (const CriterionResult& r : g_results) failures += r.pass ? 0 : 1;
  std::printf("%d/%zu criteria passed\n", static_cast<int>(g_results.size()) - failures,
              g_results.size());
  return failures == 0 ? 0 : 1;
}
