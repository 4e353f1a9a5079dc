#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "mvkmf/error.hpp"
#include "mvkmf/io.hpp"
#include "mvkmf/kernels.hpp"
#include "mvkmf/kmeans.hpp"
#include "mvkmf/metrics.hpp"
#include "mvkmf/solver.hpp"
#include "mvkmf/stats.hpp"

namespace mvkmf::cli {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumeric = 3;

struct GlobalOptions {
  std::uint64_t seed = 0;
  fs::path out = ".";
  bool quiet = false;
};

inline const std::vector<std::string>& known_algorithms() {
  static const std::vector<std::string> names{"umklmf", "umklmf-nonsp", "kkm", "mkkm"};
  return names;
}

inline bool is_known_algorithm(const std::string& a) {
  const auto& k = known_algorithms();
  return std::find(k.begin(), k.end(), a) != k.end();
}

inline bool uses_alpha(const std::string& algorithm) { return algorithm.rfind("umklmf", 0) == 0; }

/// 2^0 .. 2^9.
inline std::vector<double> default_alpha_grid() {
  std::vector<double> g;
  for (int e = 0; e <= 9; ++e) g.push_back(std::ldexp(1.0, e));
  return g;
}

inline int exit_code_for(const Error& e) { return e.kind() == ErrorKind::NonFinite ? kExitNumeric : kExitUsage; }

inline double metric_value(const MetricReport& m, const std::string& name) {
  if (name == "acc") return m.acc;
  if (name == "nmi") return m.nmi;
  if (name == "purity") return m.purity;
  if (name == "ari") return m.ari;
  throw Error(ErrorKind::BadParam, "unknown metric '" + name + "'");
}

// ---------------------------------------------------------------------------
// Shared fitting path
// ---------------------------------------------------------------------------

struct FitRequest {
  std::string algorithm = "umklmf";
  double alpha = kDefaultAlpha;
  std::uint64_t seed = 0;
  int restarts = 50;
  int max_iters = 100;
  double rel_tol = 1e-6;
};

struct FitOutcome {
  Matrix H;
  std::vector<Matrix> G;
  Vector weights;
  std::vector<double> objective_trace;
  std::vector<int> labels;
  MetricReport metrics;
  int iterations = 0;
  double objective_final = 0.0;
};

inline SolverConfig solver_config(const FitRequest& req, Index clusters) {
  SolverConfig cfg;
  cfg.k = clusters;
  cfg.alpha = req.alpha;
  cfg.max_iters = req.max_iters;
  cfg.rel_tol = req.rel_tol;
  cfg.seed = req.seed;
  cfg.variant = req.algorithm == "umklmf-nonsp" ? ObjectiveVariant::Nonsparse : ObjectiveVariant::Sparse;
  return cfg;
}

inline std::vector<int> cluster_embedding(const Matrix& h, Index clusters, const FitRequest& req) {
  KMeansConfig kc;
  kc.k = clusters;
  kc.restarts = req.restarts;
  kc.seed = req.seed;
  return kmeans(h, kc).labels;
}

/// Runs one algorithm end to end: embedding, k-means on its columns, metrics.
inline FitOutcome run_algorithm(const KernelSet& ks, std::span<const int> truth, Index clusters,
                                const FitRequest& req, const IterationObserver& observer = {}) {
  require(is_known_algorithm(req.algorithm), ErrorKind::BadParam, "unknown algorithm '" + req.algorithm + "'");
  FitOutcome out;
  if (uses_alpha(req.algorithm)) {
    SolverState st = fit(ks, solver_config(req, clusters), observer);
    out.objective_final = st.objective_trace.empty() ? st.initial_objective : st.objective_trace.back();
    out.iterations = st.iterations;
    out.objective_trace = std::move(st.objective_trace);
    out.H = std::move(st.H);
    out.G = std::move(st.G);
    out.weights = std::move(st.omega);
  } else if (req.algorithm == "kkm") {
    Matrix avg = Matrix::Zero(ks.n(), ks.n());
    for (const auto& k : ks.kernels) avg += k.data;
    avg /= static_cast<double>(ks.views());
    out.H = fit_kkm(avg, clusters);
    out.weights = Vector::Constant(static_cast<Index>(ks.views()), 1.0 / static_cast<double>(ks.views()));
    out.objective_final = avg.trace() - (out.H * avg).cwiseProduct(out.H).sum();
    out.objective_trace.push_back(out.objective_final);
    out.iterations = 1;
  } else {
    MkkmResult r = fit_mkkm(ks, clusters, req.max_iters, req.rel_tol);
    out.H = std::move(r.H);
    out.weights = std::move(r.gamma);
    out.objective_final = r.objective_trace.back();
    out.objective_trace = std::move(r.objective_trace);
    out.iterations = r.iterations;
  }
  require(out.H.allFinite(), ErrorKind::NonFinite, "embedding contains NaN/Inf");
  out.labels = cluster_embedding(out.H, clusters, req);
  out.metrics = evaluate(truth, out.labels);
  return out;
}

// ---------------------------------------------------------------------------
// kernels
// ---------------------------------------------------------------------------

inline int cmd_kernels(const GlobalOptions& g, const fs::path& manifest_path, std::ostream& log = std::cout) {
  try {
    const auto m = io::load_manifest(manifest_path);
    ValidationReport report;
    const KernelSet ks = io::load_kernel_set(m, &report);
    for (const auto& k : ks.kernels) io::write_matrix(g.out / (k.view_name + ".mvk"), k.data);
    if (!g.quiet)
      for (const auto& v : report.views)
        log << v.view_name << ": asymmetry=" << v.asymmetry << " min_eig~" << v.min_eigenvalue
            << (v.symmetrized ? " symmetrized" : "") << (v.indefinite ? " WARNING indefinite" : "") << '\n';
    return kExitOk;
  } catch (const Error& e) {
    std::cerr << "kernels: " << e.what() << '\n';
    return kExitUsage;
  }
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

inline io::RunRecord make_record(const io::DatasetManifest& m, const FitRequest& req, const FitOutcome& o,
                                 double seconds) {
  io::RunRecord r;
  r.dataset = m.name;
  r.algorithm = req.algorithm;
  r.alpha = uses_alpha(req.algorithm) ? req.alpha : 0.0;
  r.seed = req.seed;
  r.metrics = o.metrics;
  r.iterations = o.iterations;
  r.wall_time_seconds = seconds;
  r.objective_final = o.objective_final;
  return r;
}

inline void write_outcome(const fs::path& dir, const KernelSet& ks, const FitOutcome& o) {
  io::write_matrix(dir / "H.mvk", o.H);
  for (std::size_t v = 0; v < o.G.size(); ++v) io::write_matrix(dir / ("G_" + ks[v].view_name + ".mvk"), o.G[v]);
  io::write_vector_csv(dir / "omega.csv", std::vector<double>(o.weights.data(), o.weights.data() + o.weights.size()));
  io::write_vector_csv(dir / "objective.csv", o.objective_trace);
  io::write_labels(dir / "labels.txt", o.labels);
}

/// Fits one algorithm on a dataset, writing H, G_v, omega, the objective
/// trace, labels and an appended run record under g.out.
inline int cmd_fit(const GlobalOptions& g, const fs::path& manifest_path, FitRequest req,
                   std::ostream& log = std::cout) {
  if (!(req.alpha >= 0.0) || !std::isfinite(req.alpha)) {
    std::cerr << "fit: alpha must be a finite value >= 0\n";
    return kExitUsage;
  }
  if (!is_known_algorithm(req.algorithm)) {
    std::cerr << "fit: unknown algorithm '" << req.algorithm << "'\n";
    return kExitUsage;
  }
  io::DatasetManifest m;
  KernelSet ks;
  std::vector<int> truth;
  try {
    m = io::load_manifest(manifest_path);
    ks = io::load_kernel_set(m);
    truth = io::load_labels(m);
  } catch (const Error& e) {
    std::cerr << "fit: " << e.what() << '\n';
    return kExitUsage;
  }
  try {
    const auto start = std::chrono::steady_clock::now();
    const FitOutcome o = run_algorithm(ks, truth, m.clusters, req);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_outcome(g.out, ks, o);
    io::append_record(g.out / "records.jsonl", make_record(m, req, o, secs));
    if (!g.quiet)
      log << m.name << " " << req.algorithm << " iterations=" << o.iterations << " acc=" << o.metrics.acc
          << " nmi=" << o.metrics.nmi << " purity=" << o.metrics.purity << " ari=" << o.metrics.ari << '\n';
    return kExitOk;
  } catch (const Error& e) {
    std::cerr << "fit: " << e.what() << '\n';
    return exit_code_for(e);
  }
}

// ---------------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------------

struct BenchPlan {
  std::vector<fs::path> manifests;
  std::vector<std::string> algorithms{"umklmf", "kkm", "mkkm"};
  std::vector<double> alphas = default_alpha_grid();
  std::vector<std::uint64_t> seeds{0};
  int restarts = 50;
  int max_iters = 100;
  double rel_tol = 1e-6;
  std::string select_metric = "acc";
  unsigned threads = 0;  // 0: MVKMF_THREADS or hardware concurrency
};

inline unsigned worker_count(unsigned requested) {
  unsigned n = requested;
  if (n == 0) {
    n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("MVKMF_THREADS")) {
      const long cap = std::strtol(env, nullptr, 10);
      if (cap > 0) n = std::min(n, static_cast<unsigned>(cap));
    }
  }
  return std::max(1u, n);
}

/// Executes job(i) for i in [0, count) on a bounded pool. Results are written
/// by index, so output order does not depend on scheduling.
template <typename Job>
void run_pool(std::size_t count, unsigned workers, Job&& job) {
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) job(i);
  };
  std::vector<std::jthread> pool;
  for (unsigned w = 1; w < std::min<std::size_t>(workers, count); ++w) pool.emplace_back(worker);
  worker();
}

struct BenchCell {
  std::optional<double> best_alpha;
  MetricReport mean;  // at best_alpha, averaged over seeds
};

/// Picks the alpha with the highest seed-averaged selection metric; ties go
/// to the smaller alpha. Alphas where any seed failed are not eligible.
inline BenchCell select_best(const std::vector<io::RunRecord>& records, const std::string& dataset,
                             const std::string& algorithm, const std::vector<double>& alphas, std::size_t seeds,
                             const std::string& metric) {
  BenchCell cell;
  double best = -std::numeric_limits<double>::infinity();
  std::vector<double> sorted = alphas;
  std::sort(sorted.begin(), sorted.end());
  for (double a : sorted) {
    MetricReport sum;
    std::size_t count = 0;
    for (const auto& r : records) {
      if (r.dataset != dataset || r.algorithm != algorithm || r.alpha != a) continue;
      sum.acc += r.metrics.acc;
      sum.nmi += r.metrics.nmi;
      sum.purity += r.metrics.purity;
      sum.ari += r.metrics.ari;
      ++count;
    }
    if (count == 0 || count != seeds) continue;
    const double c = static_cast<double>(count);
    const MetricReport mean{sum.acc / c, sum.nmi / c, sum.purity / c, sum.ari / c};
    const double score = metric_value(mean, metric);
    if (score > best) {
      best = score;
      cell.best_alpha = a;
      cell.mean = mean;
    }
  }
  return cell;
}

inline int cmd_bench(const GlobalOptions& g, const BenchPlan& plan, std::ostream& log = std::cout) {
  if (plan.manifests.empty() || plan.algorithms.empty() || plan.seeds.empty() || plan.restarts < 1) {
    std::cerr << "bench: need at least one manifest, algorithm and seed\n";
    return kExitUsage;
  }
  for (const auto& a : plan.algorithms)
    if (!is_known_algorithm(a)) {
      std::cerr << "bench: unknown algorithm '" << a << "'\n";
      return kExitUsage;
    }
  for (double a : plan.alphas)
    if (!(a > 0.0) || !std::isfinite(a)) {
      std::cerr << "bench: alpha grid values must be > 0\n";
      return kExitUsage;
    }
  try {
    (void)metric_value(MetricReport{}, plan.select_metric);
  } catch (const Error& e) {
    std::cerr << "bench: " << e.what() << '\n';
    return kExitUsage;
  }

  struct Dataset {
    io::DatasetManifest manifest;
    KernelSet kernels;
    std::vector<int> truth;
  };
  std::vector<Dataset> data;
  try {
    for (const auto& p : plan.manifests) {
      Dataset d;
      d.manifest = io::load_manifest(p);
      d.kernels = io::load_kernel_set(d.manifest);
      d.truth = io::load_labels(d.manifest);
      data.push_back(std::move(d));
    }
  } catch (const Error& e) {
    std::cerr << "bench: " << e.what() << '\n';
    return kExitUsage;
  }

  struct Job {
    std::size_t dataset;
    FitRequest req;
  };
  std::vector<Job> jobs;
  for (std::size_t d = 0; d < data.size(); ++d)
    for (const auto& alg : plan.algorithms) {
      const std::vector<double> grid = uses_alpha(alg) ? plan.alphas : std::vector<double>{0.0};
      for (double a : grid)
        for (auto seed : plan.seeds) {
          FitRequest r;
          r.algorithm = alg;
          r.alpha = a;
          r.seed = seed;
          r.restarts = plan.restarts;
          r.max_iters = plan.max_iters;
          r.rel_tol = plan.rel_tol;
          jobs.push_back({d, r});
        }
    }

  std::vector<std::optional<io::RunRecord>> results(jobs.size());
  run_pool(jobs.size(), worker_count(plan.threads), [&](std::size_t i) {
    const Job& job = jobs[i];
    const Dataset& d = data[job.dataset];
    try {
      const auto start = std::chrono::steady_clock::now();
      const FitOutcome o = run_algorithm(d.kernels, d.truth, d.manifest.clusters, job.req);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      results[i] = make_record(d.manifest, job.req, o, secs);
    } catch (const Error&) {
      results[i].reset();
    }
  });

  std::vector<io::RunRecord> records;
  for (const auto& r : results)
    if (r) {
      io::append_record(g.out / "records.jsonl", *r);
      records.push_back(*r);
    }

  const auto rows = static_cast<Index>(data.size());
  const auto cols = static_cast<Index>(plan.algorithms.size());
  std::map<std::string, ResultsTable> tables;
  for (const std::string metric : {"acc", "nmi", "purity", "ari"}) {
    ResultsTable& t = tables[metric];
    t.scores = Matrix::Zero(rows, cols);
    t.missing = BoolMatrix::Constant(rows, cols, false);
    t.algorithm_names = plan.algorithms;
    for (const auto& d : data) t.dataset_names.push_back(d.manifest.name);
  }
  int succeeded = 0;
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) {
      const auto& alg = plan.algorithms[static_cast<std::size_t>(c)];
      const std::vector<double> grid = uses_alpha(alg) ? plan.alphas : std::vector<double>{0.0};
      const BenchCell cell = select_best(records, data[static_cast<std::size_t>(r)].manifest.name, alg, grid,
                                         plan.seeds.size(), plan.select_metric);
      for (auto& [metric, t] : tables) {
        t.missing(r, c) = !cell.best_alpha.has_value();
        t.scores(r, c) = cell.best_alpha ? metric_value(cell.mean, metric) : std::nan("");
      }
      if (cell.best_alpha) ++succeeded;
      if (!g.quiet)
        log << data[static_cast<std::size_t>(r)].manifest.name << " " << alg << ": "
            << (cell.best_alpha ? "best alpha=" + std::to_string(*cell.best_alpha) : std::string("failed")) << '\n';
    }
  io::write_results_table(g.out / "table.csv", tables[plan.select_metric]);
  for (const auto& [metric, t] : tables) io::write_results_table(g.out / ("table_" + metric + ".csv"), t);
  return succeeded > 0 ? kExitOk : kExitNumeric;
}

// ---------------------------------------------------------------------------
// stats
// ---------------------------------------------------------------------------

inline void print_summary(std::ostream& os, const ResultsTable& rt, const RankSummary& rs) {
  os << std::setprecision(10);
  os << "datasets_used=" << rs.rows_used << '\n';
  os << "datasets_excluded=" << rs.rows_dropped << '\n';
  os << "chi2=" << rs.chi2 << '\n';
  os << "f=" << rs.f_stat << '\n';
  os << "df1=" << rs.df1 << '\n';
  os << "df2=" << rs.df2 << '\n';
  os << "p=" << rs.p_value << '\n';
  os << "cd=" << rs.cd << '\n';
  for (Index j = 0; j < rs.mean_ranks.size(); ++j)
    os << "mean_rank." << rt.algorithm_names[static_cast<std::size_t>(j)] << '=' << rs.mean_ranks(j) << '\n';
}

inline std::string pairwise_csv(const ResultsTable& rt, const BoolMatrix& sig) {
  std::ostringstream ss;
  ss << "algorithm";
  for (const auto& a : rt.algorithm_names) ss << ',' << a;
  ss << '\n';
  for (Index i = 0; i < sig.rows(); ++i) {
    ss << rt.algorithm_names[static_cast<std::size_t>(i)];
    for (Index j = 0; j < sig.cols(); ++j) ss << ',' << (sig(i, j) ? 1 : 0);
    ss << '\n';
  }
  return ss.str();
}

inline int cmd_stats(const GlobalOptions& g, const fs::path& table_csv, double q_alpha, bool higher_is_better = true,
                     std::ostream& os = std::cout) {
  if (!(q_alpha > 0.0)) {
    std::cerr << "stats: q_alpha must be > 0\n";
    return kExitUsage;
  }
  try {
    const ResultsTable rt = io::read_results_table(table_csv);
    const RankSummary rs = friedman(rt, higher_is_better, q_alpha);
    const BoolMatrix sig = pairwise_significance(rs);
    std::ostringstream summary;
    print_summary(summary, rt, rs);
    os << summary.str() << "pairwise:\n" << pairwise_csv(rt, sig);
    if (!g.out.empty() && g.out != ".") {
      io::write_text(g.out / "summary.txt", summary.str());
      io::write_text(g.out / "pairwise.csv", pairwise_csv(rt, sig));
    }
    return kExitOk;
  } catch (const Error& e) {
    std::cerr << "stats: " << e.what() << '\n';
    return kExitUsage;
  }
}

// ---------------------------------------------------------------------------
// heatmap
// ---------------------------------------------------------------------------

/// 8-bit binary PGM, min-max scaled; a constant matrix maps to black.
inline std::string encode_pgm(const Matrix& m) {
  std::string out = "P5\n" + std::to_string(m.cols()) + " " + std::to_string(m.rows()) + "\n255\n";
  const double lo = m.minCoeff(), hi = m.maxCoeff();
  const double range = hi - lo;
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) {
      const double t = range > 0.0 ? (m(i, j) - lo) / range : 0.0;
      out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * t))));
    }
  return out;
}

inline std::vector<Index> order_by_label(std::span<const int> labels) {
  std::vector<Index> order(labels.size());
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return labels[static_cast<std::size_t>(a)] < labels[static_cast<std::size_t>(b)]; });
  return order;
}

/// Cosine similarity between the rows of `emb` (emb is n x k), rows and
/// columns permuted into `order`. All-zero rows stay zero.
inline Matrix ordered_gram(const Matrix& emb, const std::vector<Index>& order) {
  Matrix p(emb.rows(), emb.cols());
  for (std::size_t i = 0; i < order.size(); ++i) p.row(static_cast<Index>(i)) = emb.row(order[i]);
  const Vector norms = p.rowwise().norm();
  for (Index i = 0; i < p.rows(); ++i)
    if (norms(i) > 0.0) p.row(i) /= norms(i);
  Matrix gram = (p * p.transpose()).cwiseMax(-1.0).cwiseMin(1.0);
  for (Index i = 0; i < p.rows(); ++i) gram(i, i) = norms(i) > 0.0 ? 1.0 : 0.0;
  mvkmf::detail::mirror_upper(gram);
  return gram;
}

inline int cmd_heatmap(const GlobalOptions& g, const fs::path& state_dir, std::ostream& log = std::cout) {
  const fs::path h_path = state_dir / "H.mvk";
  const fs::path labels_path = state_dir / "labels.txt";
  if (!fs::exists(h_path) || !fs::exists(labels_path)) {
    std::cerr << "heatmap: state directory needs H.mvk and labels.txt\n";
    return kExitUsage;
  }
  try {
    const Matrix h = io::read_matrix(h_path);
    const auto labels = io::read_labels(labels_path);
    require(static_cast<Index>(labels.size()) == h.cols(), ErrorKind::DimensionMismatch,
            "labels length differs from the columns of H");
    const auto order = order_by_label(labels);

    auto emit = [&](const std::string& stem, const Matrix& gram) {
      io::write_matrix(g.out / (stem + ".csv"), gram, io::MatrixFormat::Csv);
      io::write_text(g.out / (stem + ".pgm"), encode_pgm(gram));
      if (!g.quiet) log << "wrote " << (g.out / (stem + ".pgm")).string() << '\n';
    };
    emit("HHt", ordered_gram(h.transpose(), order));

    std::vector<fs::path> g_files;
    for (const auto& entry : fs::directory_iterator(state_dir)) {
      const auto name = entry.path().filename().string();
      if (name.rfind("G_", 0) == 0 && entry.path().extension() == ".mvk") g_files.push_back(entry.path());
    }
    std::sort(g_files.begin(), g_files.end());
    for (const auto& p : g_files) {
      const Matrix gv = io::read_matrix(p);
      require(gv.rows() == h.cols(), ErrorKind::DimensionMismatch, p.string() + " does not have n rows");
      emit("GGt_" + p.stem().string().substr(2), ordered_gram(gv, order));
    }
    return kExitOk;
  } catch (const Error& e) {
    std::cerr << "heatmap: " << e.what() << '\n';
    return kExitUsage;
  }
}

// ---------------------------------------------------------------------------
// evolve
// ---------------------------------------------------------------------------

/// Per-iteration clustering quality: row 0 is the initialization, row t the
/// state after iteration t. Written to g.out/evolve.csv.
inline int cmd_evolve(const GlobalOptions& g, const fs::path& manifest_path, FitRequest req,
                      std::ostream& log = std::cout) {
  if (!(req.alpha >= 0.0) || !std::isfinite(req.alpha) || !uses_alpha(req.algorithm)) {
    std::cerr << "evolve: needs an umklmf algorithm and alpha >= 0\n";
    return kExitUsage;
  }
  io::DatasetManifest m;
  KernelSet ks;
  std::vector<int> truth;
  try {
    m = io::load_manifest(manifest_path);
    ks = io::load_kernel_set(m);
    truth = io::load_labels(m);
  } catch (const Error& e) {
    std::cerr << "evolve: " << e.what() << '\n';
    return kExitUsage;
  }
  try {
    const SolverConfig cfg = solver_config(req, m.clusters);
    std::ostringstream csv;
    csv << std::setprecision(17) << "iteration,objective,acc,nmi,purity,ari\n";
    auto row = [&](int it, const Matrix& h, double objective_value) {
      const auto labels = cluster_embedding(h, m.clusters, req);
      const MetricReport r = evaluate(truth, labels);
      csv << it << ',' << objective_value << ',' << r.acc << ',' << r.nmi << ',' << r.purity << ',' << r.ari << '\n';
    };
    const SolverState init = init_state(ks, cfg);
    row(0, init.H, objective(ks, init, cfg));
    const SolverState final_state =
        fit(ks, cfg, [&](int it, const SolverState& st) { row(it, st.H, st.objective_trace.back()); });
    io::write_text(g.out / "evolve.csv", csv.str());
    if (!g.quiet) log << "evolve: " << final_state.iterations << " iterations\n";
    return kExitOk;
  } catch (const Error& e) {
    std::cerr << "evolve: " << e.what() << '\n';
    return exit_code_for(e);
  }
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

struct SynthRequest {
  std::string name = "synthetic";
  Index n_per_cluster = 50;
  Index clusters = 4;
  Index views = 3;
  double separation = 100.0;
  double noise = 1.0;
  KernelSpec kernel = KernelSpec::rbf();
  Normalization normalization = Normalization::None;
};

/// Writes view<i>.csv (samples x features), labels.txt and manifest.json into g.out.
inline int cmd_synth(const GlobalOptions& g, const SynthRequest& req, std::ostream& log = std::cout) {
  try {
    require(req.clusters >= 2, ErrorKind::BadParam, "clusters must be >= 2");
    const io::SyntheticData data =
        io::make_synthetic(req.n_per_cluster, req.clusters, req.views, req.separation, req.noise, g.seed);
    io::DatasetManifest m;
    m.name = req.name;
    m.n = static_cast<Index>(data.labels.size());
    m.clusters = req.clusters;
    m.labels = "labels.txt";
    for (const auto& f : data.views) {
      const std::string file = f.view_name + ".csv";
      io::write_matrix(g.out / file, f.data.transpose(), io::MatrixFormat::Csv);
      m.views.push_back({f.view_name, file, std::nullopt, req.kernel, req.normalization});
    }
    io::write_labels(g.out / "labels.txt", data.labels);
    io::save_manifest(g.out / "manifest.json", m);
    if (!g.quiet) log << "wrote " << (g.out / "manifest.json").string() << " (n=" << m.n << ")\n";
    return kExitOk;
  } catch (const Error& e) {
    std::cerr << "synth: " << e.what() << '\n';
    return kExitUsage;
  }
}

}  // namespace mvkmf::cli
