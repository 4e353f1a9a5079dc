// Batch front end: mvkmf <synth|kernels|fit|evolve|heatmap|bench|stats> [options]

#include <CLI11.hpp>

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "mvkmf/commands.hpp"

namespace {

using namespace mvkmf;
using namespace mvkmf::cli;

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-view clustering by unified multi-kernel learning and matrix factorization"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions global;
  std::string out_dir = ".";
  app.add_option("--seed", global.seed, "Random seed (k-means restarts, synthetic data)");
  app.add_option("--out", out_dir, "Output directory");
  app.add_flag("--quiet", global.quiet, "Suppress progress output");

  // synth
  SynthRequest synth;
  std::string synth_kernel = "rbf", synth_norm = "none";
  auto* synth_cmd = app.add_subcommand("synth", "Generate a separable Gaussian-blob multi-view dataset");
  synth_cmd->add_option("--name", synth.name);
  synth_cmd->add_option("--n-per-cluster", synth.n_per_cluster)->check(CLI::PositiveNumber);
  synth_cmd->add_option("--clusters", synth.clusters)->check(CLI::Range(2, 1 << 20));
  synth_cmd->add_option("--views", synth.views)->check(CLI::PositiveNumber);
  synth_cmd->add_option("--separation", synth.separation)->check(CLI::PositiveNumber);
  synth_cmd->add_option("--noise", synth.noise)->check(CLI::NonNegativeNumber);
  synth_cmd->add_option("--kernel", synth_kernel, "linear | rbf | polynomial")
      ->check(CLI::IsMember({"linear", "rbf", "polynomial"}));
  synth_cmd->add_option("--normalize", synth_norm)->check(CLI::IsMember({"none", "cosine", "center"}));

  // kernels
  std::string manifest;
  auto* kernels_cmd = app.add_subcommand("kernels", "Materialise every view kernel as MVK1");
  kernels_cmd->add_option("--manifest", manifest)->required();

  // fit / evolve
  FitRequest req;
  std::string objective_variant;
  auto add_fit_options = [&](CLI::App* cmd) {
    cmd->add_option("--manifest", manifest)->required();
    cmd->add_option("--algorithm", req.algorithm, "umklmf | umklmf-nonsp | kkm | mkkm");
    cmd->add_option("--alpha", req.alpha, "Regularization weight (>= 0)");
    cmd->add_option("--restarts", req.restarts, "k-means restarts")->check(CLI::PositiveNumber);
    cmd->add_option("--max-iters", req.max_iters)->check(CLI::NonNegativeNumber);
    cmd->add_option("--tol", req.rel_tol, "Relative objective change threshold")->check(CLI::PositiveNumber);
    cmd->add_option("--objective", objective_variant, "sparse | nonsparse (ablation)")
        ->check(CLI::IsMember({"sparse", "nonsparse"}));
  };
  auto* fit_cmd = app.add_subcommand("fit", "Fit one algorithm and evaluate its clustering");
  add_fit_options(fit_cmd);
  auto* evolve_cmd = app.add_subcommand("evolve", "Record clustering metrics after every iteration");
  add_fit_options(evolve_cmd);

  // heatmap
  std::string state_dir;
  auto* heatmap_cmd = app.add_subcommand("heatmap", "Emit label-ordered Gram matrices of H and G_v as CSV/PGM");
  heatmap_cmd->add_option("--state", state_dir, "Directory written by fit")->required();

  // bench
  BenchPlan plan;
  std::vector<std::string> manifests;
  std::string algorithms = "umklmf,kkm,mkkm", alphas;
  std::vector<std::uint64_t> seeds;
  auto* bench_cmd = app.add_subcommand("bench", "Grid-search alpha over datasets and algorithms");
  bench_cmd->add_option("--manifest", manifests)->required();
  bench_cmd->add_option("--algorithms", algorithms, "Comma-separated algorithm list");
  bench_cmd->add_option("--alphas", alphas, "Comma-separated alpha grid (default 2^0..2^9)");
  bench_cmd->add_option("--seeds", seeds, "Seeds to run (default: --seed)");
  bench_cmd->add_option("--restarts", plan.restarts)->check(CLI::PositiveNumber);
  bench_cmd->add_option("--max-iters", plan.max_iters)->check(CLI::NonNegativeNumber);
  bench_cmd->add_option("--select-metric", plan.select_metric)->check(CLI::IsMember({"acc", "nmi", "purity", "ari"}));
  bench_cmd->add_option("--threads", plan.threads, "Worker count (default: MVKMF_THREADS or all cores)");

  // stats
  std::string table;
  double q_alpha = kDefaultQAlpha;
  bool lower_is_better = false;
  auto* stats_cmd = app.add_subcommand("stats", "Friedman / Iman-Davenport test and Nemenyi critical difference");
  stats_cmd->add_option("--table", table)->required();
  stats_cmd->add_option("--q-alpha", q_alpha);
  stats_cmd->add_flag("--lower-is-better", lower_is_better);

  // Usage errors exit with 2 instead of CLI11's default codes.
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }
  global.out = out_dir;

  try {
    if (*synth_cmd) {
      synth.kernel.type = *parse_kernel_type(synth_kernel);
      synth.normalization = *parse_normalization(synth_norm);
      return cmd_synth(global, synth);
    }
    if (*kernels_cmd) return cmd_kernels(global, manifest);
    if (*fit_cmd || *evolve_cmd) {
      req.seed = global.seed;
      if (objective_variant == "nonsparse" && req.algorithm == "umklmf") req.algorithm = "umklmf-nonsp";
      return *fit_cmd ? cmd_fit(global, manifest, req) : cmd_evolve(global, manifest, req);
    }
    if (*heatmap_cmd) return cmd_heatmap(global, state_dir);
    if (*bench_cmd) {
      plan.manifests.assign(manifests.begin(), manifests.end());
      plan.algorithms.clear();
      std::stringstream ss(algorithms);
      for (std::string a; std::getline(ss, a, ',');) plan.algorithms.push_back(a);
      if (!alphas.empty()) plan.alphas = parse_grid(alphas);
      plan.seeds = seeds.empty() ? std::vector<std::uint64_t>{global.seed} : seeds;
      return cmd_bench(global, plan);
    }
    if (*stats_cmd) return cmd_stats(global, table, q_alpha, !lower_is_better);
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid number: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
