// Minimal in-process use of the library: synthetic views -> kernels -> fit ->
// k-means on the consensus embedding -> metrics.

#include <iostream>

#include "mvkmf/mvkmf.hpp"

int main() {
  using namespace mvkmf;

  const io::SyntheticData data = io::make_synthetic(/*n_per_cluster=*/50, /*clusters=*/4, /*views=*/3,
                                                    /*separation=*/6.0, /*noise=*/1.0, /*seed=*/7);
  KernelSet ks;
  for (const auto& view : data.views) ks.kernels.push_back(build_kernel(view, KernelSpec::rbf()));
  validate_kernel_set(ks);

  SolverConfig cfg;
  cfg.k = 4;
  const SolverState st = fit(ks, cfg);

  KMeansConfig kc;
  kc.k = cfg.k;
  const Labeling lab = kmeans(st.H, kc);
  const MetricReport m = evaluate(data.labels, lab.labels);

  std::cout << "iterations " << st.iterations << ", objective " << st.objective_trace.back() << '\n'
            << "weights    " << st.omega.transpose() << '\n'
            << "ACC " << m.acc << "  NMI " << m.nmi << "  Purity " << m.purity << "  ARI " << m.ari << '\n';
}
