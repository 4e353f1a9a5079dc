#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mvkmf/error.hpp"
#include "mvkmf/kernels.hpp"
#include "mvkmf/linalg.hpp"

namespace mvkmf {

// sparse: Frobenius factorization loss with the G -> H^T pull (the default).
// nonsparse: trace form without the Frobenius regularizer (ablation).
enum class ObjectiveVariant { Sparse, Nonsparse };

inline std::optional<ObjectiveVariant> parse_variant(std::string_view s) {
  if (s == "sparse") return ObjectiveVariant::Sparse;
  if (s == "nonsparse") return ObjectiveVariant::Nonsparse;
  return std::nullopt;
}

inline std::string_view to_string(ObjectiveVariant v) {
  return v == ObjectiveVariant::Sparse ? "sparse" : "nonsparse";
}

inline constexpr double kDefaultAlpha = 128.0;  // 2^7
inline constexpr double kLossFloor = 1e-12;

struct SolverConfig {
  Index k = 2;
  double alpha = kDefaultAlpha;
  int max_iters = 100;
  double rel_tol = 1e-6;
  ObjectiveVariant variant = ObjectiveVariant::Sparse;
  std::uint64_t seed = 0;
};

struct SolverState {
  Matrix H;                // k x n, orthonormal rows
  std::vector<Matrix> G;   // per view, n x k
  Vector omega;            // view weights on the simplex
  std::vector<double> objective_trace;  // one entry per completed iteration
  double initial_objective = 0.0;
  int iterations = 0;
  bool converged = false;
  bool rank_deficient = false;  // some H update hit sigma_k < 1e-12
};

inline void check_config(const SolverConfig& cfg, Index n) {
  require(cfg.k >= 2 && cfg.k <= n, ErrorKind::BadParam,
          "cluster count must satisfy 2 <= k <= n (k=" + std::to_string(cfg.k) + ", n=" + std::to_string(n) + ")");
  require(cfg.alpha >= 0.0 && std::isfinite(cfg.alpha), ErrorKind::BadParam, "alpha must be >= 0");
  require(cfg.rel_tol > 0.0, ErrorKind::BadParam, "rel_tol must be > 0");
  require(cfg.max_iters >= 0, ErrorKind::BadParam, "max_iters must be >= 0");
}

namespace detail {

inline void check_factor_shapes(const Matrix& k, const Matrix& g, const Matrix& h) {
  require(k.rows() == k.cols(), ErrorKind::DimensionMismatch, "kernel must be square");
  require(h.cols() == k.rows(), ErrorKind::DimensionMismatch, "H must be k x n");
  require(g.rows() == k.rows() && g.cols() == h.rows(), ErrorKind::DimensionMismatch, "G must be n x k");
}

// sum_ij a_ij b_ji = tr(A B) without forming the product.
inline double trace_of_product(const Matrix& a, const Matrix& b) {
  return a.cwiseProduct(b.transpose()).sum();
}

}  // namespace detail

/// d_v = ||K - G H||_F^2 + alpha ||G - H^T||_F^2, evaluated directly.
inline double per_view_loss(const Matrix& k, const Matrix& g, const Matrix& h, double alpha) {
  detail::check_factor_shapes(k, g, h);
  return (k - g * h).squaredNorm() + alpha * (g - h.transpose()).squaredNorm();
}

/// Trace-form per-view term of the ablation objective:
/// tr(-2 H K G + G^T K G) - 2 alpha tr(G H).
inline double nonsparse_view_term(const Matrix& k, const Matrix& g, const Matrix& h, double alpha) {
  detail::check_factor_shapes(k, g, h);
  const Matrix kg = k * g;
  return g.cwiseProduct(kg).sum() - 2.0 * detail::trace_of_product(h, kg) -
         2.0 * alpha * detail::trace_of_product(g, h);
}

inline double objective(const KernelSet& ks, const SolverState& st, const SolverConfig& cfg) {
  require(st.G.size() == ks.views() && static_cast<std::size_t>(st.omega.size()) == ks.views(),
          ErrorKind::DimensionMismatch, "state does not match the number of views");
  double total = 0.0;
  for (std::size_t v = 0; v < ks.views(); ++v) {
    const double w2 = st.omega(static_cast<Index>(v)) * st.omega(static_cast<Index>(v));
    const double term = cfg.variant == ObjectiveVariant::Sparse
                            ? per_view_loss(ks[v].data, st.G[v], st.H, cfg.alpha)
                            : nonsparse_view_term(ks[v].data, st.G[v], st.H, cfg.alpha);
    total += w2 * term;
  }
  return total;
}

/// Closed-form minimiser over G of the per-view loss with H fixed:
/// G = (K^T H^T + alpha H^T) / (alpha + 1).
inline Matrix update_g(const Matrix& k, const Matrix& h, double alpha) {
  require(k.rows() == k.cols() && h.cols() == k.rows(), ErrorKind::DimensionMismatch, "update_g shape mismatch");
  require(alpha >= 0.0, ErrorKind::BadParam, "alpha must be >= 0");
  const Matrix ht = h.transpose();
  return (k.transpose() * ht + alpha * ht) / (alpha + 1.0);
}

/// Ridge used by the ablation G-update: 1e-8 * tr(K) / n.
inline double nonsparse_ridge(const Matrix& k) {
  const double r = 1e-8 * k.trace() / static_cast<double>(k.rows());
  return r > 0.0 ? r : 1e-12;
}

/// Ablation G-update: solves (K + eps I) G = K H^T + alpha H^T.
inline Matrix update_g_nonsparse(const Matrix& k, const Matrix& h, double alpha) {
  require(k.rows() == k.cols() && h.cols() == k.rows(), ErrorKind::DimensionMismatch, "update_g shape mismatch");
  const Index n = k.rows();
  const Matrix reg = k + nonsparse_ridge(k) * Matrix::Identity(n, n);
  const Matrix ht = h.transpose();
  return Eigen::LDLT<Matrix>(reg).solve(k * ht + alpha * ht);
}

/// A = sum_v w_v^2 (G_v^T K_v + alpha G_v^T), the matrix whose polar factor
/// maximises tr(H^T A) under H H^T = I.
inline Matrix h_subproblem_matrix(const KernelSet& ks, const std::vector<Matrix>& g, const Vector& omega,
                                  double alpha) {
  require(g.size() == ks.views() && static_cast<std::size_t>(omega.size()) == ks.views(),
          ErrorKind::DimensionMismatch, "update_h needs one G per view");
  const Index n = ks.n();
  const Index k = g.front().cols();
  Matrix a = Matrix::Zero(k, n);
  for (std::size_t v = 0; v < ks.views(); ++v) {
    require(g[v].rows() == n && g[v].cols() == k, ErrorKind::DimensionMismatch, "G_v must be n x k");
    const double w2 = omega(static_cast<Index>(v)) * omega(static_cast<Index>(v));
    a.noalias() += w2 * (g[v].transpose() * ks[v].data);
    a += (w2 * alpha) * g[v].transpose();
  }
  return a;
}

struct HUpdate {
  Matrix H;
  Vector singular_values;
  bool rank_deficient = false;
};

inline HUpdate update_h_from(const Matrix& a) {
  auto polar = linalg::polar_rows(a);
  return {std::move(polar.q), std::move(polar.singular_values), polar.rank_deficient};
}

inline HUpdate update_h(const KernelSet& ks, const std::vector<Matrix>& g, const Vector& omega, double alpha) {
  return update_h_from(h_subproblem_matrix(ks, g, omega, alpha));
}

/// Simplex minimiser of sum_v w_v^2 d_v for nonnegative losses:
/// w_v = (1/d_v) / sum_u (1/d_u), each d_v floored at 1e-12.
inline Vector update_weights(const Vector& d) {
  require(d.size() >= 1, ErrorKind::BadParam, "need at least one view loss");
  Vector inv(d.size());
  for (Index v = 0; v < d.size(); ++v) {
    require(!std::isnan(d(v)), ErrorKind::NonFinite, "view loss is NaN");
    inv(v) = 1.0 / std::max(d(v), kLossFloor);
  }
  return inv / inv.sum();
}

/// Exact simplex minimiser for losses of any sign. When some loss is <= 0 the
/// minimum sits on the vertex of the smallest loss (lowest index on ties).
inline Vector minimize_simplex_weights(const Vector& d) {
  if ((d.array() > 0.0).all()) return update_weights(d);
  Index best = 0;
  for (Index v = 1; v < d.size(); ++v)
    if (d(v) < d(best)) best = v;
  Vector w = Vector::Zero(d.size());
  w(best) = 1.0;
  return w;
}

/// Initial per-view factor: top-k eigenvectors of D + K, where
/// D_ij = A_max(i,j) and A holds the row sums of K.
inline Matrix init_g(const Matrix& k, Index clusters) {
  require(k.rows() == k.cols(), ErrorKind::DimensionMismatch, "kernel must be square");
  require(clusters >= 1 && clusters <= k.rows(), ErrorKind::BadParam, "cluster count exceeds sample count");
  const Index n = k.rows();
  const Vector row_sums = k.rowwise().sum();
  Matrix m(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i) m(i, j) = row_sums(std::max(i, j)) + k(i, j);
  return linalg::top_eigenvectors(m, clusters).vectors;
}

inline SolverState init_state(const KernelSet& ks, const SolverConfig& cfg) {
  require(ks.views() >= 1, ErrorKind::BadParam, "kernel set has no views");
  check_config(cfg, ks.n());
  const auto views = static_cast<Index>(ks.views());
  SolverState st;
  st.G.reserve(ks.views());
  Matrix mean = Matrix::Zero(ks.n(), cfg.k);
  for (const auto& kv : ks.kernels) {
    require(kv.n() == ks.n(), ErrorKind::DimensionMismatch, "views disagree on n");
    st.G.push_back(init_g(kv.data, cfg.k));
    mean += st.G.back();
  }
  mean /= static_cast<double>(views);
  auto polar = linalg::polar_rows(mean.transpose());
  st.H = std::move(polar.q);
  st.rank_deficient = polar.rank_deficient;
  st.omega = Vector::Constant(views, 1.0 / static_cast<double>(views));
  return st;
}

/// Called after each completed iteration with the 1-based iteration index.
using IterationObserver = std::function<void(int, const SolverState&)>;

namespace detail {

// K^T X one column of K at a time. With a few columns in X this streams K
// once, contiguously, which beats the packed GEMM path once K leaves cache.
inline void transposed_product(const Matrix& k, const Matrix& x, Matrix& out) {
  out.resize(k.cols(), x.cols());
  for (Index j = 0; j < k.cols(); ++j) out.row(j).noalias() = k.col(j).transpose() * x;
}

struct ViewCache {
  double kernel_sqnorm = 0.0;
  std::optional<Eigen::LDLT<Matrix>> ridge_solver;
};

// Per-view term of the objective given K G (reused from the H-step).
// Sparse: ||K||^2 - 2 tr(H K G) + tr(G^T G H H^T) + alpha ||G - H^T||^2.
inline double view_term(const ViewCache& cache, const Matrix& kg, const Matrix& g, const Matrix& h,
                        double alpha, ObjectiveVariant variant) {
  const double cross = trace_of_product(h, kg);
  if (variant == ObjectiveVariant::Nonsparse)
    return g.cwiseProduct(kg).sum() - 2.0 * cross - 2.0 * alpha * trace_of_product(g, h);
  const Matrix gtg = g.transpose() * g;
  const Matrix hht = h * h.transpose();
  const double recon = cache.kernel_sqnorm - 2.0 * cross + gtg.cwiseProduct(hht).sum();
  return recon + alpha * (g - h.transpose()).squaredNorm();
}

}  // namespace detail

/// Alternating minimisation: G_v (closed form), H (polar factor), omega
/// (inverse-loss weights) until the relative objective change drops below
/// rel_tol or max_iters is reached. Deterministic for fixed inputs.
inline SolverState fit(const KernelSet& ks, const SolverConfig& cfg, const IterationObserver& observer = {}) {
  SolverState st = init_state(ks, cfg);
  const std::size_t views = ks.views();
  const Index n = ks.n();

  std::vector<detail::ViewCache> cache(views);
  for (std::size_t v = 0; v < views; ++v) {
    cache[v].kernel_sqnorm = ks[v].data.squaredNorm();
    if (cfg.variant == ObjectiveVariant::Nonsparse)
      cache[v].ridge_solver.emplace(ks[v].data + nonsparse_ridge(ks[v].data) * Matrix::Identity(n, n));
  }

  st.initial_objective = objective(ks, st, cfg);
  require(std::isfinite(st.initial_objective), ErrorKind::NonFinite, "initial objective is not finite");
  if (cfg.max_iters == 0) return st;

  std::vector<Matrix> kg(views);
  Matrix kht;
  Vector d(static_cast<Index>(views));
  double previous = st.initial_objective;
  for (int it = 1; it <= cfg.max_iters; ++it) {
    const Matrix ht = st.H.transpose();
    for (std::size_t v = 0; v < views; ++v) {
      const Matrix& k = ks[v].data;
      detail::transposed_product(k, ht, kht);
      if (cfg.variant == ObjectiveVariant::Sparse)
        st.G[v] = (kht + cfg.alpha * ht) / (cfg.alpha + 1.0);
      else
        st.G[v] = cache[v].ridge_solver->solve(kht + cfg.alpha * ht);
      detail::transposed_product(k, st.G[v], kg[v]);
    }

    // G^T K = (K^T G)^T.
    Matrix a = Matrix::Zero(cfg.k, n);
    for (std::size_t v = 0; v < views; ++v) {
      const double w = st.omega(static_cast<Index>(v));
      a += (w * w) * (kg[v].transpose() + cfg.alpha * st.G[v].transpose());
    }
    HUpdate hu = update_h_from(a);
    st.H = std::move(hu.H);
    st.rank_deficient = st.rank_deficient || hu.rank_deficient;

    for (std::size_t v = 0; v < views; ++v)
      d(static_cast<Index>(v)) = detail::view_term(cache[v], kg[v], st.G[v], st.H, cfg.alpha, cfg.variant);
    st.omega = cfg.variant == ObjectiveVariant::Sparse ? update_weights(d) : minimize_simplex_weights(d);

    const double j = st.omega.cwiseProduct(st.omega).dot(d);
    require(std::isfinite(j), ErrorKind::NonFinite, "objective became non-finite at iteration " + std::to_string(it));
    st.objective_trace.push_back(j);
    st.iterations = it;
    if (observer) observer(it, st);

    const double rel = std::abs(previous - j) / std::max(std::abs(previous), 1e-12);
    previous = j;
    if (rel < cfg.rel_tol) {
      st.converged = true;
      break;
    }
  }
  return st;
}

/// Kernel k-means relaxation: rows of H are the top-k eigenvectors of K,
/// maximising tr(H K H^T) under H H^T = I.
inline Matrix fit_kkm(const Matrix& k, Index clusters) {
  require(clusters >= 1 && clusters <= k.rows(), ErrorKind::BadParam, "cluster count exceeds sample count");
  return linalg::top_eigenvectors(k, clusters).vectors.transpose();
}

struct MkkmResult {
  Matrix H;
  Vector gamma;
  std::vector<double> objective_trace;
  int iterations = 0;
};

inline MkkmResult fit_mkkm(const KernelSet& ks, Index clusters, int max_iters = 100, double rel_tol = 1e-6) {
  require(ks.views() >= 1, ErrorKind::BadParam, "kernel set has no views");
  const auto views = static_cast<Index>(ks.views());
  const Index n = ks.n();
  MkkmResult out;
  out.gamma = Vector::Constant(views, 1.0 / static_cast<double>(views));
  Vector traces(views);
  for (Index v = 0; v < views; ++v) traces(v) = ks[static_cast<std::size_t>(v)].data.trace();

  double previous = 0.0;
  Vector c(views);
  for (int it = 1; it <= std::max(1, max_iters); ++it) {
    Matrix combined = Matrix::Zero(n, n);
    for (Index v = 0; v < views; ++v) combined += out.gamma(v) * out.gamma(v) * ks[static_cast<std::size_t>(v)].data;
    out.H = fit_kkm(combined, clusters);
    for (Index v = 0; v < views; ++v) {
      const Matrix& k = ks[static_cast<std::size_t>(v)].data;
      c(v) = traces(v) - (out.H * k).cwiseProduct(out.H).sum();
    }
    out.gamma = update_weights(c);
    const double j = out.gamma.cwiseProduct(out.gamma).dot(c);
    require(std::isfinite(j), ErrorKind::NonFinite, "MKKM objective became non-finite");
    out.objective_trace.push_back(j);
    out.iterations = it;
    if (it > 1 && std::abs(previous - j) / std::max(std::abs(previous), 1e-12) < rel_tol) break;
    previous = j;
  }
  return out;
}

}  // namespace mvkmf
