#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "mvkmf/error.hpp"
#include "mvkmf/linalg.hpp"

namespace mvkmf {

struct KMeansConfig {
  Index k = 2;
  int restarts = 50;
  int max_iters = 300;
  double tol = 1e-10;  // max center shift that counts as converged
  std::uint64_t seed = 0;
};

struct Labeling {
  std::vector<int> labels;
  double inertia = 0.0;
  Matrix centers;  // dim x k, each the mean of its assigned points
  int restart = 0;
};

namespace detail {

inline std::mt19937_64 restart_generator(std::uint64_t seed, int restart) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(restart)};
  return std::mt19937_64(seq);
}

// Uniform in [0, 1), independent of the standard library's distribution code.
inline double unit_draw(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

template <typename Derived>
double sq_dist(const Eigen::MatrixBase<Derived>& points, Index i, const Matrix& centers, Index c) {
  return (points.col(i) - centers.col(c)).squaredNorm();
}

template <typename Derived>
Matrix kmeanspp_seed(const Eigen::MatrixBase<Derived>& points, Index k, std::mt19937_64& rng) {
  const Index n = points.cols();
  Matrix centers(points.rows(), k);
  Index first = static_cast<Index>(unit_draw(rng) * static_cast<double>(n));
  centers.col(0) = points.col(std::min(first, n - 1));
  Vector best(n);
  for (Index i = 0; i < n; ++i) best(i) = sq_dist(points, i, centers, 0);
  for (Index c = 1; c < k; ++c) {
    const double total = best.sum();
    Index pick = n - 1;
    if (total > 0.0) {
      const double target = unit_draw(rng) * total;
      double acc = 0.0;
      for (Index i = 0; i < n; ++i) {
        acc += best(i);
        if (acc > target && best(i) > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = std::min(static_cast<Index>(unit_draw(rng) * static_cast<double>(n)), n - 1);
    }
    centers.col(c) = points.col(pick);
    for (Index i = 0; i < n; ++i) best(i) = std::min(best(i), sq_dist(points, i, centers, c));
  }
  return centers;
}

template <typename Derived>
double assign(const Eigen::MatrixBase<Derived>& points, const Matrix& centers, std::vector<int>& labels) {
  double inertia = 0.0;
  for (Index i = 0; i < points.cols(); ++i) {
    Index arg = 0;
    double best = std::numeric_limits<double>::infinity();
    for (Index c = 0; c < centers.cols(); ++c) {
      const double d = sq_dist(points, i, centers, c);
      if (d < best) {
        best = d;
        arg = c;
      }
    }
    labels[static_cast<std::size_t>(i)] = static_cast<int>(arg);
    inertia += best;
  }
  return inertia;
}

template <typename Derived>
Matrix cluster_means(const Eigen::MatrixBase<Derived>& points, const std::vector<int>& labels, const Matrix& fallback) {
  Matrix sums = Matrix::Zero(points.rows(), fallback.cols());
  std::vector<Index> counts(static_cast<std::size_t>(fallback.cols()), 0);
  for (Index i = 0; i < points.cols(); ++i) {
    const int c = labels[static_cast<std::size_t>(i)];
    sums.col(c) += points.col(i);
    ++counts[static_cast<std::size_t>(c)];
  }
  for (Index c = 0; c < sums.cols(); ++c) {
    const auto cnt = counts[static_cast<std::size_t>(c)];
    sums.col(c) = cnt > 0 ? Vector(sums.col(c) / static_cast<double>(cnt)) : Vector(fallback.col(c));
  }
  return sums;
}

// Each empty cluster takes the point farthest from its current center.
template <typename Derived>
bool repair_empty(const Eigen::MatrixBase<Derived>& points, Matrix& centers, std::vector<int>& labels) {
  const Index k = centers.cols();
  std::vector<Index> counts(static_cast<std::size_t>(k), 0);
  for (int l : labels) ++counts[static_cast<std::size_t>(l)];
  bool repaired = false;
  std::vector<bool> taken(labels.size(), false);
  for (Index c = 0; c < k; ++c) {
    if (counts[static_cast<std::size_t>(c)] > 0) continue;
    Index far = -1;
    double far_d = -1.0;
    for (Index i = 0; i < points.cols(); ++i) {
      const auto idx = static_cast<std::size_t>(i);
      if (taken[idx] || counts[static_cast<std::size_t>(labels[idx])] <= 1) continue;
      const double d = sq_dist(points, i, centers, labels[idx]);
      if (d > far_d) {
        far_d = d;
        far = i;
      }
    }
    if (far < 0) break;
    const auto idx = static_cast<std::size_t>(far);
    --counts[static_cast<std::size_t>(labels[idx])];
    labels[idx] = static_cast<int>(c);
    counts[static_cast<std::size_t>(c)] = 1;
    taken[idx] = true;
    centers.col(c) = points.col(far);
    repaired = true;
  }
  return repaired;
}

template <typename Derived>
double inertia_of(const Eigen::MatrixBase<Derived>& points, const Matrix& centers, const std::vector<int>& labels) {
  double s = 0.0;
  for (Index i = 0; i < points.cols(); ++i) s += sq_dist(points, i, centers, labels[static_cast<std::size_t>(i)]);
  return s;
}

}  // namespace detail

struct LloydRun {
  Labeling result;
  std::vector<double> inertia_history;  // inertia after each center update
};

/// One k-means++ seeded Lloyd run over the columns of `points`.
template <typename Derived>
LloydRun lloyd(const Eigen::MatrixBase<Derived>& points, Index k, std::mt19937_64& rng, int max_iters, double tol) {
  const Index n = points.cols();
  LloydRun run;
  Matrix centers = detail::kmeanspp_seed(points, k, rng);
  std::vector<int> labels(static_cast<std::size_t>(n), -1);
  std::vector<int> previous;
  for (int it = 0; it < std::max(1, max_iters); ++it) {
    previous = labels;
    detail::assign(points, centers, labels);
    detail::repair_empty(points, centers, labels);
    if (labels == previous) break;
    Matrix next = detail::cluster_means(points, labels, centers);
    const double shift = (next - centers).colwise().norm().maxCoeff();
    centers = std::move(next);
    run.inertia_history.push_back(detail::inertia_of(points, centers, labels));
    if (shift <= tol) {
      detail::assign(points, centers, labels);
      detail::repair_empty(points, centers, labels);
      break;
    }
  }
  centers = detail::cluster_means(points, labels, centers);
  run.result.inertia = detail::inertia_of(points, centers, labels);
  run.result.labels = std::move(labels);
  run.result.centers = std::move(centers);
  return run;
}

/// Multi-restart k-means over the columns of `points` (dim x n). Returns the
/// lowest-inertia restart, ties to the earliest restart.
template <typename Derived>
Labeling kmeans(const Eigen::MatrixBase<Derived>& points, const KMeansConfig& cfg) {
  require(cfg.k >= 1, ErrorKind::BadParam, "k must be >= 1");
  require(cfg.restarts >= 1, ErrorKind::BadParam, "restarts must be >= 1");
  require(points.cols() >= cfg.k, ErrorKind::TooFewPoints,
          "k-means needs n >= k (n=" + std::to_string(points.cols()) + ", k=" + std::to_string(cfg.k) + ")");
  require(points.allFinite(), ErrorKind::NonFinite, "k-means input contains NaN/Inf");
  Labeling best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < cfg.restarts; ++r) {
    auto rng = detail::restart_generator(cfg.seed, r);
    LloydRun run = lloyd(points, cfg.k, rng, cfg.max_iters, cfg.tol);
    if (run.result.inertia < best.inertia) {
      best = std::move(run.result);
      best.restart = r;
    }
  }
  return best;
}

}  // namespace mvkmf
