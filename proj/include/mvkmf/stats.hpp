#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "mvkmf/error.hpp"
#include "mvkmf/linalg.hpp"

namespace mvkmf {

using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Scores of k algorithms on n datasets (rows: datasets, cols: algorithms).
struct ResultsTable {
  Matrix scores;
  std::vector<std::string> dataset_names;
  std::vector<std::string> algorithm_names;
  BoolMatrix missing;  // same shape as scores; true where a cell is "-"

  Index datasets() const { return scores.rows(); }
  Index algorithms() const { return scores.cols(); }
};

struct RankSummary {
  Vector mean_ranks;
  double chi2 = 0.0;
  double f_stat = 0.0;
  int df1 = 0;
  int df2 = 0;
  double p_value = 1.0;
  double cd = 0.0;
  Index rows_used = 0;
  Index rows_dropped = 0;
  bool degenerate = false;  // n(k-1) == chi2, F reported as +inf
};

inline constexpr double kDefaultQAlpha = 1.96;

namespace detail {

// Continued fraction for the incomplete beta function (modified Lentz).
inline double beta_continued_fraction(double a, double b, double x) {
  constexpr double tiny = 1e-300;
  constexpr double eps = 1e-12;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 10000; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < eps) break;
  }
  return h;
}

}  // namespace detail

/// Regularized incomplete beta I_x(a, b).
inline double incomplete_beta(double a, double b, double x) {
  require(a > 0.0 && b > 0.0, ErrorKind::BadParam, "incomplete beta needs a, b > 0");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * detail::beta_continued_fraction(b, a, 1.0 - x) / b;
}

/// P(F > f) for an F(df1, df2) variable.
inline double f_survival(double f, double df1, double df2) {
  require(df1 > 0.0 && df2 > 0.0, ErrorKind::BadParam, "F degrees of freedom must be positive");
  if (f <= 0.0) return 1.0;
  if (std::isinf(f)) return 0.0;
  return incomplete_beta(0.5 * df2, 0.5 * df1, df2 / (df2 + df1 * f));
}

/// Ranks 1..k of one row, ties sharing their mean rank. Rank 1 is the best.
inline Vector rank_row(const Vector& row, bool higher_is_better) {
  const Index k = row.size();
  std::vector<Index> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return higher_is_better ? row(a) > row(b) : row(a) < row(b);
  });
  Vector ranks(k);
  Index i = 0;
  while (i < k) {
    Index j = i;
    while (j + 1 < k && row(order[static_cast<std::size_t>(j + 1)]) == row(order[static_cast<std::size_t>(i)])) ++j;
    const double shared = 0.5 * static_cast<double>(i + j) + 1.0;
    for (Index t = i; t <= j; ++t) ranks(order[static_cast<std::size_t>(t)]) = shared;
    i = j + 1;
  }
  return ranks;
}

/// Critical difference q * sqrt(k (k + 1) / (6 n)).
inline double nemenyi_cd(Index algorithms, Index datasets, double q_alpha) {
  require(algorithms >= 2 && datasets >= 1 && q_alpha > 0.0, ErrorKind::BadParam, "invalid Nemenyi arguments");
  const double k = static_cast<double>(algorithms);
  return q_alpha * std::sqrt(k * (k + 1.0) / (6.0 * static_cast<double>(datasets)));
}

/// Friedman test with the Iman-Davenport F correction. Rows with any missing
/// cell are dropped before ranking.
inline RankSummary friedman(const ResultsTable& rt, bool higher_is_better, double q_alpha = kDefaultQAlpha) {
  const Index k = rt.algorithms();
  require(k >= 2, ErrorKind::BadParam, "Friedman test needs at least two algorithms");
  const bool has_mask = rt.missing.size() > 0;
  if (has_mask)
    require(rt.missing.rows() == rt.scores.rows() && rt.missing.cols() == rt.scores.cols(),
            ErrorKind::DimensionMismatch, "missing mask shape differs from scores");

  RankSummary rs;
  Vector rank_sums = Vector::Zero(k);
  for (Index r = 0; r < rt.datasets(); ++r) {
    if (has_mask && rt.missing.row(r).any()) {
      ++rs.rows_dropped;
      continue;
    }
    rank_sums += rank_row(rt.scores.row(r).transpose(), higher_is_better);
    ++rs.rows_used;
  }
  require(rs.rows_used >= 2, ErrorKind::BadParam,
          "Friedman test needs at least two complete rows (have " + std::to_string(rs.rows_used) + ")");

  const double n = static_cast<double>(rs.rows_used);
  const double kk = static_cast<double>(k);
  rs.mean_ranks = rank_sums / n;
  const double spread = rs.mean_ranks.squaredNorm() - kk * (kk + 1.0) * (kk + 1.0) / 4.0;
  rs.chi2 = std::max(0.0, 12.0 * n / (kk * (kk + 1.0)) * spread);
  rs.df1 = static_cast<int>(k - 1);
  rs.df2 = static_cast<int>((k - 1) * (rs.rows_used - 1));
  const double denom = n * (kk - 1.0) - rs.chi2;
  if (denom <= 1e-12 * n * (kk - 1.0)) {
    rs.degenerate = true;
    rs.f_stat = std::numeric_limits<double>::infinity();
    rs.p_value = 0.0;
  } else {
    rs.f_stat = (n - 1.0) * rs.chi2 / denom;
    rs.p_value = f_survival(rs.f_stat, rs.df1, rs.df2);
  }
  rs.cd = nemenyi_cd(k, rs.rows_used, q_alpha);
  return rs;
}

/// (i, j) is true when the mean-rank gap reaches the critical difference.
inline BoolMatrix pairwise_significance(const RankSummary& rs) {
  const Index k = rs.mean_ranks.size();
  BoolMatrix sig = BoolMatrix::Constant(k, k, false);
  for (Index i = 0; i < k; ++i)
    for (Index j = 0; j < k; ++j)
      if (i != j) sig(i, j) = std::abs(rs.mean_ranks(i) - rs.mean_ranks(j)) >= rs.cd;
  return sig;
}

}  // namespace mvkmf
