#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <vector>

#include "mvkmf/error.hpp"

namespace mvkmf {

/// Counts of (true class, predicted cluster) co-occurrences.
struct ContingencyTable {
  std::vector<std::vector<std::int64_t>> counts;  // rows: true classes, cols: predicted clusters
  std::int64_t n = 0;

  std::size_t rows() const { return counts.size(); }
  std::size_t cols() const { return counts.empty() ? 0 : counts.front().size(); }

  std::vector<std::int64_t> row_sums() const {
    std::vector<std::int64_t> s(rows(), 0);
    for (std::size_t i = 0; i < rows(); ++i)
      for (auto c : counts[i]) s[i] += c;
    return s;
  }
  std::vector<std::int64_t> col_sums() const {
    std::vector<std::int64_t> s(cols(), 0);
    for (const auto& row : counts)
      for (std::size_t j = 0; j < row.size(); ++j) s[j] += row[j];
    return s;
  }
};

struct MetricReport {
  double acc = 0.0;
  double nmi = 0.0;
  double purity = 0.0;
  double ari = 0.0;
};

namespace detail {

// Map arbitrary label ids onto 0..m-1 in order of first sorted id.
inline std::vector<int> compact_labels(std::span<const int> labels, std::size_t& distinct) {
  std::map<int, int> ids;
  for (int l : labels) ids.emplace(l, 0);
  int next = 0;
  for (auto& [key, value] : ids) value = next++;
  distinct = ids.size();
  std::vector<int> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) out[i] = ids[labels[i]];
  return out;
}

// Minimum-cost perfect matching on a square cost matrix (Hungarian method with
// potentials). Returns assignment[row] = column.
inline std::vector<std::size_t> hungarian(const std::vector<std::vector<double>>& cost) {
  const std::size_t m = cost.size();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(m + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  for (std::size_t i = 1; i <= m; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<bool> used(m + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> assignment(m, 0);
  for (std::size_t j = 1; j <= m; ++j)
    if (p[j] != 0) assignment[p[j] - 1] = j - 1;
  return assignment;
}

inline double choose2(std::int64_t x) { return 0.5 * static_cast<double>(x) * static_cast<double>(x - 1); }

inline bool same_partition(const ContingencyTable& t) {
  for (const auto& row : t.counts)
    if (std::count_if(row.begin(), row.end(), [](std::int64_t c) { return c > 0; }) != 1) return false;
  for (std::size_t j = 0; j < t.cols(); ++j) {
    int nonzero = 0;
    for (const auto& row : t.counts) nonzero += row[j] > 0;
    if (nonzero != 1) return false;
  }
  return true;
}

}  // namespace detail

inline ContingencyTable contingency(std::span<const int> truth, std::span<const int> pred) {
  require(truth.size() == pred.size(), ErrorKind::LengthMismatch,
          "label vectors differ in length (" + std::to_string(truth.size()) + " vs " + std::to_string(pred.size()) + ")");
  std::size_t r = 0, c = 0;
  const auto t = detail::compact_labels(truth, r);
  const auto p = detail::compact_labels(pred, c);
  ContingencyTable table;
  table.counts.assign(r, std::vector<std::int64_t>(c, 0));
  for (std::size_t i = 0; i < t.size(); ++i) ++table.counts[static_cast<std::size_t>(t[i])][static_cast<std::size_t>(p[i])];
  table.n = static_cast<std::int64_t>(t.size());
  return table;
}

/// Best agreement over one-to-one cluster -> class maps (Hungarian on the
/// zero-padded square contingency table).
inline double accuracy(std::span<const int> truth, std::span<const int> pred) {
  const ContingencyTable t = contingency(truth, pred);
  if (t.n == 0) return 1.0;
  const std::size_t m = std::max(t.rows(), t.cols());
  std::vector<std::vector<double>> cost(m, std::vector<double>(m, 0.0));
  for (std::size_t i = 0; i < t.rows(); ++i)
    for (std::size_t j = 0; j < t.cols(); ++j) cost[i][j] = -static_cast<double>(t.counts[i][j]);
  const auto assignment = detail::hungarian(cost);
  std::int64_t matched = 0;
  for (std::size_t i = 0; i < t.rows(); ++i)
    if (assignment[i] < t.cols()) matched += t.counts[i][assignment[i]];
  return static_cast<double>(matched) / static_cast<double>(t.n);
}

/// Mutual information over the geometric mean of the two entropies (natural log).
inline double nmi(std::span<const int> truth, std::span<const int> pred) {
  const ContingencyTable t = contingency(truth, pred);
  if (t.n == 0) return 1.0;
  const double n = static_cast<double>(t.n);
  const auto a = t.row_sums();
  const auto b = t.col_sums();
  auto entropy = [n](const std::vector<std::int64_t>& sums) {
    double h = 0.0;
    for (auto s : sums)
      if (s > 0) {
        const double p = static_cast<double>(s) / n;
        h -= p * std::log(p);
      }
    return h;
  };
  const double hu = entropy(a);
  const double hv = entropy(b);
  if (hu == 0.0 && hv == 0.0) return detail::same_partition(t) ? 1.0 : 0.0;
  if (hu == 0.0 || hv == 0.0) return 0.0;
  double mi = 0.0;
  for (std::size_t i = 0; i < t.rows(); ++i)
    for (std::size_t j = 0; j < t.cols(); ++j) {
      const auto c = t.counts[i][j];
      if (c == 0) continue;
      const double pij = static_cast<double>(c) / n;
      mi += pij * std::log(n * static_cast<double>(c) / (static_cast<double>(a[i]) * static_cast<double>(b[j])));
    }
  return std::clamp(mi / std::sqrt(hu * hv), 0.0, 1.0);
}

inline double purity(std::span<const int> truth, std::span<const int> pred) {
  const ContingencyTable t = contingency(truth, pred);
  if (t.n == 0) return 1.0;
  std::int64_t total = 0;
  for (std::size_t j = 0; j < t.cols(); ++j) {
    std::int64_t best = 0;
    for (std::size_t i = 0; i < t.rows(); ++i) best = std::max(best, t.counts[i][j]);
    total += best;
  }
  return static_cast<double>(total) / static_cast<double>(t.n);
}

/// Adjusted Rand index, evaluated from integer pair counts as
/// (2 N s - 2 x y) / (N (x + y) - 2 x y) with N = C(n,2), s = sum C(n_ij,2),
/// x = sum C(a_i,2), y = sum C(b_j,2).
inline double ari(std::span<const int> truth, std::span<const int> pred) {
  const ContingencyTable t = contingency(truth, pred);
  double s = 0.0, x = 0.0, y = 0.0;
  for (const auto& row : t.counts)
    for (auto c : row) s += detail::choose2(c);
  for (auto a : t.row_sums()) x += detail::choose2(a);
  for (auto b : t.col_sums()) y += detail::choose2(b);
  const double pairs = detail::choose2(t.n);
  const double num = 2.0 * pairs * s - 2.0 * x * y;
  const double den = pairs * (x + y) - 2.0 * x * y;
  if (den == 0.0) return detail::same_partition(t) ? 1.0 : 0.0;
  return num / den;
}

inline MetricReport evaluate(std::span<const int> truth, std::span<const int> pred) {
  return {accuracy(truth, pred), nmi(truth, pred), purity(truth, pred), ari(truth, pred)};
}

}  // namespace mvkmf
