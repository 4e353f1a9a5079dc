#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "mvkmf/error.hpp"
#include "mvkmf/linalg.hpp"

namespace mvkmf {

/// One view of raw data, stored features x samples (d_v x n).
struct FeatureMatrix {
  Matrix data;
  std::string view_name;

  Index samples() const { return data.cols(); }
  Index features() const { return data.rows(); }
};

struct KernelMatrix {
  Matrix data;  // n x n
  std::string view_name;

  Index n() const { return data.rows(); }
};

struct KernelSet {
  std::vector<KernelMatrix> kernels;

  Index n() const { return kernels.empty() ? 0 : kernels.front().n(); }
  std::size_t views() const { return kernels.size(); }
  const KernelMatrix& operator[](std::size_t v) const { return kernels[v]; }
};

enum class KernelType { Linear, Rbf, Polynomial };

struct KernelSpec {
  KernelType type = KernelType::Rbf;
  std::optional<double> sigma;  // rbf bandwidth; unset means median heuristic
  double offset = 1.0;          // polynomial c
  int degree = 2;               // polynomial degree

  static KernelSpec linear() { return {KernelType::Linear, std::nullopt, 0.0, 1}; }
  static KernelSpec rbf(std::optional<double> sigma = std::nullopt) {
    return {KernelType::Rbf, sigma, 0.0, 1};
  }
  static KernelSpec polynomial(double offset, int degree) {
    return {KernelType::Polynomial, std::nullopt, offset, degree};
  }
};

enum class Normalization { None, Cosine, Center };

inline std::optional<KernelType> parse_kernel_type(std::string_view s) {
  if (s == "linear") return KernelType::Linear;
  if (s == "rbf") return KernelType::Rbf;
  if (s == "polynomial" || s == "poly") return KernelType::Polynomial;
  return std::nullopt;
}

inline std::string_view to_string(KernelType t) {
  switch (t) {
    case KernelType::Linear: return "linear";
    case KernelType::Rbf: return "rbf";
    case KernelType::Polynomial: return "polynomial";
  }
  return "?";
}

inline std::optional<Normalization> parse_normalization(std::string_view s) {
  if (s == "none") return Normalization::None;
  if (s == "cosine") return Normalization::Cosine;
  if (s == "center") return Normalization::Center;
  return std::nullopt;
}

inline std::string_view to_string(Normalization m) {
  switch (m) {
    case Normalization::None: return "none";
    case Normalization::Cosine: return "cosine";
    case Normalization::Center: return "center";
  }
  return "?";
}

namespace detail {

inline double squared_distance(const Matrix& x, Index i, Index j) {
  return (x.col(i) - x.col(j)).squaredNorm();
}

// Copy the upper triangle onto the lower one so K == K^T holds bit-for-bit.
inline void mirror_upper(Matrix& k) {
  for (Index j = 0; j < k.cols(); ++j)
    for (Index i = j + 1; i < k.rows(); ++i) k(i, j) = k(j, i);
}

}  // namespace detail

/// Median of the nonzero pairwise Euclidean distances between samples.
/// Falls back to 1 when every pair coincides.
inline double median_distance(const FeatureMatrix& features) {
  const Index n = features.samples();
  std::vector<double> dists;
  dists.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) {
      const double d = std::sqrt(detail::squared_distance(features.data, i, j));
      if (d > 0.0) dists.push_back(d);
    }
  if (dists.empty()) return 1.0;
  std::sort(dists.begin(), dists.end());
  const std::size_t m = dists.size();
  return m % 2 == 1 ? dists[m / 2] : 0.5 * (dists[m / 2 - 1] + dists[m / 2]);
}

inline KernelMatrix build_kernel(const FeatureMatrix& features, const KernelSpec& spec) {
  const Matrix& x = features.data;
  require(x.allFinite(), ErrorKind::NonFinite, "features of view '" + features.view_name + "' contain NaN/Inf");
  require(x.cols() >= 2, ErrorKind::BadParam, "need at least two samples");
  require(x.rows() >= 1, ErrorKind::BadParam, "need at least one feature");

  const Index n = x.cols();
  KernelMatrix out{Matrix(n, n), features.view_name};
  Matrix& k = out.data;

  switch (spec.type) {
    case KernelType::Linear:
      for (Index j = 0; j < n; ++j)
        for (Index i = 0; i <= j; ++i) k(i, j) = x.col(i).dot(x.col(j));
      break;
    case KernelType::Polynomial:
      require(spec.degree >= 1, ErrorKind::BadParam, "polynomial degree must be >= 1");
      for (Index j = 0; j < n; ++j)
        for (Index i = 0; i <= j; ++i) k(i, j) = std::pow(x.col(i).dot(x.col(j)) + spec.offset, spec.degree);
      break;
    case KernelType::Rbf: {
      const double sigma = spec.sigma ? *spec.sigma : median_distance(features);
      require(sigma > 0.0 && std::isfinite(sigma), ErrorKind::BadParam, "rbf sigma must be > 0");
      const double scale = 1.0 / (2.0 * sigma * sigma);
      for (Index j = 0; j < n; ++j) {
        k(j, j) = 1.0;
        for (Index i = 0; i < j; ++i) k(i, j) = std::exp(-detail::squared_distance(x, i, j) * scale);
      }
      break;
    }
  }
  detail::mirror_upper(k);
  require(k.allFinite(), ErrorKind::NonFinite, "kernel of view '" + features.view_name + "' overflowed");
  return out;
}

inline KernelMatrix normalize_kernel(const KernelMatrix& in, Normalization mode) {
  KernelMatrix out = in;
  Matrix& k = out.data;
  const Index n = k.rows();
  switch (mode) {
    case Normalization::None:
      break;
    case Normalization::Cosine: {
      const Vector diag = in.data.diagonal();
      for (Index i = 0; i < n; ++i)
        require(diag(i) > 0.0, ErrorKind::ZeroDiagonal,
                "cosine normalization of view '" + in.view_name + "' needs a positive diagonal");
      for (Index j = 0; j < n; ++j) {
        k(j, j) = 1.0;
        for (Index i = 0; i < j; ++i) k(i, j) = in.data(i, j) / std::sqrt(diag(i) * diag(j));
      }
      detail::mirror_upper(k);
      break;
    }
    case Normalization::Center: {
      const Vector row_mean = in.data.rowwise().mean();
      const Vector col_mean = in.data.colwise().mean().transpose();
      const double grand = in.data.mean();
      for (Index j = 0; j < n; ++j)
        for (Index i = 0; i <= j; ++i) k(i, j) = in.data(i, j) - row_mean(i) - col_mean(j) + grand;
      detail::mirror_upper(k);
      break;
    }
  }
  return out;
}

struct ViewReport {
  std::string view_name;
  double asymmetry = 0.0;       // max |K_ij - K_ji| before repair
  double min_eigenvalue = 0.0;  // power-iteration estimate
  std::size_t nonfinite_count = 0;
  bool symmetrized = false;
  bool indefinite = false;
};

struct ValidationReport {
  std::vector<ViewReport> views;

  bool clean() const {
    return std::all_of(views.begin(), views.end(), [](const ViewReport& v) {
      return v.asymmetry == 0.0 && v.nonfinite_count == 0 && !v.indefinite;
    });
  }
  bool usable() const {
    return std::all_of(views.begin(), views.end(), [](const ViewReport& v) { return v.nonfinite_count == 0; });
  }
};

inline constexpr double kSymmetryTolerance = 1e-8;

/// Estimate of the smallest eigenvalue of a symmetric matrix: power iteration
/// on (rho I - K), where rho bounds the spectrum via Gershgorin.
inline double estimate_min_eigenvalue(const Matrix& k, int max_iters = 500, double tol = 1e-10) {
  const Index n = k.rows();
  if (n == 0) return 0.0;
  const double rho = k.cwiseAbs().rowwise().sum().maxCoeff();
  if (rho == 0.0) return 0.0;
  Vector x(n);
  for (Index i = 0; i < n; ++i) x(i) = 1.0 + 0.01 * static_cast<double>(i % 7);
  x.normalize();
  double mu = 0.0;
  for (int it = 0; it < max_iters; ++it) {
    Vector y = rho * x - k * x;
    const double next = x.dot(y);
    const double norm = y.norm();
    if (norm == 0.0) break;
    x = y / norm;
    if (it > 0 && std::abs(next - mu) <= tol * rho) {
      mu = next;
      break;
    }
    mu = next;
  }
  return rho - mu;
}

/// Checks shape agreement, symmetry and finiteness of every view. Views with
/// asymmetry within tolerance are replaced by (K + K^T)/2; larger asymmetry is
/// rejected. Indefinite kernels are flagged but accepted.
inline ValidationReport validate_kernel_set(KernelSet& ks) {
  require(ks.views() >= 1, ErrorKind::BadParam, "kernel set has no views");
  std::set<std::string> names;
  const Index n = ks.kernels.front().data.rows();
  ValidationReport report;
  for (auto& kv : ks.kernels) {
    Matrix& k = kv.data;
    require(k.rows() == k.cols(), ErrorKind::DimensionMismatch, "kernel '" + kv.view_name + "' is not square");
    require(k.rows() == n, ErrorKind::DimensionMismatch,
            "kernel '" + kv.view_name + "' has n=" + std::to_string(k.rows()) + ", expected " + std::to_string(n));
    require(names.insert(kv.view_name).second, ErrorKind::BadParam, "duplicate view name '" + kv.view_name + "'");

    ViewReport vr;
    vr.view_name = kv.view_name;
    for (Index j = 0; j < n; ++j)
      for (Index i = 0; i < n; ++i)
        if (!std::isfinite(k(i, j))) ++vr.nonfinite_count;
    if (vr.nonfinite_count > 0) {
      report.views.push_back(vr);
      continue;
    }
    vr.asymmetry = (k - k.transpose()).cwiseAbs().maxCoeff();
    const double scale = std::max(1.0, k.cwiseAbs().maxCoeff());
    require(vr.asymmetry <= kSymmetryTolerance * scale, ErrorKind::AsymmetricKernel,
            "kernel '" + kv.view_name + "' asymmetry " + std::to_string(vr.asymmetry) + " exceeds tolerance");
    if (vr.asymmetry > 0.0) {
      Matrix sym = 0.5 * (k + k.transpose());
      k = std::move(sym);
      vr.symmetrized = true;
    }
    vr.min_eigenvalue = estimate_min_eigenvalue(k);
    vr.indefinite = vr.min_eigenvalue < -1e-8 * scale;
    report.views.push_back(vr);
  }
  return report;
}

}  // namespace mvkmf
