#pragma once

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mvkmf/error.hpp"
#include "mvkmf/kernels.hpp"
#include "mvkmf/linalg.hpp"
#include "mvkmf/metrics.hpp"
#include "mvkmf/stats.hpp"

namespace mvkmf::io {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Matrix files
//
// MVK1: ASCII line "MVK1 <rows> <cols>\n" followed by rows*cols little-endian
// binary64 values in row-major order. Anything not starting with the magic is
// read as CSV (one matrix row per line).
// ---------------------------------------------------------------------------

enum class MatrixFormat { Mvk1, Csv };

inline constexpr std::string_view kMagic = "MVK1";

namespace detail {

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::MissingFile, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::uint64_t to_little(std::uint64_t bits) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t out = 0;
    for (int i = 0; i < 8; ++i) out |= ((bits >> (8 * i)) & 0xffu) << (8 * (7 - i));
    return out;
  }
  return bits;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> out;
  for (auto line : split(text, '\n')) {
    line = trim(line);
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

inline Matrix parse_mvk1(const std::string& bytes, const std::string& origin) {
  const auto eol = bytes.find('\n');
  require(eol != std::string::npos && eol < 64, ErrorKind::CorruptHeader, origin + ": missing MVK1 header line");
  std::istringstream header(bytes.substr(0, eol));
  std::string magic;
  long long rows = -1, cols = -1;
  header >> magic >> rows >> cols;
  require(magic == kMagic && !header.fail() && rows >= 0 && cols >= 0, ErrorKind::CorruptHeader,
          origin + ": malformed MVK1 header");
  std::string rest;
  header >> rest;
  require(rest.empty(), ErrorKind::CorruptHeader, origin + ": trailing tokens in MVK1 header");
  const std::size_t count = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  const std::size_t payload = bytes.size() - eol - 1;
  require(payload == count * 8, ErrorKind::TruncatedData,
          origin + ": expected " + std::to_string(count * 8) + " payload bytes, found " + std::to_string(payload));
  Matrix m(rows, cols);
  const char* p = bytes.data() + eol + 1;
  for (long long i = 0; i < rows; ++i)
    for (long long j = 0; j < cols; ++j) {
      std::uint64_t bits = 0;
      std::memcpy(&bits, p, 8);
      p += 8;
      m(i, j) = std::bit_cast<double>(to_little(bits));
    }
  return m;
}

inline Matrix parse_csv(const std::string& text, const std::string& origin) {
  const auto lines = lines_of(text);
  require(!lines.empty(), ErrorKind::CorruptHeader, origin + ": empty matrix file");
  std::vector<std::vector<double>> rows;
  for (std::size_t r = 0; r < lines.size(); ++r) {
    std::vector<double> row;
    for (auto cell : split(lines[r], ',')) {
      auto v = parse_double(cell);
      require(v.has_value(), ErrorKind::ParseError,
              origin + ": bad number '" + std::string(trim(cell)) + "' on line " + std::to_string(r + 1));
      row.push_back(*v);
    }
    if (!rows.empty())
      require(row.size() == rows.front().size(), ErrorKind::TruncatedData,
              origin + ": ragged CSV row " + std::to_string(r + 1));
    rows.push_back(std::move(row));
  }
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return m;
}

}  // namespace detail

inline MatrixFormat detect_format(std::string_view bytes) {
  return bytes.substr(0, kMagic.size()) == kMagic ? MatrixFormat::Mvk1 : MatrixFormat::Csv;
}

inline Matrix read_matrix(const fs::path& path) {
  require(fs::exists(path), ErrorKind::MissingFile, "no such file '" + path.string() + "'");
  const std::string bytes = detail::read_file(path);
  require(!bytes.empty(), ErrorKind::CorruptHeader, path.string() + ": empty file");
  return detect_format(bytes) == MatrixFormat::Mvk1 ? detail::parse_mvk1(bytes, path.string())
                                                    : detail::parse_csv(bytes, path.string());
}

inline std::string encode_mvk1(const Matrix& m) {
  std::string out = std::string(kMagic) + " " + std::to_string(m.rows()) + " " + std::to_string(m.cols()) + "\n";
  const std::size_t header = out.size();
  out.resize(header + static_cast<std::size_t>(m.size()) * 8);
  char* p = out.data() + header;
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) {
      const std::uint64_t bits = detail::to_little(std::bit_cast<std::uint64_t>(m(i, j)));
      std::memcpy(p, &bits, 8);
      p += 8;
    }
  return out;
}

inline std::string encode_csv(const Matrix& m) {
  std::ostringstream ss;
  ss << std::setprecision(17);
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) ss << (j ? "," : "") << m(i, j);
    ss << '\n';
  }
  return ss.str();
}

inline void write_text(const fs::path& path, const std::string& bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorKind::MissingFile, "cannot write '" + path.string() + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline void write_matrix(const fs::path& path, const Matrix& m, MatrixFormat format = MatrixFormat::Mvk1) {
  write_text(path, format == MatrixFormat::Mvk1 ? encode_mvk1(m) : encode_csv(m));
}

// Dimensions without materialising the payload when the file is MVK1.
inline std::pair<Index, Index> matrix_shape(const fs::path& path) {
  require(fs::exists(path), ErrorKind::MissingFile, "no such file '" + path.string() + "'");
  std::ifstream in(path, std::ios::binary);
  std::string first;
  std::getline(in, first);
  if (detect_format(first) != MatrixFormat::Mvk1) {
    const Matrix m = read_matrix(path);
    return {m.rows(), m.cols()};
  }
  std::istringstream header(first);
  std::string magic;
  long long rows = -1, cols = -1;
  header >> magic >> rows >> cols;
  require(!header.fail() && rows >= 0 && cols >= 0, ErrorKind::CorruptHeader, path.string() + ": malformed MVK1 header");
  return {static_cast<Index>(rows), static_cast<Index>(cols)};
}

// ---------------------------------------------------------------------------
// Labels: one 0-based integer per line.
// ---------------------------------------------------------------------------

inline std::vector<int> read_labels(const fs::path& path) {
  const std::string text = detail::read_file(path);
  std::vector<int> labels;
  for (auto line : detail::lines_of(text)) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), v);
    require(ec == std::errc() && ptr == line.data() + line.size(), ErrorKind::ParseError,
            path.string() + ": bad label '" + std::string(line) + "'");
    labels.push_back(v);
  }
  return labels;
}

inline void write_labels(const fs::path& path, std::span<const int> labels) {
  std::string out;
  for (int l : labels) out += std::to_string(l) + "\n";
  write_text(path, out);
}

inline void write_vector_csv(const fs::path& path, const std::vector<double>& values) {
  std::ostringstream ss;
  ss << std::setprecision(17);
  for (double v : values) ss << v << '\n';
  write_text(path, ss.str());
}

// ---------------------------------------------------------------------------
// Dataset manifests
// ---------------------------------------------------------------------------

struct ViewSource {
  std::string name;
  std::optional<std::string> features;  // samples x features matrix file
  std::optional<std::string> kernel;    // precomputed n x n kernel file
  KernelSpec spec;                      // used with features only
  Normalization normalization = Normalization::None;

  bool operator==(const ViewSource& o) const {
    return name == o.name && features == o.features && kernel == o.kernel && spec.type == o.spec.type &&
           spec.sigma == o.spec.sigma && spec.offset == o.spec.offset && spec.degree == o.spec.degree &&
           normalization == o.normalization;
  }
};

struct DatasetManifest {
  std::string name;
  Index n = 0;
  Index clusters = 0;
  std::vector<ViewSource> views;
  std::string labels;  // path relative to the manifest directory
  fs::path base_dir;   // directory holding the manifest; not serialised

  fs::path resolve(const std::string& rel) const {
    const fs::path p(rel);
    return p.is_absolute() ? p : base_dir / p;
  }

  bool operator==(const DatasetManifest& o) const {
    return name == o.name && n == o.n && clusters == o.clusters && views == o.views && labels == o.labels;
  }
};

inline json manifest_to_json(const DatasetManifest& m) {
  json j;
  j["name"] = m.name;
  j["n"] = m.n;
  j["clusters"] = m.clusters;
  j["labels"] = m.labels;
  j["views"] = json::array();
  for (const auto& v : m.views) {
    json jv;
    jv["name"] = v.name;
    if (v.features) {
      jv["features"] = *v.features;
      json kern;
      kern["type"] = std::string(to_string(v.spec.type));
      if (v.spec.type == KernelType::Rbf && v.spec.sigma) kern["sigma"] = *v.spec.sigma;
      if (v.spec.type == KernelType::Polynomial) {
        kern["offset"] = v.spec.offset;
        kern["degree"] = v.spec.degree;
      }
      jv["kernel"] = kern;
    }
    if (v.kernel) jv["kernel_file"] = *v.kernel;
    jv["normalize"] = std::string(to_string(v.normalization));
    j["views"].push_back(jv);
  }
  return j;
}

namespace detail {

inline DatasetManifest manifest_from_json(const json& j, const std::string& origin) {
  auto fail = [&](const std::string& what) { throw Error(ErrorKind::ParseError, origin + ": " + what); };
  if (!j.is_object()) fail("manifest must be a JSON object");
  DatasetManifest m;
  try {
    m.name = j.at("name").get<std::string>();
    m.n = j.at("n").get<Index>();
    m.clusters = j.at("clusters").get<Index>();
    m.labels = j.at("labels").get<std::string>();
    for (const auto& jv : j.at("views")) {
      ViewSource v;
      v.name = jv.at("name").get<std::string>();
      if (jv.contains("features")) v.features = jv["features"].get<std::string>();
      if (jv.contains("kernel_file")) v.kernel = jv["kernel_file"].get<std::string>();
      if (v.features.has_value() == v.kernel.has_value())
        fail("view '" + v.name + "' needs exactly one of 'features' or 'kernel_file'");
      if (v.features) {
        const json kern = jv.value("kernel", json{{"type", "rbf"}});
        const auto type = parse_kernel_type(kern.value("type", std::string("rbf")));
        if (!type) fail("view '" + v.name + "' has an unknown kernel type");
        v.spec.type = *type;
        if (kern.contains("sigma") && !kern["sigma"].is_null()) v.spec.sigma = kern["sigma"].get<double>();
        v.spec.offset = kern.value("offset", v.spec.type == KernelType::Polynomial ? 1.0 : 0.0);
        v.spec.degree = kern.value("degree", v.spec.type == KernelType::Polynomial ? 2 : 1);
        if (v.spec.sigma && *v.spec.sigma <= 0.0) fail("view '" + v.name + "' has sigma <= 0");
        if (v.spec.degree < 1) fail("view '" + v.name + "' has degree < 1");
      }
      const auto norm = parse_normalization(jv.value("normalize", std::string("none")));
      if (!norm) fail("view '" + v.name + "' has an unknown normalization");
      v.normalization = *norm;
      m.views.push_back(std::move(v));
    }
  } catch (const json::exception& e) {
    fail(e.what());
  }
  if (m.clusters < 2) fail("clusters must be >= 2");
  if (m.n < 2) fail("n must be >= 2");
  if (m.clusters > m.n) fail("clusters must not exceed n");
  if (m.views.empty()) fail("at least one view is required");
  std::set<std::string> names;
  for (const auto& v : m.views)
    if (!names.insert(v.name).second) fail("duplicate view name '" + v.name + "'");
  return m;
}

}  // namespace detail

/// Parses and validates a manifest, checking that referenced files exist and
/// agree with the declared sample count.
inline DatasetManifest load_manifest(const fs::path& path) {
  require(fs::exists(path), ErrorKind::MissingFile, "no manifest at '" + path.string() + "'");
  json j;
  try {
    j = json::parse(detail::read_file(path));
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::ParseError, path.string() + ": " + e.what());
  }
  DatasetManifest m = detail::manifest_from_json(j, path.string());
  m.base_dir = path.has_parent_path() ? path.parent_path() : fs::path(".");

  const fs::path labels = m.resolve(m.labels);
  require(fs::exists(labels), ErrorKind::MissingFile, "labels file '" + labels.string() + "' not found");
  const auto label_count = static_cast<Index>(read_labels(labels).size());
  require(label_count == m.n, ErrorKind::DimensionMismatch,
          "labels have length " + std::to_string(label_count) + ", manifest n=" + std::to_string(m.n));
  for (const auto& v : m.views) {
    const fs::path file = m.resolve(v.features ? *v.features : *v.kernel);
    require(fs::exists(file), ErrorKind::MissingFile, "view '" + v.name + "' file '" + file.string() + "' not found");
    const auto [rows, cols] = matrix_shape(file);
    if (v.kernel)
      require(rows == m.n && cols == m.n, ErrorKind::DimensionMismatch,
              "kernel of view '" + v.name + "' is " + std::to_string(rows) + "x" + std::to_string(cols) +
                  ", expected " + std::to_string(m.n) + "x" + std::to_string(m.n));
    else
      require(rows == m.n, ErrorKind::DimensionMismatch,
              "features of view '" + v.name + "' have " + std::to_string(rows) + " samples, expected " +
                  std::to_string(m.n));
  }
  return m;
}

inline void save_manifest(const fs::path& path, const DatasetManifest& m) {
  write_text(path, manifest_to_json(m).dump(2) + "\n");
}

inline std::vector<int> load_labels(const DatasetManifest& m) { return read_labels(m.resolve(m.labels)); }

inline KernelMatrix load_view_kernel(const DatasetManifest& m, const ViewSource& v) {
  KernelMatrix k;
  if (v.features) {
    FeatureMatrix f{read_matrix(m.resolve(*v.features)).transpose(), v.name};
    k = build_kernel(f, v.spec);
  } else {
    k = KernelMatrix{read_matrix(m.resolve(*v.kernel)), v.name};
  }
  return normalize_kernel(k, v.normalization);
}

/// Builds or reads every view's kernel, then validates the set.
inline KernelSet load_kernel_set(const DatasetManifest& m, ValidationReport* report = nullptr) {
  KernelSet ks;
  for (const auto& v : m.views) ks.kernels.push_back(load_view_kernel(m, v));
  ValidationReport r = validate_kernel_set(ks);
  require(r.usable(), ErrorKind::NonFinite, "dataset '" + m.name + "' has non-finite kernel entries");
  if (report) *report = std::move(r);
  return ks;
}

// ---------------------------------------------------------------------------
// Synthetic data
// ---------------------------------------------------------------------------

struct SyntheticData {
  std::vector<FeatureMatrix> views;
  std::vector<int> labels;
};

namespace detail {

inline double standard_normal(std::mt19937_64& rng) {
  auto unit = [&] { return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53; };
  const double u1 = unit(), u2 = unit();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

}  // namespace detail

/// Gaussian blobs whose centers sit at mutual distance separation * noise,
/// with an independent random rotation and noise draw per view. Samples are
/// grouped by cluster.
inline SyntheticData make_synthetic(Index n_per_cluster, Index clusters, Index views, double separation,
                                    double noise, std::uint64_t seed) {
  require(n_per_cluster >= 1 && clusters >= 1 && views >= 1, ErrorKind::BadParam, "sizes must be positive");
  require(separation > 0.0 && noise >= 0.0, ErrorKind::BadParam, "separation must be > 0 and noise >= 0");
  const Index dim = clusters + 2;
  const Index n = n_per_cluster * clusters;
  const double scale = noise > 0.0 ? noise : 1.0;
  const double arm = separation * scale / std::sqrt(2.0);

  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 0x5eedu};
  std::mt19937_64 rng(seq);

  SyntheticData out;
  out.labels.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) out.labels[static_cast<std::size_t>(i)] = static_cast<int>(i / n_per_cluster);

  for (Index v = 0; v < views; ++v) {
    Matrix gauss(dim, dim);
    for (Index j = 0; j < dim; ++j)
      for (Index i = 0; i < dim; ++i) gauss(i, j) = detail::standard_normal(rng);
    Eigen::HouseholderQR<Matrix> qr(gauss);
    Matrix rotation = qr.householderQ() * Matrix::Identity(dim, dim);

    Matrix x(dim, n);
    for (Index i = 0; i < n; ++i) {
      Vector p = Vector::Zero(dim);
      p(i / n_per_cluster) = arm;
      for (Index d = 0; d < dim; ++d) p(d) += noise * detail::standard_normal(rng);
      x.col(i) = rotation * p;
    }
    out.views.push_back({std::move(x), "view" + std::to_string(v + 1)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Run records (JSON lines) and results tables
// ---------------------------------------------------------------------------

struct RunRecord {
  std::string dataset;
  std::string algorithm;
  double alpha = 0.0;
  std::uint64_t seed = 0;
  MetricReport metrics;
  int iterations = 0;
  double wall_time_seconds = 0.0;
  double objective_final = 0.0;
};

inline json record_to_json(const RunRecord& r) {
  return json{{"dataset", r.dataset},
              {"algorithm", r.algorithm},
              {"alpha", r.alpha},
              {"seed", r.seed},
              {"metrics", {{"acc", r.metrics.acc}, {"nmi", r.metrics.nmi}, {"purity", r.metrics.purity}, {"ari", r.metrics.ari}}},
              {"iterations", r.iterations},
              {"wall_time_seconds", r.wall_time_seconds},
              {"objective_final", r.objective_final}};
}

inline RunRecord record_from_json(const json& j) {
  try {
    RunRecord r;
    r.dataset = j.at("dataset").get<std::string>();
    r.algorithm = j.at("algorithm").get<std::string>();
    r.alpha = j.at("alpha").get<double>();
    r.seed = j.at("seed").get<std::uint64_t>();
    const auto& m = j.at("metrics");
    r.metrics = {m.at("acc").get<double>(), m.at("nmi").get<double>(), m.at("purity").get<double>(),
                 m.at("ari").get<double>()};
    r.iterations = j.at("iterations").get<int>();
    r.wall_time_seconds = j.at("wall_time_seconds").get<double>();
    r.objective_final = j.at("objective_final").get<double>();
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("run record: ") + e.what());
  }
}

// Appends are serialised through one process-wide writer lock.
inline void append_record(const fs::path& path, const RunRecord& r) {
  static std::mutex writer;
  std::lock_guard lock(writer);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::app);
  require(static_cast<bool>(out), ErrorKind::MissingFile, "cannot append to '" + path.string() + "'");
  out << record_to_json(r).dump() << '\n';
}

inline std::vector<RunRecord> read_records(const fs::path& path) {
  std::vector<RunRecord> out;
  const std::string text = detail::read_file(path);
  for (auto line : detail::lines_of(text)) {
    try {
      out.push_back(record_from_json(json::parse(line)));
    } catch (const json::parse_error& e) {
      throw Error(ErrorKind::ParseError, path.string() + ": " + e.what());
    }
  }
  return out;
}

inline std::string encode_results_table(const ResultsTable& rt) {
  std::ostringstream ss;
  ss << std::setprecision(17) << "dataset";
  for (const auto& a : rt.algorithm_names) ss << ',' << a;
  ss << '\n';
  for (Index r = 0; r < rt.datasets(); ++r) {
    ss << rt.dataset_names[static_cast<std::size_t>(r)];
    for (Index c = 0; c < rt.algorithms(); ++c) {
      ss << ',';
      if (rt.missing.size() > 0 && rt.missing(r, c))
        ss << '-';
      else
        ss << rt.scores(r, c);
    }
    ss << '\n';
  }
  return ss.str();
}

inline void write_results_table(const fs::path& path, const ResultsTable& rt) {
  write_text(path, encode_results_table(rt));
}

/// Header row: a corner cell then algorithm names; each row: dataset name then
/// scores, "-" marking a missing cell.
inline ResultsTable read_results_table(const fs::path& path) {
  const std::string text = detail::read_file(path);
  const auto lines = detail::lines_of(text);
  require(!lines.empty(), ErrorKind::ParseError, path.string() + ": empty results table");
  ResultsTable rt;
  const auto header = detail::split(lines.front(), ',');
  require(header.size() >= 2, ErrorKind::ParseError, path.string() + ": header needs algorithm columns");
  for (std::size_t c = 1; c < header.size(); ++c) rt.algorithm_names.emplace_back(detail::trim(header[c]));
  const Index k = static_cast<Index>(rt.algorithm_names.size());
  const Index n = static_cast<Index>(lines.size()) - 1;
  rt.scores = Matrix::Zero(n, k);
  rt.missing = BoolMatrix::Constant(n, k, false);
  for (Index r = 0; r < n; ++r) {
    const auto cells = detail::split(lines[static_cast<std::size_t>(r + 1)], ',');
    require(static_cast<Index>(cells.size()) == k + 1, ErrorKind::ParseError,
            path.string() + ": row " + std::to_string(r + 2) + " has the wrong number of cells");
    rt.dataset_names.emplace_back(detail::trim(cells[0]));
    for (Index c = 0; c < k; ++c) {
      const auto cell = detail::trim(cells[static_cast<std::size_t>(c + 1)]);
      if (cell == "-") {
        rt.missing(r, c) = true;
        rt.scores(r, c) = std::nan("");
        continue;
      }
      const auto v = detail::parse_double(cell);
      require(v.has_value(), ErrorKind::ParseError, path.string() + ": bad score '" + std::string(cell) + "'");
      rt.scores(r, c) = *v;
    }
  }
  return rt;
}

}  // namespace mvkmf::io
