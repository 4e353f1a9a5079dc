#include <gtest/gtest.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>

#include "mvkmf/io.hpp"
#include "mvkmf/kmeans.hpp"
#include "mvkmf/metrics.hpp"
#include "oracles.hpp"

using namespace mvkmf;
namespace fs = std::filesystem;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no mvkmf::Error thrown";
  return ErrorKind::NonFinite;
}

void write_raw(const fs::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  out << bytes;
}

bool bitwise_equal(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  return std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

io::DatasetManifest one_view_manifest(const fs::path& dir) {
  io::DatasetManifest m;
  m.name = "tiny";
  m.n = 4;
  m.clusters = 2;
  m.labels = "labels.txt";
  io::ViewSource v;
  v.name = "only";
  v.features = "x.csv";
  v.spec = KernelSpec::rbf(0.5);
  v.normalization = Normalization::Center;
  m.views.push_back(v);
  io::write_labels(dir / "labels.txt", std::vector<int>{0, 0, 1, 1});
  io::write_matrix(dir / "x.csv", Matrix{{0.0, 0.0}, {0.1, 0.0}, {5.0, 5.0}, {5.1, 5.0}}, io::MatrixFormat::Csv);
  return m;
}

}  // namespace

TEST(Mvk1, IdentityLayout) {
  const fs::path dir = oracle::fresh_dir("io_identity");
  io::write_matrix(dir / "i.mvk", Matrix::Identity(2, 2));
  const std::string header = "MVK1 2 2\n";
  EXPECT_EQ(fs::file_size(dir / "i.mvk"), header.size() + 4 * 8);
  std::ifstream in(dir / "i.mvk", std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  EXPECT_EQ(bytes.substr(0, header.size()), header);
  // Row-major little-endian binary64: 1.0 first, then three more values.
  const unsigned char one_le[8] = {0, 0, 0, 0, 0, 0, 0xf0, 0x3f};
  EXPECT_EQ(std::memcmp(bytes.data() + header.size(), one_le, 8), 0);
  EXPECT_EQ(std::memcmp(bytes.data() + header.size() + 24, one_le, 8), 0);
  EXPECT_EQ(io::read_matrix(dir / "i.mvk"), Matrix::Identity(2, 2));
}

TEST(Mvk1, RowMajorOrder) {
  const fs::path dir = oracle::fresh_dir("io_rowmajor");
  io::write_matrix(dir / "m.mvk", Matrix{{1.0, 2.0, 3.0}, {4.0, 5.0, 6.0}});
  const std::string bytes = io::encode_mvk1(Matrix{{1.0, 2.0, 3.0}, {4.0, 5.0, 6.0}});
  double second = 0.0;
  std::memcpy(&second, bytes.data() + std::string("MVK1 2 3\n").size() + 8, 8);
  if constexpr (std::endian::native == std::endian::little) EXPECT_EQ(second, 2.0);
  EXPECT_EQ(io::matrix_shape(dir / "m.mvk"), (std::pair<Index, Index>{2, 3}));
}

TEST(Mvk1, BitExactRoundTrip) {
  const fs::path dir = oracle::fresh_dir("io_bits");
  std::mt19937_64 rng(1);
  Matrix m = oracle::random_matrix(7, 5, rng);
  m(0, 0) = -0.0;
  m(0, 1) = 0.0;
  m(1, 0) = std::numeric_limits<double>::denorm_min();
  m(1, 1) = -std::numeric_limits<double>::max();
  m(2, 0) = 1e-300;
  m(2, 1) = 0.1;
  io::write_matrix(dir / "m.mvk", m);
  const Matrix back = io::read_matrix(dir / "m.mvk");
  EXPECT_TRUE(bitwise_equal(m, back));
  EXPECT_TRUE(std::signbit(back(0, 0)));
  EXPECT_FALSE(std::signbit(back(0, 1)));
}

TEST(Mvk1, Errors) {
  const fs::path dir = oracle::fresh_dir("io_errors");
  write_raw(dir / "empty.mvk", "");
  EXPECT_EQ(kind_of([&] { io::read_matrix(dir / "empty.mvk"); }), ErrorKind::CorruptHeader);
  write_raw(dir / "hdr.mvk", "MVK1 two 2\n");
  EXPECT_EQ(kind_of([&] { io::read_matrix(dir / "hdr.mvk"); }), ErrorKind::CorruptHeader);
  std::string bytes = io::encode_mvk1(Matrix::Identity(3, 3));
  write_raw(dir / "short.mvk", bytes.substr(0, bytes.size() - 3));
  EXPECT_EQ(kind_of([&] { io::read_matrix(dir / "short.mvk"); }), ErrorKind::TruncatedData);
  write_raw(dir / "long.mvk", bytes + "x");
  EXPECT_EQ(kind_of([&] { io::read_matrix(dir / "long.mvk"); }), ErrorKind::TruncatedData);
  EXPECT_EQ(kind_of([&] { io::read_matrix(dir / "absent.mvk"); }), ErrorKind::MissingFile);
}

TEST(Csv, RoundTripAndErrors) {
  const fs::path dir = oracle::fresh_dir("io_csv");
  std::mt19937_64 rng(2);
  const Matrix m = oracle::random_matrix(6, 4, rng) * 1e3;
  io::write_matrix(dir / "m.csv", m, io::MatrixFormat::Csv);
  const Matrix back = io::read_matrix(dir / "m.csv");
  ASSERT_EQ(back.rows(), 6);
  ASSERT_EQ(back.cols(), 4);
  for (Index i = 0; i < m.size(); ++i)
    EXPECT_LE(std::abs(back.data()[i] - m.data()[i]), 1e-15 * std::abs(m.data()[i]));

  write_raw(dir / "ragged.csv", "1,2,3\n4,5\n");
  EXPECT_EQ(kind_of([&] { io::read_matrix(dir / "ragged.csv"); }), ErrorKind::TruncatedData);
  write_raw(dir / "word.csv", "1,2\n3,abc\n");
  EXPECT_EQ(kind_of([&] { io::read_matrix(dir / "word.csv"); }), ErrorKind::ParseError);
  write_raw(dir / "spaced.csv", " 1 , 2\n3,4 \n\n");
  EXPECT_EQ(io::read_matrix(dir / "spaced.csv"), (Matrix{{1.0, 2.0}, {3.0, 4.0}}));
}

TEST(Labels, RoundTrip) {
  const fs::path dir = oracle::fresh_dir("io_labels");
  const std::vector<int> l{0, 2, 1, 1, 0};
  io::write_labels(dir / "l.txt", l);
  EXPECT_EQ(io::read_labels(dir / "l.txt"), l);
}

TEST(Manifest, RoundTrip) {
  const fs::path dir = oracle::fresh_dir("io_manifest");
  const auto m = one_view_manifest(dir);
  io::save_manifest(dir / "manifest.json", m);
  const auto a = io::load_manifest(dir / "manifest.json");
  EXPECT_EQ(a, m);
  io::save_manifest(dir / "again.json", a);
  EXPECT_EQ(io::load_manifest(dir / "again.json"), a);
  const KernelSet ks = io::load_kernel_set(a);
  ASSERT_EQ(ks.views(), 1u);
  EXPECT_EQ(ks.n(), 4);
}

TEST(Manifest, InvariantViolations) {
  const fs::path dir = oracle::fresh_dir("io_manifest_bad");
  const auto good = one_view_manifest(dir);
  auto check = [&](io::DatasetManifest m, ErrorKind expected) {
    io::save_manifest(dir / "m.json", m);
    EXPECT_EQ(kind_of([&] { io::load_manifest(dir / "m.json"); }), expected);
  };
  auto m = good;
  m.clusters = 1;
  check(m, ErrorKind::ParseError);
  m = good;
  m.views.clear();
  check(m, ErrorKind::ParseError);
  m = good;
  m.views.push_back(m.views[0]);
  check(m, ErrorKind::ParseError);
  m = good;
  m.clusters = 5;
  check(m, ErrorKind::ParseError);
  m = good;
  m.views[0].features = "nope.csv";
  check(m, ErrorKind::MissingFile);
  m = good;
  m.n = 5;
  check(m, ErrorKind::DimensionMismatch);

  write_raw(dir / "junk.json", "{ not json");
  EXPECT_EQ(kind_of([&] { io::load_manifest(dir / "junk.json"); }), ErrorKind::ParseError);
  write_raw(dir / "both.json",
            R"({"name":"x","n":4,"clusters":2,"labels":"labels.txt","views":[{"name":"a","features":"x.csv","kernel_file":"k.mvk"}]})");
  EXPECT_EQ(kind_of([&] { io::load_manifest(dir / "both.json"); }), ErrorKind::ParseError);
  EXPECT_EQ(kind_of([&] { io::load_manifest(dir / "missing.json"); }), ErrorKind::MissingFile);
}

TEST(Manifest, KernelAndLabelLengthDisagree) {
  const fs::path dir = oracle::fresh_dir("io_manifest_len");
  io::write_matrix(dir / "k.mvk", Matrix::Identity(100, 100));
  io::write_labels(dir / "labels.txt", std::vector<int>(99, 0));
  io::DatasetManifest m;
  m.name = "mismatch";
  m.n = 100;
  m.clusters = 2;
  m.labels = "labels.txt";
  io::ViewSource v;
  v.name = "k";
  v.kernel = "k.mvk";
  m.views.push_back(v);
  io::save_manifest(dir / "manifest.json", m);
  EXPECT_EQ(kind_of([&] { io::load_manifest(dir / "manifest.json"); }), ErrorKind::DimensionMismatch);
  m.n = 99;
  io::save_manifest(dir / "manifest.json", m);
  EXPECT_EQ(kind_of([&] { io::load_manifest(dir / "manifest.json"); }), ErrorKind::DimensionMismatch);
}

TEST(Synthetic, DeterministicPerSeed) {
  const auto a = io::make_synthetic(10, 3, 2, 5.0, 1.0, 77);
  const auto b = io::make_synthetic(10, 3, 2, 5.0, 1.0, 77);
  const auto c = io::make_synthetic(10, 3, 2, 5.0, 1.0, 78);
  ASSERT_EQ(a.views.size(), 2u);
  for (std::size_t v = 0; v < 2; ++v) EXPECT_TRUE(bitwise_equal(a.views[v].data, b.views[v].data));
  EXPECT_FALSE(bitwise_equal(a.views[0].data, c.views[0].data));
  EXPECT_EQ(a.labels, b.labels);
}

TEST(Synthetic, SmallestCase) {
  const auto d = io::make_synthetic(1, 2, 1, 1.0, 1.0, 0);
  EXPECT_EQ(d.labels, (std::vector<int>{0, 1}));
  EXPECT_EQ(d.views[0].data.cols(), 2);
}

TEST(Synthetic, CenterDistanceMatchesSeparation) {
  // Noise-free blobs collapse onto their centers.
  const auto d = io::make_synthetic(3, 4, 2, 7.0, 0.0, 5);
  for (const auto& view : d.views)
    for (Index a = 0; a < 4; ++a)
      for (Index b = a + 1; b < 4; ++b) EXPECT_NEAR((view.data.col(a * 3) - view.data.col(b * 3)).norm(), 7.0, 1e-12);
}

TEST(Synthetic, SeparatedBlobsAreRecoverable) {
  const auto d = io::make_synthetic(25, 4, 3, 100.0, 1.0, 11);
  for (const auto& view : d.views) {
    EXPECT_EQ(oracle::nearest_centroid(view.data, d.labels, 4), d.labels);
    KMeansConfig kc;
    kc.k = 4;
    EXPECT_EQ(accuracy(d.labels, kmeans(view.data, kc).labels), 1.0);
  }
}

TEST(Records, AppendAndRead) {
  const fs::path dir = oracle::fresh_dir("io_records");
  io::RunRecord r{"d", "umklmf", 128.0, 3, {1.0, 0.9, 0.95, 0.8}, 12, 0.25, -3.5};
  io::append_record(dir / "records.jsonl", r);
  r.wall_time_seconds = 0.5;
  io::append_record(dir / "records.jsonl", r);
  const auto rs = io::read_records(dir / "records.jsonl");
  ASSERT_EQ(rs.size(), 2u);
  auto strip = [](io::RunRecord x) {
    x.wall_time_seconds = 0.0;
    return io::record_to_json(x);
  };
  EXPECT_EQ(strip(rs[0]), strip(rs[1]));
  EXPECT_EQ(rs[0].metrics.nmi, 0.9);
  EXPECT_EQ(rs[1].wall_time_seconds, 0.5);
}

TEST(ResultsTable, ParseWithMissingCells) {
  const fs::path dir = oracle::fresh_dir("io_table");
  write_raw(dir / "t.csv", "dataset,a,b,c\nd1,0.5,0.25,-\nd2,1,0,0.75\n");
  const auto rt = io::read_results_table(dir / "t.csv");
  EXPECT_EQ(rt.algorithm_names, (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_EQ(rt.dataset_names, (std::vector<std::string>{"d1", "d2"}));
  EXPECT_TRUE(rt.missing(0, 2));
  EXPECT_FALSE(rt.missing(1, 2));
  EXPECT_EQ(rt.scores(1, 2), 0.75);
  io::write_results_table(dir / "u.csv", rt);
  const auto back = io::read_results_table(dir / "u.csv");
  EXPECT_EQ(back.missing, rt.missing);
  EXPECT_EQ(back.scores(0, 1), 0.25);
  write_raw(dir / "bad.csv", "dataset,a,b\nd1,0.5\n");
  EXPECT_EQ(kind_of([&] { io::read_results_table(dir / "bad.csv"); }), ErrorKind::ParseError);
}
