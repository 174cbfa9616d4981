#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "gcp/io.hpp"
#include "gcp/kruskal.hpp"
#include "gcp/optimizer.hpp"
#include "gcp/rng.hpp"
#include "gcp/shape.hpp"
#include "gcp/tensor.hpp"
#include "oracles.hpp"

using gcp::DenseTensor;
using gcp::KruskalModel;
using gcp::MultiIndex;
using gcp::RngStream;
using gcp::Shape;
using gcp::SparseTensor;

namespace {

class TempDir {
public:
  TempDir() {
    root_ = std::filesystem::temp_directory_path() /
            ("gcp_io_test_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter_++));
    std::filesystem::create_directories(root_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(root_, ec);
  }
  std::string path(const std::string& name) const { return (root_ / name).string(); }

private:
  static int counter_;
  std::filesystem::path root_;
};

int TempDir::counter_ = 0;

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

}  // namespace

TEST_CASE("coordinate text files parse indices 1-based") {
  TempDir dir;
  const std::string path = dir.path("a.tns");
  write_text(path, "#shape: 2 2 2\n1 1 1 5.0\n");
  const SparseTensor x = gcp::read_tns(path);
  CHECK(x.shape() == Shape({2, 2, 2}));
  REQUIRE(x.nnz() == 1);
  CHECK(x.lookup(MultiIndex{0, 0, 0}) == 5.0);
}

TEST_CASE("comments and blank lines are skipped; duplicates accumulate") {
  TempDir dir;
  const std::string path = dir.path("b.tns");
  write_text(path,
             "# a comment\n"
             "#shape: 3 2\n"
             "\n"
             "2 1 1.5\n"
             "  # indented comment\n"
             "2 1 2.5\n"
             "3 2 -1.0\n");
  const SparseTensor x = gcp::read_tns(path);
  CHECK(x.shape() == Shape({3, 2}));
  CHECK(x.nnz() == 2);
  CHECK(x.lookup(MultiIndex{1, 0}) == 4.0);
  CHECK(x.lookup(MultiIndex{2, 1}) == -1.0);
}

TEST_CASE("without a header the shape is the per-mode maxima") {
  TempDir dir;
  const std::string path = dir.path("c.tns");
  write_text(path, "1 1 1 1.0\n4 2 1 2.0\n2 5 3 3.0\n");
  const SparseTensor x = gcp::read_tns(path);
  CHECK(x.shape() == Shape({4, 5, 3}));
  CHECK(x.nnz() == 3);
}

TEST_CASE("sparse round trips are bit exact and keep empty tensors") {
  TempDir dir;
  RngStream rng(5);
  const SparseTensor x = oracles::random_sparse(
      Shape({7, 6, 5}), 0.2,
      [](RngStream& r) { return (r.next_double() - 0.5) * 1e7 / 3.0; }, rng);
  const std::string path = dir.path("d.tns");
  gcp::write_tns(x, path);
  const SparseTensor back = gcp::read_tns(path);
  CHECK(back.shape() == x.shape());
  REQUIRE(back.nnz() == x.nnz());
  for (std::int64_t e = 0; e < x.nnz(); ++e) {
    CHECK(back.value(e) == x.value(e));
    CHECK(gcp::linear_index(back.index(e), x.shape()) ==
          gcp::linear_index(x.index(e), x.shape()));
  }

  const SparseTensor empty(Shape({4, 4}), {}, {});
  const std::string epath = dir.path("empty.tns");
  gcp::write_tns(empty, epath);
  const SparseTensor eback = gcp::read_tns(epath);
  CHECK(eback.shape() == Shape({4, 4}));
  CHECK(eback.nnz() == 0);
}

TEST_CASE("coordinate text failure modes carry path and line context") {
  TempDir dir;
  SUBCASE("malformed value") {
    const std::string path = dir.path("bad1.tns");
    write_text(path, "#shape: 2 2\n1 1 1.0\n1 two 2.0\n");
    CHECK_THROWS_WITH_AS(gcp::read_tns(path), doctest::Contains(":3"), std::runtime_error);
  }
  SUBCASE("wrong token count") {
    const std::string path = dir.path("bad2.tns");
    write_text(path, "#shape: 2 2\n1 1 1 1.0\n");
    CHECK_THROWS_AS(gcp::read_tns(path), std::runtime_error);
  }
  SUBCASE("zero index") {
    const std::string path = dir.path("bad3.tns");
    write_text(path, "#shape: 2 2\n0 1 1.0\n");
    CHECK_THROWS_AS(gcp::read_tns(path), std::runtime_error);
  }
  SUBCASE("index above the declared shape") {
    const std::string path = dir.path("bad4.tns");
    write_text(path, "#shape: 2 2\n3 1 1.0\n");
    CHECK_THROWS_WITH_AS(gcp::read_tns(path), doctest::Contains("mode 1"),
                         std::runtime_error);
  }
  SUBCASE("no header and no entries leaves the shape unknown") {
    const std::string path = dir.path("bad5.tns");
    write_text(path, "# nothing\n");
    CHECK_THROWS_AS(gcp::read_tns(path), std::runtime_error);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(gcp::read_tns(dir.path("nope.tns")), std::runtime_error);
  }
}

TEST_CASE("model files round trip every bit") {
  TempDir dir;
  RngStream rng(7);
  const KruskalModel model =
      oracles::random_model(Shape({5, 4, 3}), 3, rng, -1e3, 1e3);
  const std::string path = dir.path("model.txt");
  gcp::write_model(model, path);
  const KruskalModel back = gcp::read_model(path);
  CHECK(back.shape() == model.shape());
  CHECK(back.rank() == model.rank());
  for (int k = 0; k < 3; ++k) {
    CHECK((back.factor(k) - model.factor(k)).norm() == 0.0);
  }
}

TEST_CASE("model file failure modes") {
  TempDir dir;
  SUBCASE("truncated rows") {
    const std::string path = dir.path("m1.txt");
    write_text(path, "2 2\n2 2\n1.0 2.0\n");
    CHECK_THROWS_AS(gcp::read_model(path), std::runtime_error);
  }
  SUBCASE("bad header") {
    const std::string path = dir.path("m2.txt");
    write_text(path, "0 2\n\n");
    CHECK_THROWS_AS(gcp::read_model(path), std::runtime_error);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(gcp::read_model(dir.path("nope.txt")), std::runtime_error);
  }
}

TEST_CASE("dense binary files round trip bitwise with a shape sidecar") {
  TempDir dir;
  RngStream rng(11);
  const Shape shape({4, 3, 2});
  DenseTensor x(shape);
  oracles::for_each_index(shape, [&](const MultiIndex& idx) {
    x.at(idx) = (rng.next_double() - 0.5) * 1e9 / 7.0;
  });
  const std::string path = dir.path("dense.bin");
  gcp::write_dense(x, path);
  CHECK(std::filesystem::exists(path + ".shape"));
  const DenseTensor back = gcp::read_dense(path);
  CHECK(back.shape() == shape);
  bool equal = true;
  oracles::for_each_index(shape, [&](const MultiIndex& idx) {
    if (back.at(idx) != x.at(idx)) equal = false;
  });
  CHECK(equal);
}

TEST_CASE("dense binary failure modes") {
  TempDir dir;
  RngStream rng(13);
  const Shape shape({2, 2});
  DenseTensor x(shape);
  const std::string path = dir.path("dense.bin");
  gcp::write_dense(x, path);

  SUBCASE("payload shorter than the sidecar promises") {
    std::filesystem::resize_file(path, 3 * sizeof(double));
    CHECK_THROWS_AS(gcp::read_dense(path), std::runtime_error);
  }
  SUBCASE("payload longer than the sidecar promises") {
    std::ofstream app(path, std::ios::binary | std::ios::app);
    const double extra = 0.0;
    app.write(reinterpret_cast<const char*>(&extra), sizeof(extra));
    app.close();
    CHECK_THROWS_AS(gcp::read_dense(path), std::runtime_error);
  }
  SUBCASE("missing sidecar") {
    std::filesystem::remove(path + ".shape");
    CHECK_THROWS_AS(gcp::read_dense(path), std::runtime_error);
  }
  SUBCASE("missing payload") {
    std::filesystem::remove(path);
    CHECK_THROWS_AS(gcp::read_dense(path), std::runtime_error);
  }
}

TEST_CASE("trace files carry the five fit columns") {
  TempDir dir;
  gcp::FitTrace trace;
  trace.records.push_back({0, 12.5, 0.01, 0.25, true});
  trace.records.push_back({1, 10.0, 0.01, 1.5, true});
  trace.records.push_back({2, 11.0, 0.01, 1.25, false});
  const std::string path = dir.path("trace.csv");
  gcp::write_trace_csv(trace, path);

  std::ifstream in(path);
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line == "epoch,loss_estimate,learning_rate,seconds,accepted");
  REQUIRE(std::getline(in, line));
  CHECK(line.substr(0, 7) == "0,12.5,");
  CHECK(line.back() == '1');
  REQUIRE(std::getline(in, line));
  REQUIRE(std::getline(in, line));
  CHECK(line.substr(0, 5) == "2,11,");
  CHECK(line.back() == '0');
  CHECK_FALSE(std::getline(in, line));
}

TEST_CASE("17 significant digits survive the text round trip") {
  TempDir dir;
  const std::string path = dir.path("pi.tns");
  const SparseTensor x(Shape({1, 1}), {MultiIndex{0, 0}},
                       {3.14159265358979312e+00});
  gcp::write_tns(x, path);
  const SparseTensor back = gcp::read_tns(path);
  CHECK(back.value(0) == 3.14159265358979312e+00);

  const SparseTensor tiny(Shape({1, 1}), {MultiIndex{0, 0}}, {5e-324});
  gcp::write_tns(tiny, dir.path("tiny.tns"));
  CHECK(gcp::read_tns(dir.path("tiny.tns")).value(0) == 5e-324);
}
