#include "npmddm/raster.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

using namespace npmddm;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "npmddm_raster_tests";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void dump(const fs::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << bytes;
}

RasterSeries sample_series() {
  std::vector<Grid> imgs;
  for (int m = 0; m < 3; ++m) {
    Grid g(4, 5);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 5; ++j) g(i, j) = 0.25 * (m * 100 + i * 10 + j) + 0.5;
    imgs.push_back(g);
  }
  return RasterSeries(imgs);
}

}  // namespace

TEST_CASE("series construction checks shapes and metadata") {
  CHECK_THROWS_AS(RasterSeries(std::vector<Grid>{}), RasterError);
  CHECK_THROWS_AS(RasterSeries({Grid::Zero(2, 2), Grid::Zero(2, 3)}), RasterError);
  CHECK_THROWS_AS(RasterSeries({Grid::Zero(2, 2)}, {0.0, 1.0}), RasterError);
  CHECK_THROWS_AS(RasterSeries({Grid::Zero(2, 2), Grid::Zero(2, 2)}, {}, {1.0, 1.0}), RasterError);
  CHECK_THROWS_AS(RasterSeries({Grid::Zero(2, 2), Grid::Zero(2, 2)}, {}, {1.0}), RasterError);
  const RasterSeries ok({Grid::Zero(2, 3), Grid::Ones(2, 3)}, {2.0, 0.5}, {0.0, 16.0});
  CHECK(ok.rows() == 2);
  CHECK(ok.cols() == 3);
  CHECK(ok.size() == 2);
  CHECK(ok.spacing().dx == 2.0);
  CHECK(ok.with_images({Grid::Ones(2, 3), Grid::Ones(2, 3)}).timestamps() == ok.timestamps());
  CHECK_THROWS_AS(ok.with_images({Grid::Ones(3, 2), Grid::Ones(3, 2)}), RasterError);
}

TEST_CASE("rts1 round trip") {
  const auto s = sample_series();
  const auto path = scratch("roundtrip.rts1");
  save_series(s, path);
  CHECK(fs::file_size(path) == 16 + 3 * 4 * 5 * 4);
  CHECK(load_series(path, SeriesFormat::Rts1) == s);
}

TEST_CASE("rts1 errors") {
  const auto s = sample_series();
  const auto good = scratch("good.rts1");
  save_series(s, good);
  const std::string bytes = slurp(good);

  const auto bad = scratch("bad.rts1");
  auto expect = [&](const std::string& content, const std::string& fragment) {
    dump(bad, content);
    try {
      (void)load_series(bad, SeriesFormat::Rts1);
      FAIL("expected RasterError");
    } catch (const RasterError& e) {
      CHECK(std::string(e.what()).find(fragment) != std::string::npos);
    }
  };
  expect("XXXX" + bytes.substr(4), "malformed header");
  expect(bytes.substr(0, 10), "malformed header");
  expect(bytes.substr(0, bytes.size() - 3), "truncated payload");
  expect(bytes + "zz", "trailing bytes");

  RasterSeries single({Grid::Ones(2, 2)});
  save_series(single, bad);
  CHECK_THROWS_AS(load_series(bad, SeriesFormat::Rts1), RasterError);
  CHECK_THROWS_AS(load_series(scratch("missing.rts1"), SeriesFormat::Rts1), RasterError);
}

TEST_CASE("ascii matrix directories load in file name order") {
  const fs::path dir = scratch("ascii");
  fs::remove_all(dir);
  fs::create_directories(dir);
  dump(dir / "b.txt", "5 6\n7 8\n");
  dump(dir / "a.txt", "1 2\n3 4\n");
  const auto s = load_series(dir, SeriesFormat::AsciiMatrixDir);
  REQUIRE(s.size() == 2);
  CHECK(s[0](1, 0) == 3.0);
  CHECK(s[1](0, 1) == 6.0);

  dump(dir / "c.txt", "1 2\n3\n");
  CHECK_THROWS_AS(load_series(dir, SeriesFormat::AsciiMatrixDir), RasterError);
  dump(dir / "c.txt", "1 x\n3 4\n");
  CHECK_THROWS_AS(load_series(dir, SeriesFormat::AsciiMatrixDir), RasterError);
  CHECK(parse_series_format("ascii-matrix-dir") == SeriesFormat::AsciiMatrixDir);
  CHECK_THROWS_AS(parse_series_format("geotiff"), RasterError);
}

TEST_CASE("log transform") {
  const auto s = sample_series();
  const auto l = log_transform(s, 1.0);
  CHECK(l[2](3, 4) == Catch::Approx(std::log(s[2](3, 4) + 1.0)));

  Grid g = Grid::Ones(3, 3);
  g(1, 2) = -0.5;
  const RasterSeries neg({Grid::Ones(3, 3), g});
  try {
    (void)log_transform(neg, 0.0);
    FAIL("expected RasterError");
  } catch (const RasterError& e) {
    const std::string what = e.what();
    CHECK(what.find("m=1") != std::string::npos);
    CHECK(what.find("i=1") != std::string::npos);
    CHECK(what.find("j=2") != std::string::npos);
  }
  CHECK_NOTHROW(log_transform(neg, 0.6));

  const RasterSeries e({Grid::Constant(2, 2, std::exp(1.0)), Grid::Ones(2, 2)});
  const auto le = log_transform(e);
  CHECK((le[0].array() - 1.0).abs().maxCoeff() < 1e-15);
  CHECK(le[1].cwiseAbs().maxCoeff() == 0.0);
  const RasterSeries zero({Grid::Ones(2, 2), Grid::Zero(2, 2)});
  CHECK_THROWS_AS(log_transform(zero), RasterError);
  CHECK_THROWS_AS(log_transform(s, -1.0), RasterError);
}

TEST_CASE("log transform preserves pixel order") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.01, 100.0);
  const RasterSeries s({Grid::NullaryExpr(6, 6, [&] { return u(rng); }), Grid::NullaryExpr(6, 6, [&] { return u(rng); })});
  const auto l = log_transform(s, 0.5);
  for (int a = 0; a < 36; ++a)
    for (int b = 0; b < 36; ++b) CHECK((s[0](a) < s[1](b)) == (l[0](a) < l[1](b)));
}
