#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "ncflab/config.hpp"
#include "ncflab/experiments.hpp"
#include "ncflab/io.hpp"
#include "support.hpp"

using namespace ncflab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "ncflab-unit";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST(Json, MatrixRoundTrip) {
  std::mt19937_64 rng(1);
  const MatElem m = random_gaussian(3, rng);
  const MatElem back = io::matrix_from_json(io::matrix_to_json(m));
  EXPECT_EQ((back - m).norm(), 0.0);
}

TEST(Json, MatrixRejectsRaggedRows) {
  const io::json j = io::json::parse("[[[1,0],[2,0]],[[3,0]]]");
  EXPECT_THROW(io::matrix_from_json(j), invalid_input);
  EXPECT_THROW(io::matrix_from_json(io::json::array()), invalid_input);
}

TEST(Json, PolynomialRoundTrip) {
  std::mt19937_64 rng(2);
  const QTorusPoly f = random_qtorus_poly({2, 7}, 3, rng);
  const QTorusPoly g = io::poly_from_json(io::json::parse(io::poly_to_json(f).dump()));
  EXPECT_EQ(g.angle.p, 2);
  EXPECT_EQ(g.angle.q, 7);
  ASSERT_EQ(g.coeffs.size(), f.coeffs.size());
  for (const auto& [k, c] : f.coeffs) EXPECT_EQ(g.coeff(k), c);
}

TEST(Json, PolynomialRejectsMalformedInput) {
  EXPECT_THROW(io::poly_from_json(io::json::parse(R"({"p":1,"q":3})")), invalid_input);
  EXPECT_THROW(io::poly_from_json(io::json::parse(R"({"p":1,"q":3,"coeffs":[[0,0,1]]})")), invalid_input);
  EXPECT_THROW(io::poly_from_json(io::json::parse(R"({"p":1,"q":0,"coeffs":[]})")), invalid_input);
}

TEST(GridFile, RoundTripAtSinglePrecision) {
  std::mt19937_64 rng(3);
  OpGrid g = random_matrix_field(16, 2, 4, rng);
  const fs::path p = scratch("grid.bin");
  io::write_opgrid(p.string(), g);
  const OpGrid back = io::read_opgrid(p.string());
  EXPECT_TRUE(back.same_shape(g));
  double scale = 0.0;
  for (const auto& v : g.data) scale = std::max(scale, std::abs(v));
  EXPECT_LT(max_abs_diff(back, g), 1e-6 * scale);
  EXPECT_EQ(fs::file_size(p), 4 + 12 + 8 + 16u * 16 * 4 * 8);
}

TEST(GridFile, TruncatedOrForeignFilesThrow) {
  const fs::path p = scratch("short.bin");
  io::write_opgrid(p.string(), OpGrid(8, 1));
  fs::resize_file(p, fs::file_size(p) - 8);
  EXPECT_THROW(io::read_opgrid(p.string()), invalid_input);
  {
    std::ofstream os(scratch("junk.bin"), std::ios::binary);
    os << "JUNKJUNKJUNKJUNKJUNKJUNK";
  }
  EXPECT_THROW(io::read_opgrid(scratch("junk.bin").string()), invalid_input);
  EXPECT_THROW(io::read_opgrid(scratch("missing.bin").string()), invalid_input);
}

TEST(Csv, QuotingAndNumbers) {
  io::CsvTable t({"name", "x", "n", "ok"});
  t.row() << "plain" << 0.1 << 3 << true;
  t.row() << "a,b \"c\"" << 0.25 << -2L << false;
  EXPECT_EQ(t.size(), 2u);
  EXPECT_EQ(t.str(),
            "name,x,n,ok\n"
            "plain,0.10000000000000001,3,true\n"
            "\"a,b \"\"c\"\"\",0.25,-2,false\n");
}

TEST(Config, ParsesScalarsListsAndComments) {
  const config::Document d = config::parse(R"(
# leading comment
[run]
experiments = ["qt-riesz", "partition"]  # trailing
seed = 1_000
[partition]
samples = 2e3
tol = 1e-12
assert = false
lambda = [0.5,
          1.5]
name = "x y"
)");
  ASSERT_EQ(d.order.size(), 2u);
  EXPECT_EQ(d.order[0], "run");
  const config::Section& run = d.section("run");
  EXPECT_EQ(run.strings("experiments", {}), (std::vector<std::string>{"qt-riesz", "partition"}));
  EXPECT_EQ(run.integer("seed", 0), 1000);
  const config::Section& p = d.section("partition");
  EXPECT_EQ(p.integer("samples", 0), 2000);
  EXPECT_EQ(p.num("tol", 0.0), 1e-12);
  EXPECT_FALSE(p.boolean("assert", true));
  EXPECT_EQ(p.nums("lambda", {}), (std::vector<double>{0.5, 1.5}));
  EXPECT_EQ(p.string("name", ""), "x y");
  EXPECT_EQ(p.num("absent", 4.5), 4.5);
  EXPECT_FALSE(d.section("missing").has("x"));
}

TEST(Config, TypeMismatchesThrow) {
  const config::Document d = config::parse("[a]\nx = 1.5\ns = \"t\"\nl = [1, \"b\"]\n");
  const config::Section& a = d.section("a");
  EXPECT_THROW(a.integer("x", 0), invalid_input);
  EXPECT_THROW(a.string("x", ""), invalid_input);
  EXPECT_THROW(a.num("s", 0.0), invalid_input);
  EXPECT_THROW(a.boolean("s", false), invalid_input);
  EXPECT_THROW(a.nums("l", {}), invalid_input);
  EXPECT_THROW(a.strings("x", {}), invalid_input);
}

TEST(Config, SyntaxErrorsThrow) {
  EXPECT_THROW(config::parse("[a\nx = 1\n"), invalid_input);
  EXPECT_THROW(config::parse("[a]\nx = 1\nx = 2\n"), invalid_input);
  EXPECT_THROW(config::parse("[a]\nx 1\n"), invalid_input);
  EXPECT_THROW(config::parse("[a]\nx = 1abc\n"), invalid_input);
  EXPECT_THROW(config::parse("[a]\nx = [1, 2\n"), invalid_input);
  EXPECT_THROW(config::load(scratch("no-such.cfg").string()), invalid_input);
}

TEST(Config, ValidateSection) {
  config::Section s;
  s.name = "partition";
  s.values["samples"] = testsupport::num(10);
  s.values["assert"] = testsupport::flag(false);
  EXPECT_NO_THROW(experiments::validate_section("partition", s));
  s.values["sampels"] = testsupport::num(10);
  EXPECT_THROW(experiments::validate_section("partition", s), invalid_input);
  EXPECT_THROW(experiments::validate_section("no-such-experiment", config::Section{}), invalid_input);
  config::Section bad_assert;
  bad_assert.values["assert"] = testsupport::num(1);
  EXPECT_THROW(experiments::validate_section("partition", bad_assert), invalid_input);
}

TEST(Config, KnownKeysCoverTheRegistry) {
  const auto& reg = experiments::registry();
  const auto& keys = experiments::known_keys();
  ASSERT_EQ(reg.size(), keys.size());
  for (const auto& [id, fn] : reg) EXPECT_TRUE(keys.count(id)) << id;
}
