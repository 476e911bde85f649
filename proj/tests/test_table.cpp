#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "hetdecomp/csv.hpp"
#include "hetdecomp/error.hpp"
#include "hetdecomp/table.hpp"
#include "test_support.hpp"

using namespace hetdecomp;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream out(path, std::ios::binary);
  out << content;
  return path.string();
}

ColumnSpec basic_spec() {
  ColumnSpec spec;
  spec.outcome_column = "y";
  spec.treatment_column = "treat";
  spec.control_label = "none";
  spec.confounder_columns = {"x1", "x2"};
  spec.heterogeneity_columns = {"x1"};
  return spec;
}

}  // namespace

TEST_CASE("csv parser handles rfc-4180 quoting") {
  const csv::Document doc = csv::parse(
      "a,b,c\n1,\"x,y\",\"he said \"\"hi\"\"\"\n2,\"line\nbreak\",plain\n");
  REQUIRE(doc.rows.size() == 2);
  CHECK(doc.rows[0][1] == "x,y");
  CHECK(doc.rows[0][2] == "he said \"hi\"");
  CHECK(doc.rows[1][1] == "line\nbreak");
  CHECK_THROWS_AS(csv::parse("a,b\n1\n"), Error);
  CHECK_THROWS_AS(csv::parse(""), Error);
}

TEST_CASE("load_table maps labels and derives the binary indicator") {
  const std::string path = write_temp(
      "hd_basic.csv",
      "y,treat,x1,x2\n1.5,none,0,1\n2.5,low,1,0\n3.5,high,0,0\n4.5,low,1,1\n");
  const ObservationTable table = load_table(path, basic_spec());
  CHECK(table.n() == 4);
  CHECK(table.num_treatments() == 2);
  // Non-control labels sort lexicographically: high -> 1, low -> 2.
  CHECK(table.t() == std::vector<int>{0, 2, 1, 2});
  CHECK(table.d() == std::vector<int>{0, 1, 1, 1});
  CHECK(table.treatment_labels() ==
        std::vector<std::string>{"none", "high", "low"});
  CHECK(table.z_cols() == std::vector<int>{0});
}

TEST_CASE("numeric treatment labels sort numerically") {
  const std::string path = write_temp(
      "hd_numeric.csv",
      "y,treat,x1,x2\n1,0,0,1\n2,10,1,0\n3,2,0,0\n4,10,1,1\n");
  ColumnSpec spec = basic_spec();
  spec.control_label = "0";
  const ObservationTable table = load_table(path, spec);
  CHECK(table.t() == std::vector<int>{0, 2, 1, 2});  // 2 -> 1, 10 -> 2
  CHECK(table.treatment_labels() ==
        std::vector<std::string>{"0", "2", "10"});
}

TEST_CASE("load_table error paths") {
  ColumnSpec spec = basic_spec();
  const std::string missing_col = write_temp(
      "hd_missing.csv", "y,treat,x1\n1,none,0\n2,low,1\n");
  CHECK_THROWS_WITH_AS(load_table(missing_col, spec),
                       doctest::Contains("x2"), Error);

  const std::string bad_cell = write_temp(
      "hd_badcell.csv",
      "y,treat,x1,x2\n1,none,0,1\noops,low,1,0\n");
  CHECK_THROWS_WITH_AS(load_table(bad_cell, spec), doctest::Contains("oops"),
                       Error);

  const std::string missing_value = write_temp(
      "hd_missingval.csv", "y,treat,x1,x2\n1,none,0,1\n2,low,,0\n");
  CHECK_THROWS_AS(load_table(missing_value, spec), Error);

  const std::string no_control = write_temp(
      "hd_noctrl.csv", "y,treat,x1,x2\n1,low,0,1\n2,high,1,0\n");
  CHECK_THROWS_WITH_AS(load_table(no_control, spec), doctest::Contains("none"),
                       Error);

  const std::string empty = write_temp("hd_empty.csv", "y,treat,x1,x2\n");
  CHECK_THROWS_AS(load_table(empty, spec), Error);
}

TEST_CASE("round trip reproduces y, t, x bit-exactly") {
  const std::string path = write_temp(
      "hd_roundtrip_src.csv",
      "y,treat,x1,x2\n0.1,none,0.3333333333333333,1e-17\n"
      "2.5e300,low,-7.000000000000001,42\n-1.25,high,0.1,2\n");
  const ColumnSpec spec = basic_spec();
  const ObservationTable table = load_table(path, spec);
  const auto out_path =
      (std::filesystem::temp_directory_path() / "hd_roundtrip_out.csv")
          .string();
  write_table(out_path, table, spec);
  const ObservationTable reloaded = load_table(out_path, spec);
  CHECK(reloaded.y() == table.y());
  CHECK(reloaded.t() == table.t());
  CHECK(reloaded.x() == table.x());
}

TEST_CASE("construction validates invariants") {
  Eigen::VectorXd y(3);
  y << 1, 2, 3;
  Eigen::MatrixXd x(3, 1);
  x << 0, 1, 0;

  SUBCASE("d is derived from t") {
    ObservationTable table(y, {0, 1, 1}, x, {0});
    CHECK(table.d() == std::vector<int>{0, 1, 1});
  }
  SUBCASE("gap in levels re-derives J with a warning") {
    ObservationTable table(y, {0, 2, 2}, x, {0});
    CHECK(table.num_treatments() == 1);
    CHECK(table.t() == std::vector<int>{0, 1, 1});
    REQUIRE(table.warnings().size() == 1);
  }
  SUBCASE("missing control errors") {
    CHECK_THROWS_AS(ObservationTable(y, {1, 1, 2}, x, {0}), Error);
  }
  SUBCASE("non-finite values rejected") {
    Eigen::VectorXd bad_y = y;
    bad_y[1] = std::nan("");
    CHECK_THROWS_AS(ObservationTable(bad_y, {0, 1, 1}, x, {0}), Error);
    Eigen::MatrixXd bad_x = x;
    bad_x(0, 0) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(ObservationTable(y, {0, 1, 1}, bad_x, {0}), Error);
  }
  SUBCASE("z columns validated") {
    CHECK_THROWS_AS(ObservationTable(y, {0, 1, 1}, x, {1}), Error);
    CHECK_THROWS_AS(ObservationTable(y, {0, 1, 1}, x, {0, 0}), Error);
  }
}

TEST_CASE("enumerated population weights") {
  Eigen::VectorXd y(4);
  y << 1, 2, 3, 4;
  Eigen::MatrixXd x(4, 1);
  x << 0, 0, 1, 1;
  ObservationTable table(y, {0, 1, 0, 1}, x, {0});

  SUBCASE("uniform weights match the unweighted path") {
    const ObservationTable view =
        table.enumerate_population(Eigen::VectorXd::Constant(4, 0.25));
    CHECK(view.weighted_mean(y) == doctest::Approx(table.weighted_mean(y)));
    CHECK((view.treatment_shares() - table.treatment_shares()).norm() ==
          doctest::Approx(0.0));
  }
  SUBCASE("weights renormalize and validate") {
    Eigen::VectorXd w(4);
    w << 1, 1, 2, 0;
    const ObservationTable view = table.enumerate_population(w);
    CHECK(view.weights().sum() == doctest::Approx(1.0));
    CHECK(view.weighted_mean(y) == doctest::Approx((1 + 2 + 2 * 3) / 4.0));

    w << -1, 1, 1, 1;
    CHECK_THROWS_AS(table.enumerate_population(w), Error);
    w.setZero();
    CHECK_THROWS_AS(table.enumerate_population(w), Error);
  }
  SUBCASE("single row with weight one") {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(4);
    w[2] = 1.0;
    const ObservationTable view = table.enumerate_population(w);
    CHECK(view.weighted_mean(y) == doctest::Approx(3.0));
  }
}

TEST_CASE("toy population shares and moments are exact") {
  const auto toy = test_support::make_toy_population();
  const Eigen::VectorXd pi = toy.table.treatment_shares();
  CHECK(pi[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(pi[1] == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(pi[2] == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(pi.sum() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(toy.table.weighted_mean(toy.table.y()) ==
        doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("treatment shares identity pi_0 = 1 - mean(d)") {
  Eigen::VectorXd y(5);
  y << 1, 2, 3, 4, 5;
  Eigen::MatrixXd x(5, 1);
  x.setZero();
  ObservationTable table(y, {0, 1, 2, 1, 0}, x, {0});
  const Eigen::VectorXd pi = table.treatment_shares();
  double mean_d = 0.0;
  for (int di : table.d()) mean_d += di;
  mean_d /= 5.0;
  CHECK(pi[0] == doctest::Approx(1.0 - mean_d).epsilon(1e-15));
  CHECK(pi.sum() == doctest::Approx(1.0).epsilon(1e-15));
}
