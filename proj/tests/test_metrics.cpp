#include "physproj/csv.hpp"
#include "physproj/errors.hpp"
#include "physproj/metrics.hpp"

#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <set>

using namespace physproj;

TEST_CASE("per-output and overall RMSE") {
  Eigen::MatrixXd p(2, 2), t(2, 2);
  p << 1.0, 2.0,
       3.0, 4.0;
  t << 0.0, 2.0,
       3.0, 1.0;
  const Eigen::VectorXd r = rmse_per_output(p, t);
  CHECK(r(0) == doctest::Approx(std::sqrt(0.5)));
  CHECK(r(1) == doctest::Approx(std::sqrt(4.5)));
  CHECK(rmse(p, t) == doctest::Approx(std::sqrt(10.0 / 4.0)));
  CHECK_THROWS_AS(rmse_per_output(p, Eigen::MatrixXd::Zero(3, 2)), ShapeError);
}

TEST_CASE("improvement rates count rows") {
  Eigen::MatrixXd base(4, 2), proj(4, 2);
  base << 1.0, 1.0,
          1.0, 1.0,
          1.0, 1.0,
          1.0, 1.0;
  proj << 0.5, 0.5,   // all improve
          0.5, 1.2,   // mean improves only
          1.5, 0.9,   // neither mean nor all
          0.9, 0.9;   // all improve
  const ImprovementRates r = improvement_rates(base, proj);
  CHECK(r.r_mean == doctest::Approx(75.0));
  CHECK(r.r_all == doctest::Approx(50.0));
}

TEST_CASE("variation rate is negative when the projection helps") {
  CHECK(rmse_variation_rate(2.0, 1.5) == doctest::Approx(-25.0));
  CHECK_THROWS_AS(rmse_variation_rate(0.0, 1.0), ValidationError);
}

TEST_CASE("split is a seeded partition") {
  const SplitIndices s = split_indices(1000, {0.8, 0.1, 0.1}, 4);
  CHECK(s.train.size() == 800);
  CHECK(s.validation.size() == 100);
  CHECK(s.test.size() == 100);
  std::set<Eigen::Index> all(s.train.begin(), s.train.end());
  all.insert(s.validation.begin(), s.validation.end());
  all.insert(s.test.begin(), s.test.end());
  CHECK(all.size() == 1000);
  CHECK(split_indices(1000, {0.8, 0.1, 0.1}, 4).test == s.test);
  CHECK(split_indices(1000, {0.8, 0.1, 0.1}, 5).test != s.test);
  CHECK_THROWS_AS(split_indices(10, {0.5, 0.2, 0.2}, 1), ValidationError);
  CHECK_THROWS_AS(split_indices(2, {0.4, 0.3, 0.3}, 1), ValidationError);
}

TEST_CASE("shortest formatting round-trips") {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 6.02214076e23, -2.5, 0.0}) {
    CHECK(std::stod(csv::format_shortest(v)) == v);
    CHECK(std::stod(csv::format_17g(v)) == v);
  }
  CHECK(csv::format_shortest(0.1) == "0.1");
}

TEST_CASE("numeric CSV write and read") {
  const auto path = std::filesystem::temp_directory_path() / "physproj_metrics_csv" / "m.csv";
  Eigen::MatrixXd m(2, 3);
  m << 1.0, 2.5, -3.0,
       1e-20, 0.1, 7.0;
  csv::write_matrix(path, {"a", "b", "c"}, m, false);
  const csv::NumericTable t = csv::read_numeric(path);
  CHECK(t.header == std::vector<std::string>{"a", "b", "c"});
  CHECK(t.values == m);
  CHECK(t.column("c") == 2);
  CHECK_THROWS_AS(t.column("d"), ValidationError);
  CHECK_THROWS_AS(csv::Table({"a", "b"}).add_row({"1"}), ShapeError);
  std::filesystem::remove_all(path.parent_path());
}
