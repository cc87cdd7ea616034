#include "fd.hpp"
#include "physproj/csv.hpp"
#include "physproj/errors.hpp"
#include "physproj/ltp.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

using namespace physproj;

namespace {

constexpr double kB = 1.380649e-23;
constexpr double qe = 1.602176634e-19;

/// Law residuals written out term by term.
Eigen::Vector3d oracle_residuals(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double floor) {
  const double P = x(0), I = x(1), R = x(2);
  const double heavy = y(1) + y(2) + y(3) + y(4) + y(5) + y(6) + y(7) + y(8) + y(9) + y(10) + y(11);
  const double tg = y(12), vd = y(15), ne = y(0);
  const double positive = y(10) + y(11), negative = y(9);
  return {(P - heavy * kB * tg) / P, (I - qe * ne * vd * 3.14159265358979323846 * R * R) / I,
          (ne + negative - positive) / std::max(std::abs(ne), floor)};
}

ltp::LtpData sample_data() { return ltp::generate_synthetic_ltp(400, 5); }

} // namespace

TEST_CASE("schema layout") {
  const auto& s = ltp::standard_schema();
  CHECK(s.output_names.size() == 17);
  CHECK(s.output_names[ltp::kElectrons] == "n_e");
  CHECK(s.output_names[ltp::kDriftVelocity] == "v_d");
  CHECK(s.heavy_species.size() == 11);
}

TEST_CASE("scaled residuals match the term-by-term oracle") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> jitter(0.8, 1.2);
  const ltp::LtpData d = sample_data();
  for (Eigen::Index i = 0; i < 20; ++i) {
    Eigen::VectorXd y = d.outputs.row(i).transpose();
    for (Eigen::Index j = 0; j < y.size(); ++j) y(j) *= jitter(rng);
    const Eigen::VectorXd x = d.inputs.row(i).transpose();
    const Eigen::Vector3d r = ltp::scaled_residuals(x, y, ltp::standard_schema(), {});
    const Eigen::Vector3d o = oracle_residuals(x, y, 1e6);
    CHECK((r - o).cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("quasi-neutrality scale uses |n_e| above the floor and the floor below it") {
  Eigen::VectorXd x(3);
  x << 100.0, 0.02, 0.01;
  Eigen::VectorXd y = Eigen::VectorXd::Ones(17);
  y(ltp::kElectrons) = -4e6;
  y(ltp::kO2Pos) = 1e6;
  CHECK(ltp::scaled_residuals(x, y, ltp::standard_schema(), {})(2) == doctest::Approx((-4e6 + 1.0 - 1e6 - 1.0) / 4e6));
  y(ltp::kElectrons) = 10.0;
  CHECK(ltp::scaled_residuals(x, y, ltp::standard_schema(), {})(2) == doctest::Approx((10.0 + 1.0 - 1e6 - 1.0) / 1e6));
}

TEST_CASE("synthetic data satisfies the three laws to rounding") {
  const ltp::LtpData d = sample_data();
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    const Eigen::Vector3d r = oracle_residuals(d.inputs.row(i).transpose(), d.outputs.row(i).transpose(), 1e6);
    CHECK(r.cwiseAbs().maxCoeff() < 1e-12);
  }
  const ltp::LtpData e = ltp::generate_synthetic_ltp(50, 5, true);
  for (Eigen::Index i = 0; i < e.size(); ++i) {
    ltp::LtpOptions o;
    o.electrons_in_pressure = true;
    CHECK(ltp::scaled_residuals(e.inputs.row(i).transpose(), e.outputs.row(i).transpose(), ltp::standard_schema(), o)
              .cwiseAbs()
              .maxCoeff() < 1e-12);
  }
}

TEST_CASE("synthetic inputs cover the operating box") {
  const ltp::LtpData d = ltp::generate_synthetic_ltp(2000, 1);
  const double torr = 101325.0 / 760.0;
  CHECK(d.inputs.col(0).minCoeff() >= 0.1 * torr);
  CHECK(d.inputs.col(0).maxCoeff() <= 10.0 * torr);
  CHECK(d.inputs.col(1).minCoeff() >= 0.005);
  CHECK(d.inputs.col(1).maxCoeff() <= 0.05);
  CHECK(d.inputs.col(2).minCoeff() >= 0.004);
  CHECK(d.inputs.col(2).maxCoeff() <= 0.02);
}

TEST_CASE("skewness flags exactly four outputs for log scaling") {
  for (std::uint64_t seed : {1, 2, 3}) {
    const ltp::LtpData d = ltp::generate_synthetic_ltp(1000, seed);
    const TransformSpec tf = fit_transform(d.outputs, ltp::standard_schema().output_names, 2.0);
    std::vector<std::string> flagged;
    for (const auto& f : tf.features())
      if (f.log10) flagged.push_back(f.name);
    CHECK(flagged == std::vector<std::string>{"O_1D", "O_pos", "E_N", "T_e"});
  }
}

TEST_CASE("LTP constraint Jacobian agrees with finite differences at 100 points") {
  const ltp::LtpData d = ltp::generate_synthetic_ltp(1000, 8);
  const TransformSpec tf = fit_transform(d.outputs, ltp::standard_schema().output_names, 2.0);
  const ltp::LtpConstraint g = ltp::ltp_constraints(ltp::standard_schema(), tf);
  std::mt19937_64 rng(8);
  std::normal_distribution<double> noise(0.0, 0.05);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < 100; ++i) {
    const Eigen::VectorXd x = d.inputs.row(i).transpose();
    Eigen::VectorXd z = normalize(Eigen::VectorXd(d.outputs.row(i).transpose()), tf);
    for (Eigen::Index j = 0; j < z.size(); ++j) z(j) += noise(rng);
    const Eigen::MatrixXd j_fd = fd::jacobian([&](const Eigen::VectorXd& v) { return g.residual(x, v); }, z);
    worst = std::max(worst, fd::relative_error(g.jacobian(x, z), j_fd));
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("law subsets select residual rows") {
  const ltp::LtpData d = sample_data();
  const TransformSpec tf = fit_transform(d.outputs, ltp::standard_schema().output_names, 2.0);
  ltp::LtpOptions only_current;
  only_current.laws = {false, true, false};
  const ltp::LtpConstraint all = ltp::ltp_constraints(ltp::standard_schema(), tf);
  const ltp::LtpConstraint one = ltp::ltp_constraints(ltp::standard_schema(), tf, only_current);
  CHECK(one.residual_dim() == 1);
  const Eigen::VectorXd x = d.inputs.row(0).transpose();
  Eigen::VectorXd z = normalize(Eigen::VectorXd(d.outputs.row(0).transpose()), tf);
  z(ltp::kElectrons) += 0.1;
  CHECK(one.residual(x, z)(0) == all.residual(x, z)(1));
  ltp::LtpOptions none;
  none.laws = {false, false, false};
  CHECK_THROWS_AS(ltp::ltp_constraints(ltp::standard_schema(), tf, none), ValidationError);
}

TEST_CASE("non-positive inputs are rejected") {
  Eigen::VectorXd x(3);
  x << 0.0, 0.02, 0.01;
  CHECK_THROWS_AS(ltp::scaled_residuals(x, Eigen::VectorXd::Ones(17), ltp::standard_schema(), {}), ValidationError);
}

TEST_CASE("CSV with a column mapping loads in SI units") {
  const auto dir = std::filesystem::temp_directory_path() / "physproj_ltp_mapping";
  std::filesystem::create_directories(dir);
  const ltp::LtpData d = ltp::generate_synthetic_ltp(5, 3);
  ltp::write_ltp_csv(dir / "plain.csv", d);

  // rename the pressure column and store electron density in cm^-3
  const csv::NumericTable t = csv::read_numeric(dir / "plain.csv");
  std::vector<std::string> header = t.header;
  header[0] = "pressure_pa";
  Eigen::MatrixXd values = t.values;
  values.col(3) *= 1e-6;
  header[3] = "ne_cm3";
  csv::write_matrix(dir / "renamed.csv", header, values, true);
  const auto mapping = ltp::ColumnMapping::parse("# comment\nP = pressure_pa\nn_e = ne_cm3 1e6\n");
  const ltp::LtpData back = ltp::load_ltp_csv(dir / "renamed.csv", mapping);
  CHECK((back.inputs - d.inputs).cwiseAbs().maxCoeff() == 0.0);
  CHECK(((back.outputs.col(0) - d.outputs.col(0)).array().abs() / d.outputs.col(0).array()).maxCoeff() < 1e-14);
  CHECK_THROWS_AS(ltp::load_ltp_csv(dir / "renamed.csv"), ValidationError);
  std::filesystem::remove_all(dir);
}
