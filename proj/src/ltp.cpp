#include "physproj/ltp.hpp"

#include "physproj/csv.hpp"
#include "physproj/errors.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace physproj::ltp {

const LtpSchema& standard_schema() {
  static const LtpSchema schema = [] {
    LtpSchema s;
    s.input_names = {"P", "I", "R"};
    s.output_names = {"n_e",   "O2_X",  "O_3P",   "O2_a1Dg", "O2_b1Sgp", "O2_Hz",
                      "O_1D",  "O3",    "O3_exc", "O_neg",   "O2_pos",   "O_pos",
                      "T_g",   "T_nw",  "E_N",    "v_d",     "T_e"};
    s.heavy_species = {kO2X, kO3P, kO2a1Dg, kO2b1Sgp, kO2Hz, kO1D, kO3, kO3Exc, kONeg, kO2Pos, kOPos};
    s.positive_ions = {kO2Pos, kOPos};
    s.negative_ions = {kONeg};
    return s;
  }();
  return schema;
}

Eigen::Index LtpOptions::active_count() const {
  return static_cast<Eigen::Index>(laws[0]) + laws[1] + laws[2];
}

namespace {

void check_input(const Eigen::VectorXd& x) {
  require_shape(x.size() == kInputCount, "ltp: input must be (P, I, R)");
  require(x(kPressure) > 0.0 && x(kCurrent) > 0.0 && x(kRadius) > 0.0,
          "ltp: inputs P, I, R must be positive");
}

double sum_of(const Eigen::VectorXd& y, const std::vector<Eigen::Index>& idx) {
  double s = 0.0;
  for (Eigen::Index i : idx) s += y(i);
  return s;
}

} // namespace

Eigen::Vector3d scaled_residuals(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                                 const LtpSchema& schema, const LtpOptions& options) {
  check_input(x);
  require_shape(y.size() == kOutputCount, "ltp: expected 17 outputs");
  if (!y.allFinite()) throw NumericalError("ltp: non-finite output value");
  const double P = x(kPressure), I = x(kCurrent), R = x(kRadius);
  const double ne = y(schema.electrons);
  double density = sum_of(y, schema.heavy_species);
  if (options.electrons_in_pressure) density += ne;
  Eigen::Vector3d r;
  r(kIdealGas) = (P - density * kBoltzmann * y(schema.gas_temperature)) / P;
  r(kDischargeCurrent) = (I - kElementaryCharge * ne * y(schema.drift_velocity) * kPi * R * R) / I;
  const double charge = sum_of(y, schema.positive_ions) - sum_of(y, schema.negative_ions);
  r(kQuasiNeutrality) = (ne - charge) / std::max(std::abs(ne), options.electron_scale_floor);
  return r;
}

Eigen::MatrixXd scaled_residual_jacobian(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                                         const LtpSchema& schema, const LtpOptions& options) {
  check_input(x);
  require_shape(y.size() == kOutputCount, "ltp: expected 17 outputs");
  const double P = x(kPressure), I = x(kCurrent), R = x(kRadius);
  const double ne = y(schema.electrons);
  const double tg = y(schema.gas_temperature);
  const double vd = y(schema.drift_velocity);
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(3, kOutputCount);

  double density = sum_of(y, schema.heavy_species);
  for (Eigen::Index i : schema.heavy_species) jac(kIdealGas, i) = -kBoltzmann * tg / P;
  if (options.electrons_in_pressure) {
    density += ne;
    jac(kIdealGas, schema.electrons) = -kBoltzmann * tg / P;
  }
  jac(kIdealGas, schema.gas_temperature) = -density * kBoltzmann / P;

  const double area = kPi * R * R;
  jac(kDischargeCurrent, schema.electrons) = -kElementaryCharge * vd * area / I;
  jac(kDischargeCurrent, schema.drift_velocity) = -kElementaryCharge * ne * area / I;

  if (std::abs(ne) > options.electron_scale_floor) {
    const double charge = sum_of(y, schema.positive_ions) - sum_of(y, schema.negative_ions);
    const double s = std::abs(ne);
    jac(kQuasiNeutrality, schema.electrons) = 1.0 / s - std::copysign(1.0, ne) * (ne - charge) / (s * s);
    for (Eigen::Index i : schema.positive_ions) jac(kQuasiNeutrality, i) = -1.0 / s;
    for (Eigen::Index j : schema.negative_ions) jac(kQuasiNeutrality, j) = 1.0 / s;
  } else {
    const double s = options.electron_scale_floor;
    jac(kQuasiNeutrality, schema.electrons) = 1.0 / s;
    for (Eigen::Index i : schema.positive_ions) jac(kQuasiNeutrality, i) = -1.0 / s;
    for (Eigen::Index j : schema.negative_ions) jac(kQuasiNeutrality, j) = 1.0 / s;
  }
  return jac;
}

LtpConstraint::LtpConstraint(LtpSchema schema, TransformSpec output_transform, LtpOptions options)
    : schema_(std::move(schema)), transform_(std::move(output_transform)), options_(options) {
  require_shape(transform_.size() == kOutputCount, "ltp constraint: output transform must have 17 features");
  require(options_.active_count() > 0, "ltp constraint: at least one law must be active");
  for (int law = 0; law < 3; ++law)
    if (options_.laws[static_cast<std::size_t>(law)]) active_.push_back(law);
}

Eigen::VectorXd LtpConstraint::residual(const Eigen::VectorXd& x, const Eigen::VectorXd& z) const {
  const Eigen::Vector3d all = scaled_residuals(x, denormalize(z, transform_), schema_, options_);
  Eigen::VectorXd r(static_cast<Eigen::Index>(active_.size()));
  for (std::size_t k = 0; k < active_.size(); ++k) r(static_cast<Eigen::Index>(k)) = all(active_[k]);
  return r;
}

Eigen::MatrixXd LtpConstraint::jacobian(const Eigen::VectorXd& x, const Eigen::VectorXd& z) const {
  const Eigen::MatrixXd all =
      scaled_residual_jacobian(x, denormalize(z, transform_), schema_, options_) *
      denormalize_derivative(z, transform_).asDiagonal();
  Eigen::MatrixXd jac(static_cast<Eigen::Index>(active_.size()), kOutputCount);
  for (std::size_t k = 0; k < active_.size(); ++k) jac.row(static_cast<Eigen::Index>(k)) = all.row(active_[k]);
  return jac;
}

LtpConstraint ltp_constraints(const LtpSchema& schema, const TransformSpec& output_transform,
                              const LtpOptions& options) {
  return LtpConstraint(schema, output_transform, options);
}

LtpData LtpData::subset(const std::vector<Eigen::Index>& rows) const {
  LtpData out;
  out.inputs.resize(static_cast<Eigen::Index>(rows.size()), inputs.cols());
  out.outputs.resize(static_cast<Eigen::Index>(rows.size()), outputs.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.inputs.row(static_cast<Eigen::Index>(i)) = inputs.row(rows[i]);
    out.outputs.row(static_cast<Eigen::Index>(i)) = outputs.row(rows[i]);
  }
  return out;
}

Eigen::VectorXd synthetic_outputs(const Eigen::Vector3d& x, bool electrons_in_pressure) {
  check_input(x);
  // Work in the customary units: Torr, mA, mm.
  const double p = x(kPressure) / kPascalPerTorr;
  const double i = x(kCurrent) * 1e3;
  const double r = x(kRadius) * 1e3;
  const double P = x(kPressure), I = x(kCurrent), R = x(kRadius);

  Eigen::VectorXd y(kOutputCount);
  const double tg = 300.0 + 320.0 * std::pow(i / 50.0, 0.7) * std::pow(p / 10.0, 0.25) *
                                std::pow(10.0 / r, 0.3);
  y(kGasTemperature) = tg;
  y(kWallTemperature) = 300.0 + 0.55 * (tg - 300.0);

  const double field_td = 40.0 + 220.0 / std::pow(p * r / 10.0, 0.6);  // Townsend
  y(kReducedField) = field_td * 1e-21;
  y(kElectronTemperature) = 0.5 + 0.012 * field_td;
  const double vd = 1.2e5 * (1.0 - std::exp(-field_td / 150.0)) * std::pow(12.0 / r, 0.8);
  y(kDriftVelocity) = vd;

  // Discharge current fixes the electron density.
  const double ne = I / (kElementaryCharge * vd * kPi * R * R);
  y(kElectrons) = ne;

  const double gas = P / (kBoltzmann * tg);
  y(kO3P) = gas * (0.02 + 0.12 * std::pow(i / 50.0, 0.6) / (1.0 + p / 3.0));
  y(kO2a1Dg) = gas * (0.03 + 0.05 * std::pow(i / 50.0, 0.5));
  y(kO2b1Sgp) = gas * (0.004 + 0.006 * std::pow(p / 10.0, 0.5));
  y(kO2Hz) = gas * 1e-4 * (1.0 + i / 50.0);
  y(kO1D) = gas * 2e-5 * std::pow(10.0 / p, 1.5);
  y(kO3) = gas * 1e-5 * std::pow(p / 10.0, 1.2);
  y(kO3Exc) = 0.2 * y(kO3);

  // Quasi-neutrality fixes the dominant positive ion.
  y(kONeg) = ne * (0.3 + 1.5 * std::pow(p / 10.0, 0.7)) * std::pow(r / 12.0, 0.6);
  y(kOPos) = ne * 0.4 / (1.0 + std::pow(p / 0.15, 1.5));
  y(kO2Pos) = ne + y(kONeg) - y(kOPos);

  // Ideal gas law fixes the ground-state molecules.
  double others = y(kO3P) + y(kO2a1Dg) + y(kO2b1Sgp) + y(kO2Hz) + y(kO1D) + y(kO3) + y(kO3Exc) +
                  y(kONeg) + y(kO2Pos) + y(kOPos);
  if (electrons_in_pressure) others += ne;
  y(kO2X) = gas - others;
  return y;
}

LtpData generate_synthetic_ltp(int n, std::uint64_t seed, bool electrons_in_pressure) {
  require(n >= 1, "generate_synthetic_ltp: n must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> pressure(0.1, 10.0), current(5.0, 50.0), radius(4.0, 20.0);
  LtpData data;
  data.inputs.resize(n, kInputCount);
  data.outputs.resize(n, kOutputCount);
  for (int k = 0; k < n; ++k) {
    const double p = pressure(rng);
    const double i = current(rng);
    const double r = radius(rng);
    const Eigen::Vector3d x(p * kPascalPerTorr, i * 1e-3, r * 1e-3);
    data.inputs.row(k) = x.transpose();
    data.outputs.row(k) = synthetic_outputs(x, electrons_in_pressure).transpose();
  }
  return data;
}

void write_ltp_csv(const std::filesystem::path& path, const LtpData& data) {
  const LtpSchema& schema = standard_schema();
  std::vector<std::string> header = schema.input_names;
  header.insert(header.end(), schema.output_names.begin(), schema.output_names.end());
  Eigen::MatrixXd both(data.inputs.rows(), data.inputs.cols() + data.outputs.cols());
  both << data.inputs, data.outputs;
  csv::write_matrix(path, header, both, true);
}

ColumnMapping ColumnMapping::parse(const std::string& text) {
  ColumnMapping mapping;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    require(eq != std::string::npos, "column mapping line " + std::to_string(line_no) + ": missing '='");
    std::istringstream lhs(line.substr(0, eq)), rhs(line.substr(eq + 1));
    std::string name;
    Entry entry;
    lhs >> name;
    rhs >> entry.column;
    if (!(rhs >> entry.factor)) entry.factor = 1.0;
    require(!name.empty() && !entry.column.empty(),
            "column mapping line " + std::to_string(line_no) + ": empty name");
    mapping.entries.emplace_back(name, entry);
  }
  return mapping;
}

ColumnMapping ColumnMapping::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open column mapping " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

ColumnMapping::Entry ColumnMapping::lookup(const std::string& schema_name) const {
  for (const auto& [name, entry] : entries)
    if (name == schema_name) return entry;
  return {schema_name, 1.0};
}

LtpData load_ltp_csv(const std::filesystem::path& path, const std::optional<ColumnMapping>& mapping) {
  const csv::NumericTable table = csv::read_numeric(path);
  const LtpSchema& schema = standard_schema();
  const ColumnMapping map = mapping.value_or(ColumnMapping{});
  LtpData data;
  const Eigen::Index n = table.values.rows();
  require(n > 0, "ltp dataset is empty: " + path.string());
  data.inputs.resize(n, kInputCount);
  data.outputs.resize(n, kOutputCount);
  auto fill = [&](const std::vector<std::string>& names, Eigen::MatrixXd& dest) {
    for (std::size_t c = 0; c < names.size(); ++c) {
      const auto entry = map.lookup(names[c]);
      dest.col(static_cast<Eigen::Index>(c)) = table.values.col(table.column(entry.column)) * entry.factor;
    }
  };
  fill(schema.input_names, data.inputs);
  fill(schema.output_names, data.outputs);
  return data;
}

} // namespace physproj::ltp
