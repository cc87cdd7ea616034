#pragma once

#include "physproj/constraints.hpp"
#include "physproj/transform.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

/// Oxygen DC glow discharge surrogate: inputs (P, I, R), 17 outputs, and the
/// ideal-gas, discharge-current and quasi-neutrality laws tying them together.
namespace physproj::ltp {

inline constexpr double kBoltzmann = 1.380649e-23;          // J/K
inline constexpr double kElementaryCharge = 1.602176634e-19;  // C
inline constexpr double kPascalPerTorr = 101325.0 / 760.0;
inline constexpr double kPi = 3.14159265358979323846;

enum InputIndex : Eigen::Index { kPressure = 0, kCurrent = 1, kRadius = 2, kInputCount = 3 };

enum OutputIndex : Eigen::Index {
  kElectrons = 0,  // m^-3
  kO2X,
  kO3P,
  kO2a1Dg,
  kO2b1Sgp,
  kO2Hz,
  kO1D,
  kO3,
  kO3Exc,
  kONeg,
  kO2Pos,
  kOPos,
  kGasTemperature,   // K
  kWallTemperature,  // K
  kReducedField,     // V m^2
  kDriftVelocity,    // m/s
  kElectronTemperature,  // eV
  kOutputCount
};

struct LtpSchema {
  std::vector<std::string> input_names;
  std::vector<std::string> output_names;
  std::vector<Eigen::Index> heavy_species;
  std::vector<Eigen::Index> positive_ions;
  std::vector<Eigen::Index> negative_ions;
  Eigen::Index electrons = kElectrons;
  Eigen::Index gas_temperature = kGasTemperature;
  Eigen::Index drift_velocity = kDriftVelocity;
};

const LtpSchema& standard_schema();

/// Indices of the three outputs that respond most to the constraints.
inline const std::array<Eigen::Index, 3>& focus_outputs() {
  static const std::array<Eigen::Index, 3> idx{kO2X, kO2Pos, kElectrons};
  return idx;
}

enum Law : int { kIdealGas = 0, kDischargeCurrent = 1, kQuasiNeutrality = 2 };

struct LtpOptions {
  std::array<bool, 3> laws{true, true, true};
  /// Count electrons in the ideal-gas density sum.
  bool electrons_in_pressure = false;
  /// Lower clamp on n_e used to scale the quasi-neutrality residual.
  double electron_scale_floor = 1e6;

  Eigen::Index active_count() const;
};

/// Scaled residuals (R1/P, R2/I, R3/max(n_e, floor)) of all three laws for a
/// physical input (P Pa, I A, R m) and physical outputs.
Eigen::Vector3d scaled_residuals(const Eigen::VectorXd& input_x, const Eigen::VectorXd& physical_output,
                                 const LtpSchema& schema, const LtpOptions& options);

/// d(scaled residuals)/d(physical outputs), 3 x 17.
Eigen::MatrixXd scaled_residual_jacobian(const Eigen::VectorXd& input_x,
                                         const Eigen::VectorXd& physical_output,
                                         const LtpSchema& schema, const LtpOptions& options);

/// The active laws as a constraint on normalized outputs.
class LtpConstraint final : public ConstraintSet {
public:
  LtpConstraint(LtpSchema schema, TransformSpec output_transform, LtpOptions options = {});

  Eigen::Index residual_dim() const override { return options_.active_count(); }
  Eigen::Index output_dim() const override { return kOutputCount; }
  Eigen::VectorXd residual(const Eigen::VectorXd& input_x, const Eigen::VectorXd& z) const override;
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& input_x, const Eigen::VectorXd& z) const override;

  const LtpOptions& options() const { return options_; }
  const TransformSpec& output_transform() const { return transform_; }

private:
  LtpSchema schema_;
  TransformSpec transform_;
  LtpOptions options_;
  std::vector<int> active_;
};

LtpConstraint ltp_constraints(const LtpSchema& schema, const TransformSpec& output_transform,
                              const LtpOptions& options = {});

/// Physical inputs (n x 3) and outputs (n x 17), SI units.
struct LtpData {
  Eigen::MatrixXd inputs;
  Eigen::MatrixXd outputs;

  Eigen::Index size() const { return inputs.rows(); }
  LtpData subset(const std::vector<Eigen::Index>& rows) const;
};

/// Smooth closed-form stand-in for the discharge model at (P Pa, I A, R m);
/// satisfies all three laws to rounding by construction.
Eigen::VectorXd synthetic_outputs(const Eigen::Vector3d& input_x, bool electrons_in_pressure = false);

/// Uniform inputs over P in [0.1, 10] Torr, I in [5, 50] mA, R in [4, 20] mm.
LtpData generate_synthetic_ltp(int n, std::uint64_t seed, bool electrons_in_pressure = false);

void write_ltp_csv(const std::filesystem::path& path, const LtpData& data);

/// Maps schema names to CSV columns with an optional unit factor. File
/// format: one `schema_name = column_name [factor]` per line, `#` comments.
/// Names not listed are looked up verbatim with factor 1.
struct ColumnMapping {
  struct Entry {
    std::string column;
    double factor = 1.0;
  };
  std::vector<std::pair<std::string, Entry>> entries;

  static ColumnMapping parse(const std::string& text);
  static ColumnMapping load(const std::filesystem::path& path);
  Entry lookup(const std::string& schema_name) const;
};

LtpData load_ltp_csv(const std::filesystem::path& path, const std::optional<ColumnMapping>& mapping = {});

} // namespace physproj::ltp
