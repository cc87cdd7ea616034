#include "physproj/transform.hpp"

#include "physproj/csv.hpp"
#include "physproj/errors.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

namespace physproj {

TransformSpec::TransformSpec(std::vector<FeatureScale> features)
    : features_(std::move(features)) {
  for (const auto& f : features_) {
    require(std::isfinite(f.min) && std::isfinite(f.max),
            "non-finite bounds for feature " + f.name);
    require(f.max > f.min, "degenerate bounds (max <= min) for feature " + f.name);
  }
}

std::vector<std::string> TransformSpec::names() const {
  std::vector<std::string> out;
  out.reserve(features_.size());
  for (const auto& f : features_) out.push_back(f.name);
  return out;
}

namespace {

double to_unit(double value, const FeatureScale& f) {
  double u = value;
  if (f.log10) {
    if (!(value > 0.0))
      throw ValidationError("non-positive value on log-scaled feature " + f.name);
    u = std::log10(value);
  }
  return 2.0 * (u - f.min) / (f.max - f.min) - 1.0;
}

double from_unit(double z, const FeatureScale& f) {
  const double u = f.min + 0.5 * (z + 1.0) * (f.max - f.min);
  const double value = f.log10 ? std::pow(10.0, u) : u;
  if (!std::isfinite(value))
    throw NumericalError("non-finite denormalized value for feature " + f.name);
  return value;
}

} // namespace

Eigen::VectorXd normalize(const Eigen::VectorXd& physical, const TransformSpec& spec) {
  require_shape(physical.size() == spec.size(), "normalize: width mismatch");
  Eigen::VectorXd z(physical.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = to_unit(physical(i), spec[i]);
  return z;
}

Eigen::VectorXd denormalize(const Eigen::VectorXd& normalized, const TransformSpec& spec) {
  require_shape(normalized.size() == spec.size(), "denormalize: width mismatch");
  Eigen::VectorXd x(normalized.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = from_unit(normalized(i), spec[i]);
  return x;
}

Eigen::MatrixXd normalize_rows(const Eigen::MatrixXd& physical, const TransformSpec& spec) {
  require_shape(physical.cols() == spec.size(), "normalize: width mismatch");
  Eigen::MatrixXd z(physical.rows(), physical.cols());
  for (Eigen::Index c = 0; c < z.cols(); ++c)
    for (Eigen::Index r = 0; r < z.rows(); ++r) z(r, c) = to_unit(physical(r, c), spec[c]);
  return z;
}

Eigen::MatrixXd denormalize_rows(const Eigen::MatrixXd& normalized, const TransformSpec& spec) {
  require_shape(normalized.cols() == spec.size(), "denormalize: width mismatch");
  Eigen::MatrixXd x(normalized.rows(), normalized.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c)
    for (Eigen::Index r = 0; r < x.rows(); ++r) x(r, c) = from_unit(normalized(r, c), spec[c]);
  return x;
}

Eigen::VectorXd denormalize_derivative(const Eigen::VectorXd& normalized,
                                       const TransformSpec& spec) {
  require_shape(normalized.size() == spec.size(), "denormalize: width mismatch");
  Eigen::VectorXd d(normalized.size());
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    const auto& f = spec[i];
    const double half_range = 0.5 * (f.max - f.min);
    d(i) = f.log10 ? std::numbers::ln10 * from_unit(normalized(i), f) * half_range
                   : half_range;
  }
  return d;
}

double sample_skewness(const Eigen::Ref<const Eigen::VectorXd>& values) {
  require(values.size() > 0, "skewness of empty sample");
  const double mean = values.mean();
  const Eigen::ArrayXd centered = values.array() - mean;
  const double m2 = centered.square().mean();
  const double m3 = centered.cube().mean();
  if (m2 <= 0.0) return 0.0;
  return m3 / std::pow(m2, 1.5);
}

namespace {

TransformSpec fit_impl(const Eigen::MatrixXd& data, const std::vector<std::string>& names,
                       double skew_threshold, bool allow_log) {
  require(data.rows() > 0, "fit_transform: empty dataset");
  require_shape(static_cast<Eigen::Index>(names.size()) == data.cols(),
                "fit_transform: names/columns mismatch");
  std::vector<FeatureScale> features;
  for (Eigen::Index c = 0; c < data.cols(); ++c) {
    FeatureScale f;
    f.name = names[static_cast<std::size_t>(c)];
    Eigen::VectorXd column = data.col(c);
    if (allow_log && (column.array() > 0.0).all() && sample_skewness(column) > skew_threshold) {
      f.log10 = true;
      column = column.array().log10();
    }
    f.min = column.minCoeff();
    f.max = column.maxCoeff();
    if (!(f.max > f.min)) throw ValidationError("degenerate (constant) feature: " + f.name);
    features.push_back(std::move(f));
  }
  return TransformSpec(std::move(features));
}

} // namespace

TransformSpec fit_transform(const Eigen::MatrixXd& data, const std::vector<std::string>& names,
                            double skew_threshold) {
  return fit_impl(data, names, skew_threshold, true);
}

TransformSpec fit_minmax(const Eigen::MatrixXd& data, const std::vector<std::string>& names) {
  return fit_impl(data, names, 0.0, false);
}

void write_transform(std::ostream& out, const TransformSpec& spec) {
  out << kTransformMagic << '\n' << "features " << spec.size() << '\n';
  for (const auto& f : spec.features())
    out << f.name << ' ' << csv::format_17g(f.min) << ' ' << csv::format_17g(f.max) << ' '
        << (f.log10 ? 1 : 0) << '\n';
}

TransformSpec read_transform(std::istream& in) {
  std::string magic;
  in >> magic;
  require(magic == kTransformMagic, "not a transform file (bad magic '" + magic + "')");
  std::string keyword;
  long count = 0;
  in >> keyword >> count;
  require(keyword == "features" && count > 0, "malformed transform header");
  std::vector<FeatureScale> features(static_cast<std::size_t>(count));
  for (auto& f : features) {
    int flag = 0;
    in >> f.name >> f.min >> f.max >> flag;
    require(static_cast<bool>(in), "truncated transform file");
    f.log10 = flag != 0;
  }
  return TransformSpec(std::move(features));
}

void save_transform(const std::string& path, const TransformSpec& spec) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  write_transform(out, spec);
}

TransformSpec load_transform(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  return read_transform(in);
}

} // namespace physproj
