#pragma once

#include <Eigen/Dense>

#include <iosfwd>
#include <string>
#include <vector>

namespace physproj {

/// Scaling of one feature onto [-1, 1]. When `log10` is set, the bounds
/// apply to log10(value) rather than to the value itself.
struct FeatureScale {
  std::string name;
  double min = -1.0;
  double max = 1.0;
  bool log10 = false;

  bool operator==(const FeatureScale&) const = default;
};

/// Ordered per-feature min-max (optionally log) scaling. Immutable after
/// construction; the order of features defines the vector layout.
class TransformSpec {
public:
  TransformSpec() = default;
  explicit TransformSpec(std::vector<FeatureScale> features);

  Eigen::Index size() const { return static_cast<Eigen::Index>(features_.size()); }
  const std::vector<FeatureScale>& features() const { return features_; }
  const FeatureScale& operator[](Eigen::Index i) const { return features_[static_cast<std::size_t>(i)]; }
  std::vector<std::string> names() const;

  bool operator==(const TransformSpec&) const = default;

private:
  std::vector<FeatureScale> features_;
};

Eigen::VectorXd normalize(const Eigen::VectorXd& physical, const TransformSpec& spec);
Eigen::VectorXd denormalize(const Eigen::VectorXd& normalized, const TransformSpec& spec);

/// Row-wise versions: one sample per row.
Eigen::MatrixXd normalize_rows(const Eigen::MatrixXd& physical, const TransformSpec& spec);
Eigen::MatrixXd denormalize_rows(const Eigen::MatrixXd& normalized, const TransformSpec& spec);

/// Diagonal of d(physical)/d(normalized) at `normalized`.
Eigen::VectorXd denormalize_derivative(const Eigen::VectorXd& normalized,
                                       const TransformSpec& spec);

/// Fisher-Pearson sample skewness m3 / m2^(3/2).
double sample_skewness(const Eigen::Ref<const Eigen::VectorXd>& values);

/// Fits bounds on `data` (one sample per row). A feature is log-scaled when
/// its skewness exceeds `skew_threshold` and all of its values are positive.
TransformSpec fit_transform(const Eigen::MatrixXd& data,
                            const std::vector<std::string>& names,
                            double skew_threshold);

/// Same as fit_transform but never log-scales.
TransformSpec fit_minmax(const Eigen::MatrixXd& data, const std::vector<std::string>& names);

inline constexpr const char* kTransformMagic = "PHYSPROJ-TRANSFORM-v1";

void write_transform(std::ostream& out, const TransformSpec& spec);
TransformSpec read_transform(std::istream& in);
void save_transform(const std::string& path, const TransformSpec& spec);
TransformSpec load_transform(const std::string& path);

} // namespace physproj
