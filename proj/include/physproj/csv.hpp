#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <string>
#include <vector>

namespace physproj::csv {

/// Shortest decimal string that parses back to the same double.
std::string format_shortest(double value);
/// Fixed 17-significant-digit rendering.
std::string format_17g(double value);

/// Row-oriented CSV builder. Cells are stored as text; LF line endings,
/// no quoting (cells never contain commas).
class Table {
public:
  explicit Table(std::vector<std::string> header);

  const std::vector<std::string>& header() const { return header_; }
  std::size_t rows() const { return rows_.size(); }
  const std::vector<std::vector<std::string>>& data() const { return rows_; }

  void add_row(std::vector<std::string> cells);

  std::string to_string() const;
  void write(const std::filesystem::path& path) const;

private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

/// Numeric CSV contents: named columns over a dense row-major view.
struct NumericTable {
  std::vector<std::string> header;
  Eigen::MatrixXd values;  // rows x columns

  Eigen::Index column(const std::string& name) const;
};

NumericTable read_numeric(const std::filesystem::path& path);

/// Write a matrix with a header, one row per sample.
void write_matrix(const std::filesystem::path& path,
                  const std::vector<std::string>& header,
                  const Eigen::MatrixXd& values, bool seventeen_digits);

} // namespace physproj::csv
