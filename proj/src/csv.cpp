#include "physproj/csv.hpp"

#include "physproj/errors.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace physproj::csv {

std::string format_shortest(double value) {
  char buffer[64];
  auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  if (ec != std::errc{}) throw NumericalError("cannot format number");
  return std::string(buffer, end);
}

std::string format_17g(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

Table::Table(std::vector<std::string> header) : header_(std::move(header)) {}

void Table::add_row(std::vector<std::string> cells) {
  require_shape(cells.size() == header_.size(),
                "csv row has " + std::to_string(cells.size()) +
                    " cells, header has " + std::to_string(header_.size()));
  rows_.push_back(std::move(cells));
}

namespace {
void join(std::ostream& out, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out << ',';
    out << cells[i];
  }
  out << '\n';
}
} // namespace

std::string Table::to_string() const {
  std::ostringstream out;
  join(out, header_);
  for (const auto& row : rows_) join(out, row);
  return out.str();
}

void Table::write(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open for writing: " + path.string());
  out << to_string();
}

Eigen::Index NumericTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<Eigen::Index>(i);
  throw ValidationError("missing csv column: " + name);
}

namespace {
std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    cells.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}
} // namespace

NumericTable read_numeric(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open csv: " + path.string());
  NumericTable table;
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("empty csv: " + path.string());
  table.header = split(line);
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto cells = split(line);
    if (cells.size() != table.header.size())
      throw ValidationError(path.string() + ":" + std::to_string(line_no) +
                            ": expected " + std::to_string(table.header.size()) +
                            " cells");
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& cell : cells) {
      double value = 0.0;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
      if (ec != std::errc{} || ptr != cell.data() + cell.size())
        throw ValidationError(path.string() + ":" + std::to_string(line_no) +
                              ": not a number: '" + cell + "'");
      row.push_back(value);
    }
    rows.push_back(std::move(row));
  }
  table.values.resize(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(table.header.size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      table.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  return table;
}

void write_matrix(const std::filesystem::path& path,
                  const std::vector<std::string>& header,
                  const Eigen::MatrixXd& values, bool seventeen_digits) {
  require_shape(static_cast<Eigen::Index>(header.size()) == values.cols(),
                "header/column count mismatch");
  Table table(header);
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    std::vector<std::string> cells;
    cells.reserve(header.size());
    for (Eigen::Index c = 0; c < values.cols(); ++c)
      cells.push_back(seventeen_digits ? format_17g(values(r, c))
                                       : format_shortest(values(r, c)));
    table.add_row(std::move(cells));
  }
  table.write(path);
}

} // namespace physproj::csv
