#pragma once

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "calpha/errors.hpp"
#include "calpha/models/data.hpp"

// CSV schemas:
//   counts    header y,x1..xk        nonnegative integer y
//   durations header t,x1..xk        positive t
//   panel     header id,period,y     long format, complete N x T grid
// The intercept column is prepended automatically for regression models.
// Parse errors name the offending data row (1-based) and column.

namespace calpha::io {

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    // trim spaces and a trailing carriage return
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') {
    out.emplace_back();
  }
  return out;
}

inline double parse_cell(const std::string& cell, const std::string& file, std::size_t row,
                         const std::string& column) {
  if (cell.empty()) {
    throw DataError(file + ": row " + std::to_string(row) + ", column '" + column +
                    "': missing value");
  }
  double value = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
    throw DataError(file + ": row " + std::to_string(row) + ", column '" + column +
                    "': not a finite number");
  }
  return value;
}

struct RawTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

inline RawTable read_table(const std::string& path, const std::string& lead_column) {
  std::ifstream in(path);
  if (!in) {
    throw DataError(path + ": cannot open file");
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw DataError(path + ": empty file");
  }
  RawTable table;
  table.header = split_csv_line(line);
  if (table.header.empty() || table.header[0] != lead_column) {
    throw DataError(path + ": header must start with '" + lead_column + "'");
  }
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    ++row;
    const auto cells = split_csv_line(line);
    if (cells.size() != table.header.size()) {
      throw DataError(path + ": row " + std::to_string(row) + ": expected " +
                      std::to_string(table.header.size()) + " cells, found " +
                      std::to_string(cells.size()));
    }
    std::vector<double> parsed(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      parsed[c] = parse_cell(cells[c], path, row, table.header[c]);
    }
    table.rows.push_back(std::move(parsed));
  }
  if (table.rows.empty()) {
    throw DataError(path + ": no data rows");
  }
  return table;
}

inline numerics::Matrix design_with_intercept(const RawTable& t) {
  const Eigen::Index n = static_cast<Eigen::Index>(t.rows.size());
  const Eigen::Index k = static_cast<Eigen::Index>(t.header.size()) - 1;
  numerics::Matrix X = numerics::Matrix::Ones(n, k + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) {
      X(i, j + 1) = t.rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j) + 1];
    }
  }
  return X;
}

inline std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

} // namespace detail

inline models::CountData ingest_counts(const std::string& path) {
  const auto table = detail::read_table(path, "y");
  models::CountData d;
  d.y.resize(static_cast<Eigen::Index>(table.rows.size()));
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const double y = table.rows[i][0];
    if (y < 0.0 || y != std::floor(y)) {
      throw DataError(path + ": row " + std::to_string(i + 1) +
                      ", column 'y': counts must be nonnegative integers");
    }
    d.y(static_cast<Eigen::Index>(i)) = y;
  }
  d.X = detail::design_with_intercept(table);
  d.validate();
  return d;
}

inline models::DurationData ingest_durations(const std::string& path) {
  const auto table = detail::read_table(path, "t");
  models::DurationData d;
  d.t.resize(static_cast<Eigen::Index>(table.rows.size()));
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const double t = table.rows[i][0];
    if (!(t > 0.0)) {
      throw DataError(path + ": row " + std::to_string(i + 1) +
                      ", column 't': durations must be positive");
    }
    d.t(static_cast<Eigen::Index>(i)) = t;
  }
  d.X = detail::design_with_intercept(table);
  d.validate();
  return d;
}

inline models::GaussianRegressionData ingest_gaussian(const std::string& path) {
  const auto table = detail::read_table(path, "y");
  models::GaussianRegressionData d;
  d.y.resize(static_cast<Eigen::Index>(table.rows.size()));
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    d.y(static_cast<Eigen::Index>(i)) = table.rows[i][0];
  }
  d.X = detail::design_with_intercept(table);
  d.validate();
  return d;
}

inline models::PanelData ingest_panel(const std::string& path) {
  const auto table = detail::read_table(path, "id");
  if (table.header.size() != 3 || table.header[1] != "period" || table.header[2] != "y") {
    throw DataError(path + ": panel header must be id,period,y");
  }
  std::set<double> ids, periods;
  std::map<std::pair<double, double>, double> cells;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const double id = table.rows[i][0];
    const double period = table.rows[i][1];
    const auto key = std::make_pair(id, period);
    if (cells.count(key)) {
      throw DataError(path + ": row " + std::to_string(i + 1) +
                      ": duplicate (id, period) cell");
    }
    cells[key] = table.rows[i][2];
    ids.insert(id);
    periods.insert(period);
  }
  if (cells.size() != ids.size() * periods.size()) {
    throw DataError(path + ": unbalanced panel, the id x period grid is incomplete");
  }
  models::PanelData d;
  d.Y.resize(static_cast<Eigen::Index>(ids.size()), static_cast<Eigen::Index>(periods.size()));
  Eigen::Index i = 0;
  for (const double id : ids) {
    Eigen::Index t = 0;
    for (const double period : periods) {
      d.Y(i, t) = cells.at({id, period});
      ++t;
    }
    ++i;
  }
  d.validate();
  return d;
}

inline models::ObservationSet ingest(const std::string& path, const std::string& model_id) {
  if (model_id == "poisson-secmom" || model_id == "poisson-secfac" || model_id == "poisson") {
    return ingest_counts(path);
  }
  if (model_id == "exp-frailty" || model_id == "weibull-frailty" ||
      model_id == "exponential-ph" || model_id == "weibull-ph") {
    return ingest_durations(path);
  }
  if (model_id == "gaussian-panel") {
    return ingest_panel(path);
  }
  throw DataError("unknown model id '" + model_id + "'");
}

// Exports; doubles are written in shortest round-trip form so re-ingestion
// reproduces the data bit for bit.

inline void write_counts_csv(const models::CountData& d, std::ostream& out) {
  out << "y";
  for (Eigen::Index j = 1; j < d.X.cols(); ++j) out << ",x" << j;
  out << "\n";
  for (Eigen::Index i = 0; i < d.y.size(); ++i) {
    out << detail::format_double(d.y(i));
    for (Eigen::Index j = 1; j < d.X.cols(); ++j) out << "," << detail::format_double(d.X(i, j));
    out << "\n";
  }
}

inline void write_durations_csv(const models::DurationData& d, std::ostream& out) {
  out << "t";
  for (Eigen::Index j = 1; j < d.X.cols(); ++j) out << ",x" << j;
  out << "\n";
  for (Eigen::Index i = 0; i < d.t.size(); ++i) {
    out << detail::format_double(d.t(i));
    for (Eigen::Index j = 1; j < d.X.cols(); ++j) out << "," << detail::format_double(d.X(i, j));
    out << "\n";
  }
}

inline void write_panel_csv(const models::PanelData& d, std::ostream& out) {
  out << "id,period,y\n";
  for (Eigen::Index i = 0; i < d.Y.rows(); ++i) {
    for (Eigen::Index t = 0; t < d.Y.cols(); ++t) {
      out << (i + 1) << "," << (t + 1) << "," << detail::format_double(d.Y(i, t)) << "\n";
    }
  }
}

} // namespace calpha::io
