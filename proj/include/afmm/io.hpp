#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "afmm/error.hpp"
#include "afmm/metrics.hpp"

namespace afmm::io {

using json = nlohmann::ordered_json;

/// Round-trip decimal formatting (17 significant digits).
inline std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace detail {

inline std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline double parse_double(const std::string& cell, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used != cell.size() || !std::isfinite(v)) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception&) {
    throw DataError(where + ": cannot parse '" + cell + "' as a finite number");
  }
}

inline long long parse_int(const std::string& cell, const std::string& where) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(cell, &used);
    if (used != cell.size()) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception&) {
    throw DataError(where + ": cannot parse '" + cell + "' as an integer");
  }
}

}  // namespace detail

/// A header row plus string cells; rows are checked for width.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<long> line_numbers;
  std::string path;

  std::size_t column(const std::string& name) const {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (header[c] == name) return c;
    }
    throw DataError(path + ": missing column '" + name + "'");
  }
  std::string where(std::size_t r) const { return path + ": row " + std::to_string(line_numbers[r]); }
};

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError(path + ": cannot open file");
  CsvTable t;
  t.path = path;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    auto cells = detail::split(line);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size()) {
      throw DataError(path + ": row " + std::to_string(line_no) + ": expected " +
                      std::to_string(t.header.size()) + " fields, found " + std::to_string(cells.size()));
    }
    t.rows.push_back(std::move(cells));
    t.line_numbers.push_back(line_no);
  }
  if (t.header.empty()) throw DataError(path + ": empty file");
  return t;
}

/// Univariate data: column y.
inline std::vector<double> read_univariate(const std::string& path) {
  const auto t = read_csv(path);
  const auto c = t.column("y");
  std::vector<double> y;
  for (std::size_t r = 0; r < t.rows.size(); ++r) y.push_back(detail::parse_double(t.rows[r][c], t.where(r)));
  if (y.empty()) throw DataError(path + ": no data rows");
  return y;
}

struct LongTable {
  std::vector<long long> id;
  std::vector<double> t;
  std::vector<double> y;
};

/// Functional data in long format: columns id, t, y.
inline LongTable read_long(const std::string& path) {
  const auto tab = read_csv(path);
  const auto ci = tab.column("id");
  const auto ct = tab.column("t");
  const auto cy = tab.column("y");
  LongTable out;
  for (std::size_t r = 0; r < tab.rows.size(); ++r) {
    out.id.push_back(detail::parse_int(tab.rows[r][ci], tab.where(r)));
    out.t.push_back(detail::parse_double(tab.rows[r][ct], tab.where(r)));
    out.y.push_back(detail::parse_double(tab.rows[r][cy], tab.where(r)));
  }
  if (out.id.empty()) throw DataError(path + ": no data rows");
  return out;
}

/// Labels from a two-column table (truth.csv or partition.csv: id,label), in row order.
inline Partition read_labels(const std::string& path) {
  const auto t = read_csv(path);
  const auto c = t.column("label");
  t.column("id");
  std::vector<int> labels;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    labels.push_back(static_cast<int>(detail::parse_int(t.rows[r][c], t.where(r))));
  }
  return canonicalize(labels);
}

/// Reads a numeric column.
inline std::vector<double> read_column(const std::string& path, const std::string& name) {
  const auto t = read_csv(path);
  const auto c = t.column(name);
  std::vector<double> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) out.push_back(detail::parse_double(t.rows[r][c], t.where(r)));
  return out;
}

/// Square matrix written by write_matrix (header "id,1,2,...", first column id).
inline Eigen::MatrixXd read_matrix(const std::string& path) {
  const auto t = read_csv(path);
  const auto n = static_cast<Eigen::Index>(t.rows.size());
  if (static_cast<Eigen::Index>(t.header.size()) != n + 1) throw DataError(path + ": matrix is not square");
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) {
      m(r, c) = detail::parse_double(t.rows[r][static_cast<std::size_t>(c + 1)], t.where(static_cast<std::size_t>(r)));
    }
  }
  return m;
}

// ---------------------------------------------------------------------------

inline std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path.string() + ": cannot open for writing");
  return out;
}

inline void write_json(const std::filesystem::path& path, const json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

inline json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError(path + ": cannot open file");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
}

/// n x n matrix with an id header row and id first column (ids 1..n).
inline void write_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
  auto out = open_out(path);
  out << "id";
  for (Eigen::Index c = 0; c < m.cols(); ++c) out << ',' << c + 1;
  out << '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    out << r + 1;
    for (Eigen::Index c = 0; c < m.cols(); ++c) out << ',' << fmt(m(r, c));
    out << '\n';
  }
}

inline void write_labels(const std::filesystem::path& path, std::span<const int> labels) {
  auto out = open_out(path);
  out << "id,label\n";
  for (std::size_t i = 0; i < labels.size(); ++i) out << i + 1 << ',' << labels[i] << '\n';
}

/// kplus,probability[,mc_se]
inline void write_kplus(const std::filesystem::path& path, std::span<const double> pmf,
                        std::span<const double> mc_se = {}) {
  auto out = open_out(path);
  out << "kplus,probability" << (mc_se.empty() ? "" : ",mc_se") << '\n';
  for (std::size_t k = 0; k < pmf.size(); ++k) {
    out << k + 1 << ',' << fmt(pmf[k]);
    if (!mc_se.empty()) out << ',' << fmt(mc_se[k]);
    out << '\n';
  }
}

inline void write_univariate(const std::filesystem::path& path, std::span<const double> y) {
  auto out = open_out(path);
  out << "y\n";
  for (double v : y) out << fmt(v) << '\n';
}

}  // namespace afmm::io
