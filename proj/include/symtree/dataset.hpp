#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "symtree/expr.hpp"

namespace symtree {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// N_d input rows with named features plus one scalar target per row.
struct Dataset {
  std::vector<std::string> feature_names;
  RowMatrix x;
  Eigen::VectorXd y;

  std::size_t rows() const { return static_cast<std::size_t>(x.rows()); }
  std::size_t features() const { return feature_names.size(); }
  bool empty() const { return x.rows() == 0; }

  std::span<const double> row(std::size_t i) const {
    return {x.data() + i * static_cast<std::size_t>(x.cols()),
            static_cast<std::size_t>(x.cols())};
  }

  /// Keeps the listed rows, in the given order.
  Dataset subset(const std::vector<std::size_t>& idx) const {
    Dataset out;
    out.feature_names = feature_names;
    out.x.resize(static_cast<Eigen::Index>(idx.size()), x.cols());
    out.y.resize(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t r = 0; r < idx.size(); ++r) {
      out.x.row(static_cast<Eigen::Index>(r)) =
          x.row(static_cast<Eigen::Index>(idx[r]));
      out.y[static_cast<Eigen::Index>(r)] = y[static_cast<Eigen::Index>(idx[r])];
    }
    return out;
  }
};

class CsvError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Phi[i][k] = phi_k(x_i). Domain errors name the row and the basis function.
inline Eigen::MatrixXd featurize(const BasisSet& basis, const Dataset& data) {
  if (basis.universe() != data.feature_names) {
    // Rebind by name when the basis was parsed over a different universe.
    BasisSet rebound(basis.texts(), data.feature_names, basis.role());
    return featurize(rebound, data);
  }
  Eigen::MatrixXd phi(static_cast<Eigen::Index>(data.rows()),
                      static_cast<Eigen::Index>(basis.size()));
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const auto row = data.row(i);
    for (std::size_t k = 0; k < basis.size(); ++k) {
      try {
        phi(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
            basis.eval(k, row);
      } catch (const DomainError& e) {
        throw DomainError("row " + std::to_string(i) + ", basis function '" +
                          basis.texts()[k] + "': " + e.what());
      }
    }
  }
  return phi;
}

inline std::string format_g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    cells.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace detail

/// Header row: feature names then `y`; one sample per line. An empty
/// `target` reads every column as a feature and leaves y at zero.
inline Dataset read_csv(std::istream& in, const std::string& target = "y") {
  std::string line;
  if (!std::getline(in, line)) throw CsvError("missing header row");
  auto header = detail::split_csv_line(line);
  std::ptrdiff_t target_col = -1;
  Dataset data;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == target) {
      target_col = static_cast<std::ptrdiff_t>(c);
    } else {
      data.feature_names.push_back(header[c]);
    }
  }
  if (target_col < 0 && !target.empty()) {
    throw CsvError("no '" + target + "' column in header");
  }
  std::vector<double> xs;
  std::vector<double> ys;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size()) {
      throw CsvError("line " + std::to_string(line_no) + ": expected " +
                     std::to_string(header.size()) + " fields, got " +
                     std::to_string(cells.size()));
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      double v = 0.0;
      const auto& s = cells[c];
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw CsvError("line " + std::to_string(line_no) + ": bad number '" +
                       s + "'");
      }
      if (static_cast<std::ptrdiff_t>(c) == target_col) {
        ys.push_back(v);
      } else {
        xs.push_back(v);
      }
    }
    if (target_col < 0) ys.push_back(0.0);
  }
  const auto n = static_cast<Eigen::Index>(ys.size());
  const auto p = static_cast<Eigen::Index>(data.feature_names.size());
  data.x = Eigen::Map<RowMatrix>(xs.data(), n, p);
  data.y = Eigen::Map<Eigen::VectorXd>(ys.data(), n);
  return data;
}

inline Dataset read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CsvError("cannot open '" + path + "'");
  return read_csv(in);
}

inline void write_csv(std::ostream& out, const Dataset& data) {
  for (const auto& name : data.feature_names) out << name << ',';
  out << "y\n";
  for (std::size_t i = 0; i < data.rows(); ++i) {
    for (std::size_t c = 0; c < data.features(); ++c) {
      out << format_g17(data.x(static_cast<Eigen::Index>(i),
                               static_cast<Eigen::Index>(c)))
          << ',';
    }
    out << format_g17(data.y[static_cast<Eigen::Index>(i)]) << '\n';
  }
}

inline void write_csv_file(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw CsvError("cannot write '" + path + "'");
  write_csv(out, data);
}

}  // namespace symtree
