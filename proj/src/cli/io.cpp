#include "otecon/cli/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <tuple>

#include "otecon/errors.hpp"

namespace otecon::cli {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool parse_double(const std::string& text, double& out) {
  const std::string t = trim(text);
  if (t.empty()) return false;
  const char* begin = t.data();
  if (*begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, t.data() + t.size(), out);
  return ec == std::errc() && ptr == t.data() + t.size() && std::isfinite(out);
}

std::size_t as_index(const std::string& path, const CsvRow& row, std::size_t col) {
  const double v = row.fields[col];
  if (v < 0.0 || v != std::floor(v)) {
    throw CsvError(path, row.line, "expected a nonnegative integer index in column " +
                                       std::to_string(col + 1));
  }
  return static_cast<std::size_t>(v);
}

void require_width(const std::string& path, const CsvRow& row, std::size_t width) {
  if (row.fields.size() != width) {
    throw CsvError(path, row.line, "expected " + std::to_string(width) + " columns, found " +
                                       std::to_string(row.fields.size()));
  }
}

}  // namespace

CsvError::CsvError(const std::string& path, std::size_t line, const std::string& message)
    : std::runtime_error(line > 0 ? path + ":" + std::to_string(line) + ": " + message
                                  : path + ": " + message),
      line_(line) {}

std::vector<CsvRow> read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CsvError(path, 0, "cannot open file");
  std::vector<CsvRow> rows;
  std::string text;
  std::size_t line = 0;
  bool first_content = true;
  while (std::getline(in, text)) {
    ++line;
    const std::string t = trim(text);
    if (t.empty() || t.front() == '#') continue;
    CsvRow row{line, {}};
    bool numeric = true;
    std::size_t start = 0;
    while (true) {
      const auto comma = t.find(',', start);
      const std::string cell = t.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      double v = 0.0;
      if (!parse_double(cell, v)) {
        numeric = false;
        break;
      }
      row.fields.push_back(v);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    const bool header = !numeric && first_content;
    first_content = false;
    if (header) continue;
    if (!numeric) throw CsvError(path, line, "non-numeric field");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw CsvError(path, 0, "no data rows");
  return rows;
}

MatrixXd read_matrix(const std::string& path) {
  const auto rows = read_csv(path);
  const std::size_t width = rows.front().fields.size();
  MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    require_width(path, rows[r], width);
    for (std::size_t c = 0; c < width; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r].fields[c];
    }
  }
  return m;
}

VectorXd read_vector(const std::string& path) {
  const auto rows = read_csv(path);
  VectorXd v(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    require_width(path, rows[r], 1);
    v[static_cast<Eigen::Index>(r)] = rows[r].fields[0];
  }
  return v;
}

Sample1D read_sample(const std::string& path) {
  const VectorXd v = read_vector(path);
  return Sample1D({v.data(), v.data() + v.size()});
}

DiscreteMeasure read_measure(const std::string& path, bool probability) {
  const MatrixXd m = read_matrix(path);
  try {
    if (m.cols() == 1) return DiscreteMeasure(m.col(0), probability);
    return DiscreteMeasure(m.col(0), m.rightCols(m.cols() - 1), probability);
  } catch (const DomainError& e) {
    throw CsvError(path, 0, e.what());
  }
}

GaussianMeasure read_gaussian(const std::string& path) {
  const auto rows = read_csv(path);
  const std::size_t d = rows.front().fields.size();
  if (rows.size() != d + 1) {
    throw CsvError(path, 0, "expected a mean row followed by " + std::to_string(d) +
                                " covariance rows");
  }
  VectorXd mean(static_cast<Eigen::Index>(d));
  MatrixXd cov(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (std::size_t r = 0; r <= d; ++r) {
    require_width(path, rows[r], d);
    for (std::size_t c = 0; c < d; ++c) {
      if (r == 0) {
        mean[static_cast<Eigen::Index>(c)] = rows[r].fields[c];
      } else {
        cov(static_cast<Eigen::Index>(r - 1), static_cast<Eigen::Index>(c)) = rows[r].fields[c];
      }
    }
  }
  try {
    return GaussianMeasure(mean, cov);
  } catch (const DomainError& e) {
    throw CsvError(path, 0, e.what());
  }
}

BinaryRelation read_relation(const std::string& path) {
  const MatrixXd m = read_matrix(path);
  if ((m.array() != 0.0 && m.array() != 1.0).any()) {
    throw CsvError(path, 0, "relation entries must be 0 or 1");
  }
  return BinaryRelation(m.cast<int>());
}

MatchingTable read_matching_table(const std::string& path) {
  const auto rows = read_csv(path);
  std::map<std::pair<std::size_t, std::size_t>, double> cells;
  std::size_t nx = 0;
  std::size_t ny = 0;
  for (const auto& row : rows) {
    require_width(path, row, 3);
    const std::size_t x = as_index(path, row, 0);
    const std::size_t y = as_index(path, row, 1);
    if (x == 0 && y == 0) throw CsvError(path, row.line, "x = 0 and y = 0 together is not a cell");
    if (!(row.fields[2] > 0.0)) throw CsvError(path, row.line, "counts must be positive");
    if (!cells.emplace(std::make_pair(x, y), row.fields[2]).second) {
      throw CsvError(path, row.line, "duplicate cell");
    }
    nx = std::max(nx, x);
    ny = std::max(ny, y);
  }
  const auto get = [&](std::size_t x, std::size_t y) {
    const auto it = cells.find({x, y});
    if (it == cells.end()) {
      throw CsvError(path, 0, "missing cell x=" + std::to_string(x) + ", y=" + std::to_string(y));
    }
    return it->second;
  };
  if (nx == 0 || ny == 0) throw CsvError(path, 0, "table needs at least one type on each side");
  MatrixXd flows(static_cast<Eigen::Index>(nx), static_cast<Eigen::Index>(ny));
  VectorXd sx(static_cast<Eigen::Index>(nx));
  VectorXd sy(static_cast<Eigen::Index>(ny));
  for (std::size_t x = 1; x <= nx; ++x) {
    sx[static_cast<Eigen::Index>(x - 1)] = get(x, 0);
    for (std::size_t y = 1; y <= ny; ++y) {
      flows(static_cast<Eigen::Index>(x - 1), static_cast<Eigen::Index>(y - 1)) = get(x, y);
    }
  }
  for (std::size_t y = 1; y <= ny; ++y) sy[static_cast<Eigen::Index>(y - 1)] = get(0, y);
  return MatchingTable(flows, sx, sy);
}

SurplusBasis read_basis(const std::string& path, Eigen::Index rows_x, Eigen::Index cols_y) {
  const auto rows = read_csv(path);
  std::vector<std::tuple<std::size_t, std::size_t, std::size_t, double>> entries;
  std::size_t k_max = 0;
  for (const auto& row : rows) {
    require_width(path, row, 4);
    const std::size_t x = as_index(path, row, 0);
    const std::size_t y = as_index(path, row, 1);
    const std::size_t k = as_index(path, row, 2);
    if (x < 1 || y < 1 || k < 1 || static_cast<Eigen::Index>(x) > rows_x ||
        static_cast<Eigen::Index>(y) > cols_y) {
      throw CsvError(path, row.line, "index out of range");
    }
    entries.emplace_back(x - 1, y - 1, k - 1, row.fields[3]);
    k_max = std::max(k_max, k);
  }
  std::vector<MatrixXd> basis(k_max, MatrixXd::Zero(rows_x, cols_y));
  for (const auto& [x, y, k, v] : entries) {
    basis[k](static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y)) = v;
  }
  return SurplusBasis(std::move(basis));
}

}  // namespace otecon::cli
