#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "otecon/bounds.hpp"
#include "otecon/matching.hpp"
#include "otecon/measures.hpp"

namespace otecon::cli {

/// Malformed input file; `line` is 1-based (0 when not tied to a line).
class CsvError : public std::runtime_error {
 public:
  CsvError(const std::string& path, std::size_t line, const std::string& message);

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct CsvRow {
  std::size_t line;
  std::vector<double> fields;
};

/// Numeric rows of a comma-separated file. Blank lines and lines starting
/// with '#' are skipped; a non-numeric first row is taken as a header.
std::vector<CsvRow> read_csv(const std::string& path);

MatrixXd read_matrix(const std::string& path);
/// One value per row.
VectorXd read_vector(const std::string& path);
Sample1D read_sample(const std::string& path);
/// Rows `w,x1..xd`; a single column gives a measure without points.
DiscreteMeasure read_measure(const std::string& path, bool probability = true);
/// First row the mean, next d rows the covariance.
GaussianMeasure read_gaussian(const std::string& path);
BinaryRelation read_relation(const std::string& path);
/// Rows `x,y,count` with 1-based types; x = 0 or y = 0 marks singles.
MatchingTable read_matching_table(const std::string& path);
/// Rows `x,y,k,value` with 1-based indices; unlisted entries are zero.
SurplusBasis read_basis(const std::string& path, Eigen::Index rows, Eigen::Index cols);

}  // namespace otecon::cli
