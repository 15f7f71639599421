#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "iwgvem/model.hpp"

namespace iwgvem {

// Numeric CSV reader. Accepts comma-separated numeric rows with an optional
// single header line, which is detected by a non-numeric first field and
// skipped. Ragged rows, empty files, and unparseable fields raise DataError.
Eigen::MatrixXd read_numeric_csv(const std::string& path);

// Reads a response matrix (persons by items, entries 0/1) and validates it.
ResponseMatrix read_responses(const std::string& path);

// Reads a loading mask (items by factors, entries 0/1) and validates it.
LoadingStructure read_mask(const std::string& path);

// Writes a matrix as CSV with full double precision. When column names are
// given they become the header line and must match the column count.
void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& mat,
                      const std::vector<std::string>& column_names = {});

// Writes an already-formatted CSV/text payload verbatim.
void write_text_file(const std::string& path, const std::string& content);

}  // namespace iwgvem
