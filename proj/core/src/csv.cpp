#include "iwgvem/csv.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "iwgvem/errors.hpp"

namespace iwgvem {

namespace {

bool parse_double(const std::string& field, double& out) {
  const char* begin = field.c_str();
  char* end = nullptr;
  errno = 0;
  out = std::strtod(begin, &end);
  if (end == begin || errno == ERANGE) return false;
  while (*end == ' ' || *end == '\t' || *end == '\r') ++end;
  return *end == '\0';
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  std::stringstream ss(line);
  while (std::getline(ss, cur, ',')) fields.push_back(cur);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

void check_binary(const Eigen::MatrixXd& mat, const std::string& path,
                  const char* what) {
  if (((mat.array() != 0.0) && (mat.array() != 1.0)).any())
    throw DataError(std::string(what) + " entries in " + path +
                    " must be 0 or 1");
}

}  // namespace

Eigen::MatrixXd read_numeric_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);

  std::vector<std::vector<double>> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    std::vector<double> row;
    row.reserve(fields.size());
    bool ok = true;
    for (const auto& f : fields) {
      double v;
      if (!parse_double(f, v)) {
        ok = false;
        break;
      }
      row.push_back(v);
    }
    if (!ok) {
      if (first) {  // header line
        first = false;
        continue;
      }
      throw DataError("non-numeric field in " + path + ": " + line);
    }
    first = false;
    if (!rows.empty() && row.size() != rows.front().size())
      throw DataError("ragged row in " + path);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError("no numeric rows in " + path);

  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index r = 0; r < out.rows(); ++r)
    for (Eigen::Index c = 0; c < out.cols(); ++c)
      out(r, c) = rows[static_cast<std::size_t>(r)]
                      [static_cast<std::size_t>(c)];
  return out;
}

ResponseMatrix read_responses(const std::string& path) {
  ResponseMatrix out;
  out.data = read_numeric_csv(path);
  check_binary(out.data, path, "response");
  validate(out);
  return out;
}

LoadingStructure read_mask(const std::string& path) {
  LoadingStructure out;
  out.mask = read_numeric_csv(path);
  check_binary(out.mask, path, "mask");
  validate(out);
  return out;
}

void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& mat,
                      const std::vector<std::string>& column_names) {
  if (!column_names.empty() &&
      static_cast<Eigen::Index>(column_names.size()) != mat.cols())
    throw DomainError("header size does not match column count");
  std::string body;
  if (!column_names.empty()) {
    for (std::size_t c = 0; c < column_names.size(); ++c) {
      if (c) body += ',';
      body += column_names[c];
    }
    body += '\n';
  }
  char buf[48];
  for (Eigen::Index r = 0; r < mat.rows(); ++r) {
    for (Eigen::Index c = 0; c < mat.cols(); ++c) {
      if (c) body += ',';
      std::snprintf(buf, sizeof buf, "%.17g", mat(r, c));
      body += buf;
    }
    body += '\n';
  }
  write_text_file(path, body);
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << content;
  if (!out) throw DataError("write failed for " + path);
}

}  // namespace iwgvem
