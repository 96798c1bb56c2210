#ifndef TNU_CSV_HPP
#define TNU_CSV_HPP

// CSV ingestion: one observation per row, numeric columns, optional header
// (detected when the first row is not entirely numeric), optional trailing
// column named "weight".

#include <Eigen/Dense>

#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "tnu/errors.hpp"
#include "tnu/sample.hpp"

namespace tnu {

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

/// Parses a finite double occupying the whole field.
inline bool parse_number(std::string_view f, double& out) {
  if (f.empty()) return false;
  if (f.front() == '+') f.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), out);
  return ec == std::errc() && ptr == f.data() + f.size() && std::isfinite(out);
}

}  // namespace detail

/// Parses CSV text. Row numbers in errors are 1-based physical lines.
inline EmpiricalSample parse_csv(std::istream& in) {
  std::string line;
  std::size_t row = 0;
  bool first = true;
  bool has_weight = false;
  std::size_t ncols = 0;
  std::vector<double> values;
  std::vector<double> weights;

  while (std::getline(in, line)) {
    ++row;
    if (row == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    if (detail::trim(line).empty()) continue;
    const std::vector<std::string_view> fields = detail::split_fields(line);

    if (first) {
      first = false;
      ncols = fields.size();
      double tmp;
      bool numeric = true;
      for (auto f : fields) numeric = numeric && detail::parse_number(f, tmp);
      if (!numeric) {
        has_weight = fields.back() == "weight";
        if (has_weight && ncols < 2) throw ParseError(row, "weight column without data columns");
        continue;
      }
    }
    if (fields.size() != ncols) {
      throw ParseError(row, "expected " + std::to_string(ncols) + " fields, found " + std::to_string(fields.size()));
    }
    for (std::size_t c = 0; c < fields.size(); ++c) {
      double v;
      if (!detail::parse_number(fields[c], v)) {
        throw ParseError(row, "non-numeric or non-finite cell '" + std::string(fields[c]) + "'");
      }
      if (has_weight && c + 1 == fields.size()) {
        if (v < 0.0) throw ParseError(row, "negative weight");
        weights.push_back(v);
      } else {
        values.push_back(v);
      }
    }
  }
  const std::size_t d = has_weight ? ncols - 1 : ncols;
  if (d == 0 || values.empty()) throw ParseError(row, "no observations");
  const std::size_t n = values.size() / d;

  Matrix pts(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < d; ++c) pts(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = values[i * d + c];
  if (!has_weight) return EmpiricalSample::uniform(std::move(pts));

  Vector w = Eigen::Map<const Vector>(weights.data(), static_cast<Eigen::Index>(weights.size()));
  if (!(w.sum() > 0.0)) throw ParseError(row, "weights sum to zero");
  return EmpiricalSample(std::move(pts), w / w.sum());
}

/// Reads a CSV file; "-" means standard input.
inline EmpiricalSample ingest_csv(const std::string& path) {
  if (path == "-") return parse_csv(std::cin);
  std::ifstream f(path);
  if (!f) throw ParseError(0, "cannot open '" + path + "'");
  return parse_csv(f);
}

inline EmpiricalSample parse_csv_string(const std::string& text) {
  std::istringstream in(text);
  return parse_csv(in);
}

}  // namespace tnu

#endif  // TNU_CSV_HPP
