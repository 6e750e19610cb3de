#pragma once

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ergm/error.hpp"

namespace ergm {

// Shortest round-trip decimal form; `NA` for NaN and `Inf`/`-Inf` for infinities.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "NA";
  if (std::isinf(x)) return x > 0 ? "Inf" : "-Inf";
  if (x == 0.0) return "0";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

// Parses a real, accepting the same spellings format_double emits plus `inf`.
inline double parse_double(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s == "NA" || s == "NaN" || s == "nan") return std::nan("");
  if (s == "Inf" || s == "inf" || s == "+Inf" || s == "+inf") return HUGE_VAL;
  if (s == "-Inf" || s == "-inf") return -HUGE_VAL;
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || s.empty())
    throw DataError("cannot parse real number '" + std::string(s) + "'");
  return v;
}

inline bool try_parse_double(std::string_view s, double& out) {
  try {
    out = parse_double(s);
    return !std::isnan(out);
  } catch (const DataError&) {
    return false;
  }
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.emplace_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

inline void write_tsv_row(std::ostream& os, std::span<const std::string> cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) os << '\t';
    os << cells[i];
  }
  os << '\n';
}

inline void write_tsv_row(std::ostream& os, std::span<const double> values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) os << '\t';
    os << format_double(values[i]);
  }
  os << '\n';
}

}  // namespace ergm
