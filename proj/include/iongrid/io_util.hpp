#pragma once

#include <string>
#include <vector>

namespace iongrid::io_util {

inline constexpr int kSchemaVersion = 1;

// Shortest round-trip decimal form; scientific notation whenever
// 0 < |x| < 1e-3 (CSV contract), locale-independent.
std::string format_double(double x);

// RFC 4180 escaping: quotes fields containing comma, quote, or newline.
std::string csv_escape(const std::string& field);

// Joins cells with commas and terminates with CRLF.
std::string csv_line(const std::vector<std::string>& cells);

// Least-squares slope of log(y) against log(x). Requires >= 2 points with
// positive x and y.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace iongrid::io_util
