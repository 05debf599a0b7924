#pragma once

#include <charconv>
#include <cstdint>
#include <string>
#include <vector>

namespace texfv {

/// Shortest decimal string that round-trips to the same double.
std::string format_double(double v);

/// Fixed 6-significant-digit formatting used in tabular outputs.
std::string format_sig6(double v);

bool parse_double(const std::string& s, double& out);
bool parse_int64(const std::string& s, std::int64_t& out);

std::string trim(const std::string& s);

/// Splits one CSV line. Fields may be double-quoted; "" inside quotes is a
/// literal quote. Embedded newlines are not supported.
std::vector<std::string> split_csv_line(const std::string& line);

/// Quotes a field if it contains a comma, quote, or leading/trailing space.
std::string csv_field(const std::string& s);

std::vector<std::string> split(const std::string& s, char sep);
std::string join(const std::vector<std::string>& parts, const std::string& sep);

} // namespace texfv
