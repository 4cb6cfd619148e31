#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace evaq {

// Splits one CSV line. Handles RFC-4180 double-quoted fields ("" escapes a
// quote); does not handle embedded newlines.
std::vector<std::string> split_csv_line(const std::string& line);

// Quotes a field if it contains a comma, quote, or leading '#'.
std::string csv_quote(const std::string& field);

// Lines starting with '#' are artifact metadata; blank lines are ignored.
inline bool is_comment_or_blank(const std::string& line) {
  for (char c : line) {
    if (c == '#') return true;
    if (c != ' ' && c != '\t' && c != '\r') return false;
  }
  return true;
}

// Strips a trailing '\r' so CRLF inputs parse like LF.
inline void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

// Strict numeric parsing (whole field must convert). Throw DataError naming
// `field` on failure.
double parse_double_strict(std::string_view s, const char* field);
std::int64_t parse_int_strict(std::string_view s, const char* field);

// Stable formatting for artifact files (never locale dependent).
std::string fmt_fixed(double v, int decimals);
std::string fmt_general(double v); // shortest %.17g-style round-trippable

std::uint64_t fnv1a64(std::string_view bytes);
std::uint64_t fnv1a64_file(const std::string& path);
std::string hex64(std::uint64_t v);

std::string read_file(const std::string& path);
// Writes contents to path via a temp file + rename in the same directory.
void atomic_write_file(const std::string& path, std::string_view contents);

// First line of every emitted artifact: "# <tool> <version> config=<digest>".
std::string artifact_header(const std::string& config_digest);

} // namespace evaq
