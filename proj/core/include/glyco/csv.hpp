#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace glyco::csv {

// Shortest round-trip decimal form (std::to_chars); re-parsing yields the
// same bits, which the ingest round-trip property relies on.
std::string format_double(double value);

// Locale-independent parses; the whole field must be consumed.
double parse_double(std::string_view field, int line_no);
std::int64_t parse_int(std::string_view field, int line_no);

// RFC-4180-ish: fields with commas or quotes are double-quoted.
std::vector<std::string> split_line(std::string_view line);
std::string quote_field(std::string_view field);
std::string join_fields(const std::vector<std::string>& fields);

// Line-oriented reader that strips trailing \r and tracks line numbers.
class LineReader {
public:
  explicit LineReader(const std::filesystem::path& path);

  bool next(std::string& line);
  int line_no() const { return line_no_; }
  const std::filesystem::path& path() const { return path_; }

private:
  std::filesystem::path path_;
  std::ifstream in_;
  int line_no_ = 0;
};

} // namespace glyco::csv
