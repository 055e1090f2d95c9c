#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace fairsample::csv {

/// Splits one CSV record. Fields may be double-quoted; a doubled quote inside
/// a quoted field is a literal quote. Embedded newlines are not supported.
std::vector<std::string> split_line(std::string_view line);

/// Reads records line by line, accepting LF or CRLF endings. Blank lines are
/// skipped.
class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  bool next(std::vector<std::string>& fields);

  /// 1-based physical line number of the record last returned.
  std::size_t line() const { return line_; }

 private:
  std::istream& in_;
  std::string buffer_;
  std::size_t line_ = 0;
};

std::string escape(std::string_view field);

/// Joins fields with commas, escaping as needed, and appends LF.
std::string join(const std::vector<std::string>& fields);

/// Strict decimal parse; the whole field must be consumed. Throws DataError
/// mentioning `what` on failure.
double parse_double(std::string_view field, std::string_view what);
std::int64_t parse_int(std::string_view field, std::string_view what);

/// Shortest representation that parses back to the same double.
std::string format_double(double value);

}  // namespace fairsample::csv
