#include "fairsample/csv.hpp"

#include <charconv>
#include <system_error>

#include "fairsample/error.hpp"

namespace fairsample::csv {

std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (quoted) throw DataError("unterminated quoted field");
  fields.push_back(std::move(current));
  return fields;
}

bool Reader::next(std::vector<std::string>& fields) {
  while (std::getline(in_, buffer_)) {
    ++line_;
    if (!buffer_.empty() && buffer_.back() == '\r') buffer_.pop_back();
    if (buffer_.empty()) continue;
    try {
      fields = split_line(buffer_);
    } catch (const DataError& e) {
      throw DataError("line " + std::to_string(line_) + ": " + e.what());
    }
    return true;
  }
  return false;
}

std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string join(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out.push_back(',');
    out += escape(fields[i]);
  }
  out.push_back('\n');
  return out;
}

double parse_double(std::string_view field, std::string_view what) {
  // from_chars rejects a leading '+', which some writers emit.
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  double value = 0.0;
  const auto* first = field.data();
  const auto* last = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (field.empty() || ec != std::errc() || ptr != last) {
    throw DataError("invalid number '" + std::string(field) + "' for " + std::string(what));
  }
  return value;
}

std::int64_t parse_int(std::string_view field, std::string_view what) {
  std::int64_t value = 0;
  const auto* last = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), last, value);
  if (field.empty() || ec != std::errc() || ptr != last) {
    throw DataError("invalid integer '" + std::string(field) + "' for " + std::string(what));
  }
  return value;
}

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw InvariantError("to_chars failed");
  return std::string(buf, ptr);
}

}  // namespace fairsample::csv
