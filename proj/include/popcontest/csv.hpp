#pragma once

#include <charconv>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "errors.hpp"

namespace popcontest {

// Shortest decimal form that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) return "nan";
  return std::string(buf, end);
}

inline double parse_double(std::string_view s, std::size_t line) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw ParseError(line, "bad number '" + std::string(s) + "'");
  return v;
}

inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(std::move(cur));
  return out;
}

// Provenance written as a leading "# key=value ..." comment line on CSV outputs.
struct Provenance {
  std::string config_hash;
  std::uint64_t seed = 0;

  std::string comment() const { return "# config_hash=" + config_hash + " seed=" + std::to_string(seed); }
};

// Reads the next line that is neither empty nor a '#' comment.
inline bool next_data_line(std::istream& in, std::string& line, std::size_t& lineno) {
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (line.back() == '\r') line.pop_back();
    return true;
  }
  return false;
}

}  // namespace popcontest
