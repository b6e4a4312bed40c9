#include "sleepnet/csv.hpp"

#include <charconv>
#include <cmath>

#include "sleepnet/error.hpp"

namespace sleepnet::csv {

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

Reader::Reader(const std::filesystem::path& path,
               const std::vector<std::string>& expected_header)
    : in_(path), file_(path.string()) {
  if (!in_) throw IoError("cannot open " + file_);
  std::vector<std::string_view> header;
  if (!next(header)) {
    throw ParseError(file_, 1, "missing header row");
  }
  bool ok = header.size() == expected_header.size();
  for (std::size_t i = 0; ok && i < header.size(); ++i) {
    ok = header[i] == expected_header[i];
  }
  if (!ok) {
    std::string want;
    for (const auto& h : expected_header) {
      want += (want.empty() ? "" : ",") + h;
    }
    throw ParseError(file_, line_number_, "header does not match '" + want + "'");
  }
}

bool Reader::next(std::vector<std::string_view>& fields) {
  while (std::getline(in_, line_)) {
    ++line_number_;
    if (!line_.empty() && line_.back() == '\r') line_.pop_back();
    if (line_.empty()) continue;
    fields = split(line_);
    return true;
  }
  return false;
}

std::string format_double(double value) {
  if (value == 0.0) return "0";  // folds -0
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

bool parse_int(std::string_view text, long long& out) {
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc{} && ptr == text.data() + text.size();
}

bool parse_double(std::string_view text, double& out) {
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc{} && ptr == text.data() + text.size() &&
         std::isfinite(out);
}

}  // namespace sleepnet::csv
