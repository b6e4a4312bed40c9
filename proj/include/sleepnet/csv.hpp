#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace sleepnet::csv {

// Splits one line on commas. No quoting: none of the schemas need it.
std::vector<std::string_view> split(std::string_view line);

// Line reader that validates the header and tracks line numbers.
class Reader {
 public:
  Reader(const std::filesystem::path& path,
         const std::vector<std::string>& expected_header);

  // Returns false at EOF. Blank lines are skipped.
  bool next(std::vector<std::string_view>& fields);
  std::size_t line_number() const noexcept { return line_number_; }
  const std::string& file() const noexcept { return file_; }

 private:
  std::ifstream in_;
  std::string file_;
  std::string line_;
  std::size_t line_number_ = 0;
};

// Shortest round-trip representation; stable across runs.
std::string format_double(double value);

std::ofstream open_output(const std::filesystem::path& path);

bool parse_int(std::string_view text, long long& out);
bool parse_double(std::string_view text, double& out);

}  // namespace sleepnet::csv
