#pragma once

#include <stdexcept>
#include <string>

namespace sleepnet {

// Base of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Missing or unreadable files, bad output directories.
class IoError : public Error {
 public:
  using Error::Error;
};

// A malformed input row. Carries the file and 1-based line number.
class ParseError : public Error {
 public:
  ParseError(std::string file, std::size_t line, const std::string& what)
      : Error(file + ":" + std::to_string(line) + ": " + what),
        file_(std::move(file)),
        line_(line) {}

  const std::string& file() const noexcept { return file_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string file_;
  std::size_t line_;
};

// Invalid arguments or numerically impossible states.
class DomainError : public Error {
 public:
  using Error::Error;
};

}  // namespace sleepnet
