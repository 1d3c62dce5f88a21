#pragma once

#include <stdexcept>
#include <string>

namespace teleop {

using InvalidArgument = std::invalid_argument;

/// Collinear, coincident or otherwise rank-deficient point sets.
class DegenerateGeometry : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Configuration problem, optionally tied to a file location.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& message, std::string file = {}, int line = -1)
      : std::runtime_error(format(message, file, line)), file_(std::move(file)), line_(line) {}

  const std::string& file() const { return file_; }
  int line() const { return line_; }

 private:
  static std::string format(const std::string& message, const std::string& file, int line) {
    if (file.empty()) return message;
    if (line < 0) return file + ": " + message;
    return file + ":" + std::to_string(line) + ": " + message;
  }

  std::string file_;
  int line_;
};

}  // namespace teleop
