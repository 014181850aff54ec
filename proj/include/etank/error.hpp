#pragma once

#include <stdexcept>
#include <string>

namespace etank {

// Invalid numeric input or violated precondition of a domain operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Malformed or inconsistent experiment configuration. `line` is 1-based, 0 when unknown.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& message, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + message
                                    : message),
        line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

// A loss or parameter became non-finite during training.
class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(const std::string& message, std::string dump_path)
      : std::runtime_error(message), dump_path_(std::move(dump_path)) {}
  const std::string& dump_path() const noexcept { return dump_path_; }

 private:
  std::string dump_path_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace etank
