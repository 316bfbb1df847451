#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace sgldr {

// Bad argument to a library call (dimension mismatch, non-positive bandwidth, ...).
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Invalid or inconsistent configuration. `line` is 0 when not tied to a file line.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Malformed input file. `offset` is a byte offset into the file when known.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (byte offset " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

// Non-finite values, failed factorizations and other numerical breakdowns.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what, long iteration = -1, long particle = -1)
      : std::runtime_error(what), iteration_(iteration), particle_(particle) {}

  long iteration() const noexcept { return iteration_; }
  long particle() const noexcept { return particle_; }

  // Gram matrix that could not be factorized, empty otherwise.
  Eigen::MatrixXd offending_matrix;

 private:
  long iteration_;
  long particle_;
};

}  // namespace sgldr
