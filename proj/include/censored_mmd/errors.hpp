#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace censored_mmd {

/// A censored point sits so close to 1 that the interval (u, 1) its mass is
/// spread over has collapsed.
class DegenerateCensoring : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// The hypothesised distribution function is not a valid CDF on the data.
class InvalidModel : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A Pearson cell has zero expected frequency.
class EmptyCell : public std::runtime_error {
 public:
  EmptyCell(std::size_t cell, const std::string& what)
      : std::runtime_error(what), cell_(cell) {}
  std::size_t cell() const noexcept { return cell_; }

 private:
  std::size_t cell_;
};

class ZeroVariance : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RootNotBracketed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Censoring calibration target cannot be reached for the model.
class NoSolution : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text; `row()` is 1-based and counts the header as row 1.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t row, const std::string& what)
      : std::runtime_error("row " + std::to_string(row) + ": " + what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

}  // namespace censored_mmd
