#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dmca {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Incompatible tensor extents or an invalid axis.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// NaN/Inf produced or consumed where finite values are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Out-of-domain hyperparameter (dropout rate, slope, vocab size, ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Malformed input data: bad labels, empty datasets, ids out of range.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Invalid or unknown configuration entries.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A metric that is undefined for its input (single-class AUC, degenerate min-max column).
class MetricError : public Error {
 public:
  using Error::Error;
};

/// SMILES syntax error, carrying the zero-based character offset where it was detected.
class ParseError : public Error {
 public:
  enum class Kind { Empty, UnbalancedParenthesis, UnmatchedRingClosure, UnknownAtom, DanglingBond, Syntax };

  ParseError(Kind kind, std::size_t offset, const std::string& message)
      : Error(message + " at offset " + std::to_string(offset)), kind_(kind), offset_(offset) {}

  Kind kind() const noexcept { return kind_; }
  std::size_t offset() const noexcept { return offset_; }

 private:
  Kind kind_;
  std::size_t offset_;
};

/// An atom whose bonds exceed every valence its element admits.
class ValenceError : public Error {
 public:
  ValenceError(std::size_t atom_index, const std::string& message)
      : Error(message), atom_index_(atom_index) {}

  std::size_t atom_index() const noexcept { return atom_index_; }

 private:
  std::size_t atom_index_;
};

const char* parse_error_kind_name(ParseError::Kind kind);

}  // namespace dmca
