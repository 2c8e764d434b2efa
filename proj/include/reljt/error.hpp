#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace reljt {

// Base of every error raised by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DuplicateConfiguration : public Error { using Error::Error; };
class ValueOutOfDomain : public Error { using Error::Error; };
class UnknownVariable : public Error { using Error::Error; };
class UnknownValueLabel : public Error { using Error::Error; };
class NotASubset : public Error { using Error::Error; };
class NotAMember : public Error { using Error::Error; };
class SchemaMismatch : public Error { using Error::Error; };
class DuplicateHyperedge : public Error { using Error::Error; };
class TargetEvidenceOverlap : public Error { using Error::Error; };

/// Model file that parses but does not describe a valid model.
class ModelError : public Error { using Error::Error; };

/// Raised when a relation (or an evidence-restricted query) has zero total mass.
class ZeroMass : public Error { using Error::Error; };

/// Raised when twig reduction stalls. core() holds the hyperedge indices
/// (into the input hypergraph) that could not be reduced.
class NotHypertree : public Error {
 public:
  NotHypertree(const std::string& what, std::vector<std::size_t> core)
      : Error(what), core_(std::move(core)) {}
  const std::vector<std::size_t>& core() const { return core_; }

 private:
  std::vector<std::size_t> core_;
};

/// Malformed probability request; position is a 0-based character offset.
class SyntaxError : public Error {
 public:
  SyntaxError(const std::string& what, std::size_t position)
      : Error(what + " at position " + std::to_string(position)), position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

/// Model file that is not well-formed; line and column are 1-based.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column)
      : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what),
        line_(line), column_(column) {}
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

}  // namespace reljt
