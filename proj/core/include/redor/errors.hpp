#pragma once

#include <stdexcept>
#include <string>

namespace redor {

// Violated precondition or shape contract on a public operation.
class ContractError : public std::invalid_argument {
public:
  explicit ContractError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Normal-equations system could not be solved even after jitter.
class SingularSystemError : public std::runtime_error {
public:
  explicit SingularSystemError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input file; carries the 1-based line where parsing failed.
class ParseError : public std::runtime_error {
public:
  ParseError(const std::string& msg, long line)
      : std::runtime_error(msg + " (line " + std::to_string(line) + ")"), line_(line) {}
  long line() const { return line_; }

private:
  long line_;
};

// Well-formed file whose contents violate a declared invariant.
class ValidationError : public std::runtime_error {
public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

class IoError : public std::runtime_error {
public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ContractError(msg);
}

}  // namespace redor
