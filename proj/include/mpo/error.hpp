#pragma once

#include <stdexcept>
#include <string>

namespace mpo {

/// Coarse classification used by the CLI to pick an exit code.
enum class ErrorKind { Input, Numerical };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what) : Error(ErrorKind::Input, what) {}
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(ErrorKind::Input, what) {}
};

class AlignmentError : public Error {
 public:
  explicit AlignmentError(const std::string& what) : Error(ErrorKind::Input, what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::Input, what) {}
};

/// Not enough history before a decision date.
class WarmupError : public Error {
 public:
  explicit WarmupError(const std::string& what) : Error(ErrorKind::Input, what) {}
};

/// Oracle asked to enumerate an instance beyond its combinatorial guard.
class GuardError : public Error {
 public:
  explicit GuardError(const std::string& what) : Error(ErrorKind::Input, what) {}
};

class IlliquidityError : public Error {
 public:
  explicit IlliquidityError(const std::string& what) : Error(ErrorKind::Numerical, what) {}
};

class InfeasibleError : public Error {
 public:
  explicit InfeasibleError(const std::string& what) : Error(ErrorKind::Numerical, what) {}
};

class BankruptcyError : public Error {
 public:
  explicit BankruptcyError(const std::string& what) : Error(ErrorKind::Numerical, what) {}
};

}  // namespace mpo
