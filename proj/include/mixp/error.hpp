#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace mixp {

/// Failure classes. The CLI maps these onto process exit codes.
enum class ErrorKind {
  invalid_input,
  singular_point,
  numerical_integration,
  non_convergence,
  divergence,
  invariant_violation,
  verification,
  config,
  io,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct InvalidInput : Error {
  explicit InvalidInput(const std::string& what) : Error(ErrorKind::invalid_input, what) {}
};

struct SingularPoint : Error {
  explicit SingularPoint(const std::string& what) : Error(ErrorKind::singular_point, what) {}
};

struct IntegrationError : Error {
  IntegrationError(const std::string& what, double achieved)
      : Error(ErrorKind::numerical_integration,
              what + " (achieved relative error " + std::to_string(achieved) + ")"),
        achieved_tolerance(achieved) {}
  double achieved_tolerance;
};

struct NonConvergence : Error {
  NonConvergence(const std::string& what, std::vector<double> trace)
      : Error(ErrorKind::non_convergence, what), residual_trace(std::move(trace)) {}
  std::vector<double> residual_trace;
};

struct Divergence : Error {
  explicit Divergence(const std::string& what) : Error(ErrorKind::divergence, what) {}
};

/// Raised when a structural property of the approximation sequence fails.
/// `clause` names the violated statement, e.g. "monotonicity".
struct InvariantViolation : Error {
  InvariantViolation(std::string clause_, const std::string& what)
      : Error(ErrorKind::invariant_violation, clause_ + ": " + what), clause(std::move(clause_)) {}
  std::string clause;
};

struct VerificationError : Error {
  explicit VerificationError(const std::string& what) : Error(ErrorKind::verification, what) {}
};

/// Config/expression errors carry a 1-based line and column (0 when unknown).
struct ConfigError : Error {
  ConfigError(const std::string& what, int line_ = 0, int column_ = 0)
      : Error(ErrorKind::config, format(what, line_, column_)), line(line_), column(column_) {}
  int line;
  int column;

 private:
  static std::string format(const std::string& what, int line, int column) {
    if (line <= 0) return what;
    return what + " at line " + std::to_string(line) + ", column " + std::to_string(column);
  }
};

struct IoError : Error {
  explicit IoError(const std::string& what) : Error(ErrorKind::io, what) {}
};

}  // namespace mixp
