#pragma once

#include <stdexcept>
#include <string>

namespace itr {

// Error categories double as CLI exit codes (see `itr --help`).
enum class ErrorKind {
  usage = 2,
  schema = 3,
  infeasible = 4,
  convergence = 5,
  io = 6,
  invalid_argument = 7,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string code, const std::string& message)
      : std::runtime_error(code + ": " + message), kind_(kind), code_(std::move(code)) {}

  ErrorKind kind() const noexcept { return kind_; }
  // Short machine-readable tag, e.g. "non-binary-treatment".
  const std::string& code() const noexcept { return code_; }

 private:
  ErrorKind kind_;
  std::string code_;
};

inline int exit_code(ErrorKind kind) { return static_cast<int>(kind); }

}  // namespace itr
