#pragma once

#include <stdexcept>
#include <string>

namespace pnpfv {

// Base error carrying the process exit code used by the command line driver:
// 2 configuration/data, 3 mesh, 4 solver, 5 I/O.
class Error : public std::runtime_error {
 public:
  Error(const std::string& msg, int exit_code)
      : std::runtime_error(msg), exit_code_(exit_code) {}
  int exit_code() const { return exit_code_; }

 private:
  int exit_code_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error(msg, 2) {}
};

// Out-of-domain input to a numerical kernel or diagnostic (nonpositive
// fraction, kernel overflow guard, point outside the simplex).
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& msg) : Error(msg, 2) {}
};

class MeshError : public Error {
 public:
  explicit MeshError(const std::string& msg) : Error(msg, 3) {}
};

class SolverError : public Error {
 public:
  explicit SolverError(const std::string& msg) : Error(msg, 4) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& msg) : Error(msg, 5) {}
};

}  // namespace pnpfv
