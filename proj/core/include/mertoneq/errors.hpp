#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace mertoneq {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid model or configuration data, detected before any computation.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A function was queried outside the set where it is defined.
class DomainError : public Error {
 public:
  using Error::Error;
};

class SolverError : public Error {
 public:
  explicit SolverError(const std::string& what, std::vector<std::string> diagnostics = {})
      : Error(what), diagnostics_(std::move(diagnostics)) {}
  const std::vector<std::string>& diagnostics() const noexcept { return diagnostics_; }

 private:
  std::vector<std::string> diagnostics_;
};

class DegeneracyError : public SolverError {
 public:
  DegeneracyError(const std::string& what, double t, double x) : SolverError(what), t_(t), x_(x) {}
  double t() const noexcept { return t_; }
  double x() const noexcept { return x_; }

 private:
  double t_;
  double x_;
};

class ConvergenceError : public SolverError {
 public:
  ConvergenceError(const std::string& what, std::vector<double> history)
      : SolverError(what), history_(std::move(history)) {}
  const std::vector<double>& history() const noexcept { return history_; }

 private:
  std::vector<double> history_;
};

}  // namespace mertoneq
