#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace tbip {

// Base class for every error the library raises. `exit_code()` is the process
// exit status the command-line tool maps the error to.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual int exit_code() const noexcept = 0;
};

// Unreadable or unwritable files, malformed file contents.
class IoError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 1; }
};

// Inputs that violate a documented precondition.
class ValidationError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 2; }
};

// Overflow, non-finite objectives, samples outside a prior's support.
class NumericError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 3; }
};

class AllDocumentsFiltered : public ValidationError {
 public:
  AllDocumentsFiltered()
      : ValidationError("preprocessing removed every document") {}
};

class ZeroVariance : public ValidationError {
 public:
  explicit ZeroVariance(const std::string& what_arg)
      : ValidationError(what_arg + ": input has zero variance") {}
};

class DebateTooSmall : public ValidationError {
 public:
  explicit DebateTooSmall(std::vector<std::string> labels);
  const std::vector<std::string>& labels() const noexcept { return labels_; }

 private:
  std::vector<std::string> labels_;
};

class NonFiniteElbo : public NumericError {
 public:
  explicit NonFiniteElbo(std::size_t step)
      : NumericError("ELBO became non-finite at step " + std::to_string(step)),
        step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

inline DebateTooSmall::DebateTooSmall(std::vector<std::string> labels)
    : ValidationError([&] {
        std::string msg = "debates too small (need >=2 authors and >=2 terms):";
        for (const auto& l : labels) msg += " " + l;
        return msg;
      }()),
      labels_(std::move(labels)) {}

}  // namespace tbip
