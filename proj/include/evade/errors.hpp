#pragma once

#include <stdexcept>
#include <string>

namespace evade {

// Error categories map onto the CLI exit-code contract:
//   0 success, 1 internal error, 2 input error, 3 empty-work error.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Malformed input: bad magic numbers, ragged rows, unparsable cells, invalid flags.
class FormatError : public Error {
public:
  using Error::Error;
};

// Missing or unreadable files.
class IoError : public Error {
public:
  using Error::Error;
};

// Solver did not reach the requested KKT tolerance within the update budget.
class TrainError : public Error {
public:
  TrainError(const std::string& what, double kkt_violation)
      : Error(what), kkt_violation_(kkt_violation) {}
  explicit TrainError(const std::string& what) : Error(what), kkt_violation_(0.0) {}

  double kkt_violation() const { return kkt_violation_; }

private:
  double kkt_violation_;
};

class AnalysisError : public Error {
public:
  using Error::Error;
};

// Nothing to do (e.g. no eligible test samples for a campaign).
class EmptyWorkError : public Error {
public:
  using Error::Error;
};

}  // namespace evade
