#pragma once

#include <stdexcept>
#include <string>

namespace mixpc {

/// Invalid user input (bad mixture spec, bad config, violated precondition).
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical failure (ill-conditioning, oracle mismatch beyond tolerance).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Moment matrix could not be factored even after the jitter schedule.
class IllConditionedMoments : public NumericalError {
 public:
  explicit IllConditionedMoments(const std::string& what) : NumericalError(what) {}
};

/// File-level problems: missing files, malformed tables, bad JSON.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mixpc
