#pragma once

#include <stdexcept>
#include <string>

namespace iwgvem {

// Invalid argument values or shapes (non-binary responses, dimension
// mismatches, out-of-range configuration).
class DomainError : public std::invalid_argument {
 public:
  explicit DomainError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Malformed or unreadable input files.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Factorization or solve failure on a matrix that should be positive
// definite or full rank.
class LinAlgError : public std::runtime_error {
 public:
  explicit LinAlgError(const std::string& msg) : std::runtime_error(msg) {}
};

// All importance weights in a block are zero or non-finite.
class DegenerateWeightsError : public std::runtime_error {
 public:
  explicit DegenerateWeightsError(const std::string& msg)
      : std::runtime_error(msg) {}
};

// Simulation design that cannot be realized (infeasible item partition,
// no admissible covariance draw).
class DesignError : public std::runtime_error {
 public:
  explicit DesignError(const std::string& msg) : std::runtime_error(msg) {}
};

// Oblique rotation produced a singular or non-finite transform.
class RotationError : public std::runtime_error {
 public:
  explicit RotationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Every learning-rate candidate diverged.
class SelectionError : public std::runtime_error {
 public:
  explicit SelectionError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace iwgvem
