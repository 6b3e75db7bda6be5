#pragma once

#include <stdexcept>
#include <string>

namespace strongsig {

// Malformed input files (CLI exit code 2).
struct input_error : std::runtime_error {
  explicit input_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Data incompatible with the requested design, e.g. unpaired columns
// (CLI exit code 3).
struct design_error : std::runtime_error {
  explicit design_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Numeric / estimator failure, e.g. central matching with a non-concave
// central density (CLI exit code 4).
struct estimator_error : std::runtime_error {
  explicit estimator_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace strongsig
