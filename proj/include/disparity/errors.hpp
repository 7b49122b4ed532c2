#pragma once

#include <stdexcept>
#include <string>

namespace disparity {

// Unusable input: unreadable or malformed files, inconsistent manifests,
// mismatched model/feature pairings.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// A numeric computation cannot proceed (degenerate inputs, failed solves).
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace disparity
