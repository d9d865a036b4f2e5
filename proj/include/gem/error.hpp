#pragma once

#include <stdexcept>

namespace gem {

/// Malformed or unusable input data (files, corpora, ground truth).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical routine could not produce a finite, well-defined result.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gem
