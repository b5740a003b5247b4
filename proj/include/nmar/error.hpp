#ifndef NMAR_ERROR_HPP
#define NMAR_ERROR_HPP

#include <stdexcept>
#include <string>

namespace nmar {

/// Malformed input data or a dataset/model mismatch.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical routine could not produce a usable answer.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace nmar

#endif  // NMAR_ERROR_HPP
