#pragma once

#include <stdexcept>
#include <string>

namespace fairsample {

/// Bad input data: malformed files, values outside their domain, budgets that
/// cannot be honoured.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Something that must hold by construction did not. Always a bug.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace fairsample
