#pragma once

#include <stdexcept>

namespace pme {

// Error categories; the CLI maps them to exit codes 1/2/3.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace pme
