#pragma once

#include <stdexcept>
#include <string>

namespace ond {

/// Invalid or inconsistent configuration (bad parameter values, malformed breakpoints, ...).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Control law evaluated outside its admissible set.
class SingularityError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Closed identification loop produced an unbounded output.
class InstabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A run did not settle within its horizon.
class TimeoutError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Requested operating point is outside the data or model range.
class OutOfRangeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ond
