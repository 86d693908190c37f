#pragma once

#include <stdexcept>
#include <string>

namespace poslink {

// Base for every error the library raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data (bad files, unknown tags, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

// Invalid arguments or configuration supplied by the caller.
class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace poslink
