#pragma once

#include <stdexcept>
#include <string>

namespace stratroute {

// Malformed or inconsistent input data. Maps to CLI exit status 2.
struct DataError : std::runtime_error {
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Strategy execution or transport failure. Maps to CLI exit status 3.
struct ExecutorError : std::runtime_error {
  explicit ExecutorError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace stratroute
