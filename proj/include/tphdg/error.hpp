#pragma once

#include <stdexcept>
#include <string>

namespace tphdg {

/// Numerical or contract failure inside the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid user input (configuration files, parameter sets).
class ConfigError : public Error {
 public:
  using Error::Error;
};

#define TPHDG_REQUIRE(cond, msg)            \
  do {                                      \
    if (!(cond)) throw ::tphdg::Error(msg); \
  } while (false)

}  // namespace tphdg
