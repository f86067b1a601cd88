#pragma once

#include <stdexcept>
#include <string>

namespace sicd {

// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed user input: bad samples, bad configs, bad files. CLI exit code 2.
class InvalidInput : public Error {
public:
  explicit InvalidInput(const std::string& msg) : Error(msg) {}
};

// Estimation failed numerically: singular weights, degenerate windows,
// non-convergence, failed selections. CLI exit code 3.
class NumericalError : public Error {
public:
  explicit NumericalError(const std::string& msg) : Error(msg) {}
};

// Rethrow helper that prefixes the pipeline stage a failure happened in.
template <typename Fn>
auto with_stage(const char* stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const InvalidInput& e) {
    throw InvalidInput(std::string(stage) + ": " + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(std::string(stage) + ": " + e.what());
  }
}

}  // namespace sicd
