#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace obal {

// Base for every error raised by the library. The CLI maps these to a
// nonzero exit code and prints `what()`, which carries module + step
// provenance where one exists.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class InvalidSpec : public Error {
 public:
  using Error::Error;
};

class StreamFormatError : public Error {
 public:
  StreamFormatError(std::size_t line, const std::string& msg)
      : Error("stream format error at line " + std::to_string(line) + ": " + msg), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class SparsityViolation : public Error {
 public:
  using Error::Error;
};

// Potential exceeded the configured cap; almost always a lambda misconfiguration.
class PotentialOverflow : public Error {
 public:
  PotentialOverflow(std::uint64_t step, double phi)
      : Error("signer: potential " + std::to_string(phi) + " exceeded cap at step " + std::to_string(step)),
        step_(step) {}
  std::uint64_t step() const noexcept { return step_; }

 private:
  std::uint64_t step_;
};

class UnsupportedMode : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class InvariantViolation : public Error {
 public:
  using Error::Error;
};

// Two independent computations of the same quantity disagreed.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

class InvalidInstance : public Error {
 public:
  using Error::Error;
};

class CapacityExceeded : public Error {
 public:
  using Error::Error;
};

}  // namespace obal
