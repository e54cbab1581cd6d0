#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hiersim {

// Bad user input: topology strings, configs, traces, mismatched collective
// groups. The CLI maps these to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed trace file; carries the offending line number when known.
class TraceError : public ValidationError {
 public:
  explicit TraceError(const std::string& msg, long long line = -1)
      : ValidationError(line >= 0 ? "trace line " + std::to_string(line) + ": " + msg : msg),
        line_(line) {}
  long long line() const { return line_; }

 private:
  long long line_;
};

// Simulation drained its event queue with communication still parked.
// The CLI maps this to exit code 3.
class DeadlockError : public std::runtime_error {
 public:
  DeadlockError(const std::string& msg, std::vector<std::string> parked)
      : std::runtime_error(msg), parked_(std::move(parked)) {}
  const std::vector<std::string>& parked() const { return parked_; }

 private:
  std::vector<std::string> parked_;
};

}  // namespace hiersim
