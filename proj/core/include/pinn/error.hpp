#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace pinn {

// Base for every error raised by the library. Messages start with a short
// stable phrase ("unbound input", "shape error", ...) that callers and tests
// match on; detail follows after a colon.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A node produced NaN or Inf during evaluation.
class NonFiniteError : public Error {
 public:
  NonFiniteError(std::uint32_t node, const std::string& what)
      : Error(what), node_(node) {}
  std::uint32_t node() const noexcept { return node_; }

 private:
  std::uint32_t node_;
};

// Training could not continue; carries the epoch at which it stopped.
class DivergenceError : public Error {
 public:
  DivergenceError(std::int64_t epoch, const std::string& what)
      : Error(what), epoch_(epoch) {}
  std::int64_t epoch() const noexcept { return epoch_; }

 private:
  std::int64_t epoch_;
};

}  // namespace pinn
