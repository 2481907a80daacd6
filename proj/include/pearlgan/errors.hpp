#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace pearlgan {

// Bad or missing input data: unreadable directories, undecodable files,
// degenerate intensity ranges.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unknown configuration key or a value that fails validation.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor shape or divisibility precondition violated.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when an edge map has no edge pixel to sample a patch from.
class NoEdgesError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A loss component evaluated to NaN or Inf during training.
class NonFiniteLoss : public std::runtime_error {
 public:
  NonFiniteLoss(std::string component, std::int64_t iteration, double value)
      : std::runtime_error("non-finite loss component '" + component +
                           "' at iteration " + std::to_string(iteration) +
                           " (value " + std::to_string(value) + ")"),
        component_(std::move(component)),
        iteration_(iteration) {}

  const std::string& component() const noexcept { return component_; }
  std::int64_t iteration() const noexcept { return iteration_; }

 private:
  std::string component_;
  std::int64_t iteration_;
};

}  // namespace pearlgan
