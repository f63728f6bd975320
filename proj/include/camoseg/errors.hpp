#pragma once

#include <stdexcept>
#include <string>

namespace camoseg {

// Invalid user-facing input: config keys, CLI arguments, malformed data files.
// The CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Training produced a non-finite loss. CLI exit code 3.
struct DivergedError : std::runtime_error {
  long iteration;
  explicit DivergedError(long iter)
      : std::runtime_error("non-finite loss at iteration " + std::to_string(iter)),
        iteration(iter) {}
};

// Unreadable or structurally invalid checkpoint. CLI exit code 4.
struct CheckpointError : std::runtime_error {
  explicit CheckpointError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace camoseg
