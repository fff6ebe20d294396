#pragma once

#include <stdexcept>
#include <string>

namespace occugrasp {

/// File could not be opened, read or written.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// File opened fine but its contents do not match the expected layout.
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Training produced a non-finite loss or gradient.
struct DivergedError : std::runtime_error {
  DivergedError() : std::runtime_error("diverged") {}
};

/// Checkpoint architecture does not match the requested configuration.
struct ArchitectureMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace occugrasp
