#pragma once

#include <stdexcept>
#include <string>

namespace ierot {

// Malformed input files (CIFAR records, checkpoints, PPM).
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad RunConfig content or invalid command-line usage.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-finite loss or gradient during training.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace ierot
