#pragma once

#include <stdexcept>

namespace dilate {

/// Unreadable or malformed input data (CLI exit code 2).
struct data_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Training could not produce a usable model (CLI exit code 3).
struct training_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace dilate
