#pragma once

#include <stdexcept>
#include <string>

namespace nhl {

// Configuration problems: bad values, unknown keys, infeasible settings.
struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Data problems: malformed files, truncated payloads, out-of-range labels.
struct data_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Numeric failures: non-finite losses or gradients during training.
struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace nhl
