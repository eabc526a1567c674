#pragma once

#include <stdexcept>
#include <string>

namespace sirdsim {

/// Raised when a runtime protocol or accounting invariant is violated. The CLI
/// maps it to exit code 3.
class InvariantViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void require(bool cond, const char* what) {
    if (!cond)
        throw InvariantViolation(what);
}

}  // namespace sirdsim
