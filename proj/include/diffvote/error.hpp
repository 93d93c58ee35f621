#pragma once

#include <stdexcept>
#include <string>

namespace diffvote {

// Input that violates a documented invariant. CLI maps this to exit code 2.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Numerical failure while optimizing (non-finite objective or gradient).
// CLI maps this to exit code 3.
class OptimizerError : public std::runtime_error {
public:
    OptimizerError(const std::string& what, std::size_t step)
        : std::runtime_error(what), step_(step) {}

    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

namespace detail {

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw ValidationError(msg);
}

}  // namespace detail
}  // namespace diffvote
