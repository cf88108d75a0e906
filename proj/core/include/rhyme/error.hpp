#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rhyme {

/// Raised when a caller breaks a documented precondition (shape mismatch,
/// out-of-range argument, malformed file). The CLI maps it to exit code 2.
class ContractViolation : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Base for numerical blow-ups. The CLI maps it to exit code 3.
class DivergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SimulationDiverged : public DivergenceError {
public:
    SimulationDiverged(std::size_t step, const std::string& what)
        : DivergenceError(what), step_(step) {}

    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

class TrainingDiverged : public DivergenceError {
public:
    using DivergenceError::DivergenceError;
};

namespace detail {
[[noreturn]] inline void fail_contract(const std::string& msg) { throw ContractViolation(msg); }
}  // namespace detail

#define RHYME_REQUIRE(cond, msg)                      \
    do {                                              \
        if (!(cond)) ::rhyme::detail::fail_contract(msg); \
    } while (0)

}  // namespace rhyme
