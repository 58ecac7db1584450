#pragma once

#include <stdexcept>
#include <string>

namespace eqlab {

// Base class for all library errors.
struct error : std::runtime_error {
    explicit error(const std::string& what) : std::runtime_error(what) {}
};

// Invalid argument / precondition violation (maps to CLI exit code 2).
struct invalid_input : error {
    explicit invalid_input(const std::string& what) : error(what) {}
};

// An iterative computation did not reach its tolerance within budget.
struct convergence_failure : error {
    explicit convergence_failure(const std::string& what) : error(what) {}
};

// A search or enumeration exhausted its configured budget.
struct budget_exceeded : error {
    explicit budget_exceeded(const std::string& what) : error(what) {}
};

// Invariant that should be unreachable when preconditions hold.
struct internal_error : error {
    explicit internal_error(const std::string& what) : error(what) {}
};

}  // namespace eqlab
