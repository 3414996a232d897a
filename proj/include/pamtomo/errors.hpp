#pragma once

#include <stdexcept>
#include <string>

namespace pamtomo {

// Exit-code taxonomy used by the CLI: config=2, numerical=3, truncation=4.

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

// Raised when the Fock basis would have to exceed its hard cap, or when an
// operator cannot be represented on the requested truncation.
struct TruncationError : std::runtime_error {
    explicit TruncationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Mismatched stage artifacts (e.g. a filter kernel applied to a record that
// was produced with different system parameters).
struct ContractError : std::runtime_error {
    explicit ContractError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace pamtomo
