#pragma once

#include <stdexcept>
#include <string>

namespace dirne {

/// Invalid or inconsistent run configuration (unknown keys, bad values,
/// violated preconditions detected before dispatch).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// A numerical guard tripped: a quantity left the representable range or a
/// transform lost the precision needed for an exact result.
class NumericalGuard : public std::runtime_error {
public:
    explicit NumericalGuard(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace dirne
