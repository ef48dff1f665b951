#pragma once

#include <stdexcept>
#include <string>

namespace emergence {

enum class ErrorKind {
    Domain,         // invalid numeric input (shape mismatch, non-finite, out of range)
    Configuration,  // scenario / CLI configuration rejected
    Io,
    Numerical,      // blow-up or non-finite state during integration
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void domain_error(const std::string& what) {
    throw Error(ErrorKind::Domain, what);
}

[[noreturn]] inline void config_error(const std::string& what) {
    throw Error(ErrorKind::Configuration, what);
}

}  // namespace emergence
