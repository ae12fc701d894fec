#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bifread {

/// Invalid parameters or scenario configuration. Raised before any stepping.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A trajectory produced a non-finite state and was aborted.
class NumericalAbort : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Fock-space population leaked into the top of the truncated basis.
class TruncationError : public NumericalAbort {
public:
    TruncationError(const std::string& what, std::size_t suggested_truncation)
        : NumericalAbort(what), suggested_truncation_(suggested_truncation) {}

    std::size_t suggested_truncation() const noexcept { return suggested_truncation_; }

private:
    std::size_t suggested_truncation_;
};

}  // namespace bifread
