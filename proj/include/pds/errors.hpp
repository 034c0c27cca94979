#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace pds {

/// Invalid user input: bad configuration values, inadmissible initial data, malformed files.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller violated a documented precondition of an operation.
class PreconditionError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// A solver failed: iteration limit, loss of definiteness, non-finite values.
/// `trace` carries the solver's history (objective values or residuals) at the point of failure.
class NumericalError : public std::runtime_error {
public:
    NumericalError(const std::string& what, std::vector<double> trace = {})
        : std::runtime_error(what), trace_(std::move(trace))
    {
    }

    const std::vector<double>& trace() const noexcept { return trace_; }

private:
    std::vector<double> trace_;
};

} // namespace pds
