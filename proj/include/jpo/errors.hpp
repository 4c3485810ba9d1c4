#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace jpo {

/// Input outside the validity domain of a model formula (e.g. cos F = 0).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Invalid user-supplied parameters or configuration.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// An iterative solver or fit failed to converge.
class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Time integration produced a non-finite state.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& what, std::size_t first_bad_index)
        : std::runtime_error(what), index_(first_bad_index) {}

    std::size_t first_bad_index() const noexcept { return index_; }

private:
    std::size_t index_;
};

} // namespace jpo
