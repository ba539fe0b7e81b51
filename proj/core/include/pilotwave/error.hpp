#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pilotwave {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad input: rejected parameters, mismatched grids, malformed configuration.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// A field whose node mask removes every point, or which is identically zero.
class DegenerateFieldError : public Error {
public:
    using Error::Error;
};

/// Rejection sampling would accept fewer than one proposal in a thousand.
class PathologicalDensityError : public Error {
public:
    using Error::Error;
};

/// A quantity that is only defined away from wavefunction nodes was requested at one.
class NodeError : public Error {
public:
    using Error::Error;
};

/// A computed quantity broke an internal consistency bound.
class NumericalError : public Error {
public:
    using Error::Error;
};

class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, std::size_t iterations)
        : Error(what + " (after " + std::to_string(iterations) + " iterations)"),
          iterations_(iterations) {}

    std::size_t iterations() const noexcept { return iterations_; }

private:
    std::size_t iterations_;
};

}  // namespace pilotwave
