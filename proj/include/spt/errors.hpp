#pragma once

#include <stdexcept>
#include <string>

namespace spt {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A physical parameter lies outside its admissible range.
class DomainError : public Error {
public:
    using Error::Error;
};

/// A combination of options that the library refuses to build.
class ConfigurationError : public Error {
public:
    using Error::Error;
};

/// An input violates a structural precondition (non-Hermitian form, overlapping supports, ...).
class ContractViolation : public Error {
public:
    using Error::Error;
};

/// Evaluation exactly at a pole of a response function.
class PoleError : public Error {
public:
    using Error::Error;
};

/// The argument-principle contour kept hitting zeros of the dispersion function.
class ContourError : public Error {
public:
    using Error::Error;
};

} // namespace spt
