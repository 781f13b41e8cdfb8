// Exception types raised by the koopman-cert library.
#pragma once

#include <stdexcept>
#include <string>

namespace koopman {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed configuration or arguments (CLI exit code 2).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Base class for numerical failures (CLI exit code 3).
class NumericalError : public Error {
public:
    using Error::Error;
};

#define KOOPMAN_DEFINE_ERROR(Name, Base)                                      \
    class Name : public Base {                                                \
    public:                                                                   \
        explicit Name(const std::string &what) : Base(#Name ": " + what) {}   \
    };

KOOPMAN_DEFINE_ERROR(InvalidArgument, ConfigError)
KOOPMAN_DEFINE_ERROR(DomainError, ConfigError)
KOOPMAN_DEFINE_ERROR(DimensionMismatch, ConfigError)
KOOPMAN_DEFINE_ERROR(UnsupportedSystem, ConfigError)
KOOPMAN_DEFINE_ERROR(InsufficientPoints, ConfigError)
KOOPMAN_DEFINE_ERROR(MissingCertificate, ConfigError)
KOOPMAN_DEFINE_ERROR(MissingSupBound, ConfigError)

KOOPMAN_DEFINE_ERROR(NonErgodicChain, NumericalError)
KOOPMAN_DEFINE_ERROR(SingularMass, NumericalError)
KOOPMAN_DEFINE_ERROR(SingularEmpiricalMass, NumericalError)
KOOPMAN_DEFINE_ERROR(NotUnitary, NumericalError)
KOOPMAN_DEFINE_ERROR(NotMeanZero, NumericalError)
KOOPMAN_DEFINE_ERROR(DegenerateTheta, NumericalError)
KOOPMAN_DEFINE_ERROR(NoSpectralGap, NumericalError)
KOOPMAN_DEFINE_ERROR(NegativeBracket, NumericalError)

#undef KOOPMAN_DEFINE_ERROR

} // namespace koopman
