#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace nfkit {

// Base of every error the library raises. The CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ResonantError : public Error {
public:
    ResonantError(std::complex<double> rate, std::complex<double> mu);
    std::complex<double> rate;
    std::complex<double> mu;
};

class PowerCapError : public Error {
public:
    PowerCapError(int power, int cap);
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class ZeroSeriesError : public Error {
public:
    ZeroSeriesError() : Error("series is identically zero") {}
};

class StructureViolation : public Error {
public:
    using Error::Error;
};

class GapViolation : public Error {
public:
    using Error::Error;
};

class IterationCapError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, int line, int column);
    std::string message;  // without the location suffix
    int line;
    int column;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

}  // namespace nfkit
