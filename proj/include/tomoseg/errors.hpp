#pragma once

#include <stdexcept>
#include <string>

namespace tomoseg {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Image or grid too small for the requested operation.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Out-of-range or inconsistent parameter.
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Input file or sample data that does not follow its declared format.
class MalformedInput : public Error {
public:
    using Error::Error;
};

/// Seed whose source disk touches the crop frame.
class ConstraintViolation : public Error {
public:
    using Error::Error;
};

/// Correlation surface without a defined peak (all-zero input).
class UndefinedPeak : public Error {
public:
    using Error::Error;
};

}  // namespace tomoseg
