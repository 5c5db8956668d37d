#pragma once

#include <stdexcept>
#include <string>

namespace sncusum {

// Base of every error thrown by the library. The CLI maps subclasses to
// exit codes, so new error kinds should derive from one of these.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Caller passed an argument outside the documented domain.
class InvalidInput : public Error {
public:
    using Error::Error;
};

// Parameters are individually valid but incompatible, e.g. t0 and t1 fall
// on the same block knot for the given sample size.
class ConfigurationError : public Error {
public:
    using Error::Error;
};

// A self-normalized ratio has a zero denominator (constant or all-zero data).
class DegenerateStatistic : public Error {
public:
    using Error::Error;
};

// Malformed file contents (cache header, CSV field, ...).
class FormatError : public Error {
public:
    using Error::Error;
};

// A cached null sample exists but was produced with different settings.
class ProvenanceError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace sncusum
