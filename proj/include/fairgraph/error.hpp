#pragma once

#include <stdexcept>
#include <string>

namespace fairgraph {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input file; the message names the file, line and field.
class ParseError : public Error {
public:
    using Error::Error;
};

// Graph structure violates an invariant (dangling node, self-loop, duplicate edge).
class StructuralError : public Error {
public:
    using Error::Error;
};

// Not enough data to satisfy a partitioning request.
class SizingError : public Error {
public:
    using Error::Error;
};

// NaN or Inf encountered in a forward or backward pass.
class NumericError : public Error {
public:
    using Error::Error;
};

// Request exceeds what an exact algorithm can enumerate.
class CapabilityError : public Error {
public:
    using Error::Error;
};

// Zero-norm or otherwise degenerate input to a valuation routine.
class DegenerateInputError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace fairgraph
