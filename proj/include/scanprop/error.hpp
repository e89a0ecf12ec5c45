// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace scanprop {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operands whose dimensions do not chain (a.cols != b.rows and friends).
class ShapeError : public Error {
public:
    using Error::Error;
};

/// A CSR structure or serialized stream that violates the format invariants.
class FormatError : public Error {
public:
    using Error::Error;
};

/// Numeric operands that do not match the patterns a product plan was built for.
class PlanError : public Error {
public:
    using Error::Error;
};

class PoolIndexError : public Error {
public:
    using Error::Error;
};

/// A recurrent tape missing a timestep or the gate values a Jacobian needs.
class TapeError : public Error {
public:
    using Error::Error;
};

/// Invalid user-supplied configuration; the CLI maps this to exit code 2.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace scanprop
