#pragma once

#include <stdexcept>
#include <string>

namespace pdm {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Geometry.
class DegenerateSimplex : public Error {
public:
    using Error::Error;
};

/// A barycentric coordinate is exactly zero even under exact arithmetic.
class AmbiguousSign : public Error {
public:
    using Error::Error;
};

// Sampling.
class OverflowRisk : public Error {
public:
    using Error::Error;
};

// Triangulation.
class DegenerateInput : public Error {
public:
    using Error::Error;
};

/// Some circumradius reaches half the shortest side of the periodic box,
/// so image replication can no longer certify the torus mosaic.
class TorusTooSparse : public Error {
public:
    using Error::Error;
};

// Morse decomposition.
class PartitionViolation : public Error {
public:
    using Error::Error;
};

class MarginTooSmall : public Error {
public:
    using Error::Error;
};

// Closed forms.
class Unsupported : public Error {
public:
    using Error::Error;
};

class UnsupportedDimension : public Error {
public:
    using Error::Error;
};

class QuadratureFailure : public Error {
public:
    using Error::Error;
};

/// Invalid parameters handed to a public entry point.
class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace pdm
