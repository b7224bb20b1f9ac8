#pragma once

#include <stdexcept>
#include <string>

namespace graphflow {

// Base class of all recoverable errors raised by the library.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Chart evaluation requested inside the pole-guard band of a spherical chart.
struct PoleProximityError : Error {
  using Error::Error;
};

// A torus-target neighbor displacement exceeds the unique-lift radius
// (half the shortest lattice vector); the grid does not resolve the map.
struct LiftAmbiguityError : Error {
  using Error::Error;
};

// min u1 dropped to the configured floor; the state is no longer trusted
// to represent a graph.
struct GraphicalityLossError : Error {
  using Error::Error;
};

// A time step produced a non-finite map value.
struct NonFiniteValueError : Error {
  using Error::Error;
};

// Run configuration failed validation (schema, ranges, or the curvature
// hypothesis min sigma_M >= sup sigma_N).
struct ConfigRejectedError : Error {
  using Error::Error;
};

// Envelope fitting requested for data that is not strictly area decreasing.
struct NotStrictlyDecreasingError : Error {
  using Error::Error;
};

// 1-D rotationally symmetric profile violates its endpoint conditions.
struct EndpointViolationError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

}  // namespace graphflow
