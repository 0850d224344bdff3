#pragma once

#include <stdexcept>
#include <string>

namespace hamos {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Head forward axis is (anti)parallel to gravity and no previous-frame
// heading is available to fall back on.
struct DegenerateHeading : Error {
  using Error::Error;
};

// Wrist position coincides with the head origin; yaw/pitch undefined.
struct DegeneratePosition : Error {
  using Error::Error;
};

struct LengthMismatch : Error {
  using Error::Error;
};

struct ShapeMismatch : Error {
  using Error::Error;
};

struct StepOutOfRange : Error {
  using Error::Error;
};

// Rejection sampler exceeded its attempt budget.
struct ResamplingExhausted : Error {
  using Error::Error;
};

struct SchemaViolation : Error {
  using Error::Error;
};

struct DecodeError : Error {
  using Error::Error;
};

struct NonFiniteLoss : Error {
  using Error::Error;
};

struct SolverDivergence : Error {
  using Error::Error;
};

}  // namespace hamos
