#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "hamos/geometry.hpp"

namespace hamos {

using Rng = std::mt19937_64;

// Generalized-ellipse field of view in wrist yaw/pitch angle space.
struct FovSpec {
  double phi_x = 0.0;   // center offset, rad
  double phi_y = 0.0;
  double gamma_x = 1.0;  // half-angles, rad
  double gamma_y = 1.0;
  double power = 2.0;    // superellipse exponent, >= 1
};

// Temporal drop process: Poisson event count with Log-Normal durations.
struct DropSpec {
  enum class Mode { kShort, kLong };
  Mode mode = Mode::kShort;
  double ratio = 0.0;      // target dropped fraction rho in [0,1]
  double mean = 2.0;       // E[D], frames
  double stddev = 1.0;     // std of D, frames
  int min_duration = 1;    // frames

  static DropSpec short_mode(double rho) { return {Mode::kShort, rho, 2.0, 1.0, 1}; }
  static DropSpec long_mode(double rho) { return {Mode::kLong, rho, 28.0, 25.0, 5}; }
};

// Per-frame boolean mask; for sample_drops, a set bit marks a dropped frame.
struct VisibilityMask {
  std::vector<bool> bits;

  int frames() const { return static_cast<int>(bits.size()); }
};

struct HandObservation {
  RigidTransform pose;  // hand in head coordinates
  bool visible = true;
};

// Wrist direction angles in the head frame (+y forward):
// yaw = atan2(x, y), pitch = atan2(z, hypot(x, y)).
// Throws DegeneratePosition when the wrist sits at the head origin.
std::pair<double, double> wrist_angles(const RigidTransform& hand_in_head);

// | (psi_x-phi_x)/gamma_x |^p + | (psi_y-phi_y)/gamma_y |^p <= 1
bool is_visible(double psi_x, double psi_y, const FovSpec& fov);

// Uniform draws over the half-angle/offset/power ranges with aspect-ratio and
// tilt constraints enforced by rejection. Throws ResamplingExhausted after
// 10000 rejected attempts.
FovSpec sample_fov(Rng& rng);

// Poisson(T * rho / mean) events, Log-Normal durations rounded to whole frames
// and clipped to min_duration, uniform start indices; the mask is the union of
// the events. visible[t] == true marks a *dropped* frame here.
VisibilityMask sample_drops(int frames, const DropSpec& spec, Rng& rng);

// Poisson rate for a sequence: lambda = T * rho / E[D].
double drop_rate(int frames, const DropSpec& spec);

// Spatial FoV test AND NOT (short drops UNION long drops). The FoV is shared
// by both hands; temporal drops are sampled independently per hand (left
// first). Poses are retained regardless of visibility.
std::array<std::vector<HandObservation>, 2> apply_augmentation(
    const std::array<std::vector<RigidTransform>, 2>& hand_in_head,
    const FovSpec& fov, const DropSpec& short_drops,
    const DropSpec& long_drops, Rng& rng);

// Fixed square FoV approximating an HMD pinhole camera with the given
// full field-of-view angle.
FovSpec pinhole_fov(double fov_degrees);

}  // namespace hamos
