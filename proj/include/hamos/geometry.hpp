#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "hamos/errors.hpp"

namespace hamos {

using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;
using Rot6 = Eigen::Matrix<double, 6, 1>;

// Conventions used throughout:
//   - world is z-up, gravity along -z, floor at z = 0
//   - the head frame's local +y axis is "forward"
//   - angles in radians, lengths in meters
inline const Vec3 kUp{0.0, 0.0, 1.0};
inline const Vec3 kHeadForwardLocal{0.0, 1.0, 0.0};

// Continuous 6-dimensional rotation encoding: the first two matrix columns,
// re-orthonormalized on decode (Gram-Schmidt).
Rot6 rot_to_6d(const Mat3& R);
Mat3 rot_from_6d(const Rot6& u);

// Nearest rotation (Gram-Schmidt on columns); decode path for noisy matrices.
Mat3 orthonormalize(const Mat3& M);

bool is_rotation(const Mat3& R, double tol = 1e-6);

Mat3 rot_z(double angle);
Mat3 rot_x(double angle);
Mat3 rot_y(double angle);

// Axis-angle exponential map.
Mat3 rot_exp(const Vec3& w);

// An element of SE(3): x_world = R * x_local + t.
struct RigidTransform {
  Mat3 R = Mat3::Identity();
  Vec3 t = Vec3::Zero();

  Vec3 apply(const Vec3& x) const { return R * x + t; }
};

inline RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
  return {a.R * b.R, a.R * b.t + a.t};
}

inline RigidTransform inverse(const RigidTransform& T) {
  Mat3 Rt = T.R.transpose();
  return {Rt, -(Rt * T.t)};
}

inline RigidTransform translate(double x, double y, double z) {
  return {Mat3::Identity(), Vec3{x, y, z}};
}

// Gravity-aligned frame at the head's floor projection (canonical -> world).
// Invariants: t.z == 0, R.col(2) == (0,0,1), R.col(1) is the unit horizontal
// projection of the head's forward direction.
struct CanonicalFrame {
  RigidTransform transform;
};

// Throws DegenerateHeading when the head forward axis is gravity-parallel and
// no previous frame is supplied.
CanonicalFrame canonical_frame(const RigidTransform& head_pose,
                               const CanonicalFrame* previous = nullptr);

// Per-frame canonicalization with previous-frame heading fallback.
std::vector<CanonicalFrame> canonical_frames(
    const std::vector<RigidTransform>& head_poses);

// Relative pose such that compose(prev, result) == curr.
RigidTransform relative_head_motion(const RigidTransform& prev,
                                    const RigidTransform& curr);

}  // namespace hamos
