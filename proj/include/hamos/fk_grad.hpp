#pragma once

#include "hamos/geometry.hpp"
#include "hamos/skeleton.hpp"

namespace hamos {

// Per-frame pose vector layout used at the network boundary: 22 stacked
// 6-D rotation encodings, [root_to_cano, joint_1 .. joint_21].
inline constexpr int kPoseDim = 6 * kNumJoints;  // 132

Eigen::VectorXd encode_pose(const CanonicalPose& pose);
CanonicalPose decode_pose(const Eigen::VectorXd& x);

// Accumulates d(loss)/d(u) given d(loss)/d(R) for R = rot_from_6d(u).
void rot_from_6d_backward(const Rot6& u, const Mat3& dR, Rot6& du);

// One frame of head-anchored forward kinematics in the canonicalized
// representation, with cached intermediates for the backward pass. The root
// translation is derived so the head joint lands on head_pos.
struct FrameFk {
  std::vector<Mat3> rot;       // [0] = root_to_cano, [j] = joint j local
  std::vector<Mat3> global;    // accumulated world rotations
  std::vector<Vec3> rel_pos;   // joint positions with the root at the origin
  std::vector<Vec3> world_pos;
  Eigen::VectorXd lengths;
  Vec3 root_translation;
};

FrameFk frame_fk_forward(const KinematicTree& tree, const Eigen::VectorXd& x,
                         const ShapeParams& shape, const Mat3& cano_rotation,
                         const Vec3& head_pos);

// Backpropagates gradients w.r.t. world joint positions into the pose vector
// and the (clamped) shape parameters. dx and dbeta are accumulated into.
void frame_fk_backward(const KinematicTree& tree, const FrameFk& cache,
                       const Eigen::VectorXd& x, const ShapeParams& shape,
                       const Mat3& cano_rotation,
                       const std::vector<Vec3>& d_world_pos,
                       Eigen::VectorXd& dx, Vec16& dbeta);

// T-pose joint positions as a function of shape, with backward.
std::vector<Vec3> tpose_with_grad(const KinematicTree& tree,
                                  const ShapeParams& shape);
void tpose_backward(const KinematicTree& tree, const ShapeParams& shape,
                    const std::vector<Vec3>& d_pos, Vec16& dbeta);

}  // namespace hamos
