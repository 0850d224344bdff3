#pragma once

#include <array>
#include <string>
#include <vector>

#include "hamos/geometry.hpp"

namespace hamos {

using Vec16 = Eigen::Matrix<double, 16, 1>;

inline constexpr int kNumJoints = 22;
inline constexpr int kShapeDim = 16;

// Joint indices of the default tree.
enum Joint : int {
  kPelvis = 0,
  kLeftHip = 1,
  kRightHip = 2,
  kSpine1 = 3,
  kLeftKnee = 4,
  kRightKnee = 5,
  kSpine2 = 6,
  kLeftAnkle = 7,
  kRightAnkle = 8,
  kSpine3 = 9,
  kLeftFoot = 10,
  kRightFoot = 11,
  kNeck = 12,
  kLeftCollar = 13,
  kRightCollar = 14,
  kHead = 15,
  kLeftShoulder = 16,
  kRightShoulder = 17,
  kLeftElbow = 18,
  kRightElbow = 19,
  kLeftWrist = 20,
  kRightWrist = 21,
};

// Joints refined by sampling-time guidance: collar/shoulder/elbow/wrist pairs.
inline constexpr std::array<int, 8> kArmJoints = {
    kLeftCollar, kRightCollar, kLeftShoulder, kRightShoulder,
    kLeftElbow,  kRightElbow,  kLeftWrist,    kRightWrist};

inline constexpr std::array<int, 2> kFootJoints = {kLeftFoot, kRightFoot};
inline constexpr std::array<int, 2> kWristJoints = {kLeftWrist, kRightWrist};

// Dimensionless shape coefficients, clamped to [-5, 5] before use.
struct ShapeParams {
  Vec16 beta = Vec16::Zero();

  Vec16 clamped() const {
    return beta.cwiseMax(-5.0).cwiseMin(5.0);
  }
};

// Shape-conditioned kinematic tree. Bone j (j >= 1) connects parent[j] to j
// with rest direction rest_dir[j] and length base_length[j] + basis.row(j)*beta.
struct KinematicTree {
  std::vector<std::string> names;
  std::vector<int> parent;                   // parent[0] == -1
  std::vector<Vec3> rest_dir;                // unit vectors, rest_dir[0] unused
  std::vector<double> base_length;           // meters, base_length[0] == 0
  Eigen::Matrix<double, Eigen::Dynamic, kShapeDim> basis;  // J x 16, m per beta
  int version = 1;

  int num_joints() const { return static_cast<int>(parent.size()); }

  // base + basis * clamp(beta), per bone.
  Eigen::VectorXd bone_lengths(const ShapeParams& shape) const;

  static const KinematicTree& default_tree();

  std::string to_json() const;
  static KinematicTree from_json(const std::string& text);
};

// Canonicalized per-frame pose: root orientation relative to the canonical
// frame plus J-1 local joint rotations.
struct CanonicalPose {
  Mat3 root_to_cano = Mat3::Identity();
  std::vector<Mat3> joint_angles;  // J-1
};

// Full reconstructed motion: single shape, per-frame world root pose and
// local joint rotations.
struct MotionSequence {
  ShapeParams shape;
  std::vector<Vec3> root_translation;
  std::vector<Mat3> root_orientation;
  std::vector<std::vector<Mat3>> joint_angles;  // T x (J-1)

  int frames() const { return static_cast<int>(root_translation.size()); }
};

// World-frame joint positions for one frame.
std::vector<Vec3> forward_kinematics(const KinematicTree& tree,
                                     const Vec3& root_translation,
                                     const Mat3& root_orientation,
                                     const std::vector<Mat3>& joint_angles,
                                     const ShapeParams& shape);

// FK with identity rotations and zero root translation.
std::vector<Vec3> tpose_joints(const KinematicTree& tree,
                               const ShapeParams& shape);

// Joint-extreme body measurements plus fixed head/foot pads (no mesh).
inline constexpr double kHeadPad = 0.11;  // m
inline constexpr double kFootPad = 0.03;  // m
struct HeightSpan {
  double height = 0.0;  // m
  double span = 0.0;    // m
};
HeightSpan height_and_span(const KinematicTree& tree, const ShapeParams& shape);

// Fixed camera-to-head offset; the device mount does not depend on shape.
inline const RigidTransform kCamToHead = translate(0.0, -0.02, -0.08);
RigidTransform head_from_camera(const RigidTransform& camera_pose,
                                const RigidTransform& cam_to_head = kCamToHead);

}  // namespace hamos
