#include "hamos/alignment.hpp"

namespace hamos {

MotionSequence global_alignment(const std::vector<CanonicalFrame>& frames,
                                const std::vector<CanonicalPose>& poses,
                                const std::vector<RigidTransform>& head_poses,
                                const ShapeParams& shape,
                                const KinematicTree& tree) {
  if (frames.size() != poses.size() || frames.size() != head_poses.size()) {
    throw LengthMismatch("global_alignment: sequence lengths differ");
  }
  MotionSequence motion;
  motion.shape = shape;
  size_t T = frames.size();
  motion.root_translation.reserve(T);
  motion.root_orientation.reserve(T);
  motion.joint_angles.reserve(T);
  for (size_t t = 0; t < T; ++t) {
    Mat3 phi = frames[t].transform.R * poses[t].root_to_cano;
    // Head joint offset from the root under this pose, then shift the root so
    // the head joint coincides with the observed head position.
    std::vector<Vec3> rel = forward_kinematics(tree, Vec3::Zero(), phi,
                                               poses[t].joint_angles, shape);
    motion.root_orientation.push_back(phi);
    motion.root_translation.push_back(head_poses[t].t - rel[kHead]);
    motion.joint_angles.push_back(poses[t].joint_angles);
  }
  return motion;
}

CanonicalPose canonicalize(const CanonicalFrame& frame,
                           const Mat3& root_orientation,
                           const std::vector<Mat3>& joint_angles) {
  CanonicalPose pose;
  pose.root_to_cano = frame.transform.R.transpose() * root_orientation;
  pose.joint_angles = joint_angles;
  return pose;
}

}  // namespace hamos
