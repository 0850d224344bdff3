#pragma once

#include "hamos/geometry.hpp"
#include "hamos/skeleton.hpp"

namespace hamos {

// Rebuild world-frame motion from canonicalized poses: the root orientation
// is the canonical frame composed with root_to_cano, and the root translation
// is chosen so the forward-kinematics head joint lands on the observed head
// position.
MotionSequence global_alignment(const std::vector<CanonicalFrame>& frames,
                                const std::vector<CanonicalPose>& poses,
                                const std::vector<RigidTransform>& head_poses,
                                const ShapeParams& shape,
                                const KinematicTree& tree);

// Inverse of the orientation part of global_alignment:
// root_to_cano = R_cano^T * root_orientation.
CanonicalPose canonicalize(const CanonicalFrame& frame,
                           const Mat3& root_orientation,
                           const std::vector<Mat3>& joint_angles);

}  // namespace hamos
