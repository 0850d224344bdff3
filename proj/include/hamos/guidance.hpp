#pragma once

#include <array>

#include "hamos/fk_grad.hpp"

namespace hamos {

// Observed wrist targets for one sequence (frames 1..T, world coordinates).
struct WristTargets {
  std::array<std::vector<Vec3>, 2> position;
  std::array<std::vector<char>, 2> visible;
};

// Weighted prior/constraint objective for one frame:
//   abar * |p_w - p_ref|^2  +  scale * v * (1 - abar) * |p_w - p_obs|^2
// summed over both wrists, where p_ref are the wrist positions of the
// unrefined prediction. If grad is non-null it receives d(objective)/d(omega)
// for right-multiplied tangent perturbations of the kArmJoints rotations
// (3 components per joint, kArmJoints order).
double guidance_objective(const KinematicTree& tree, const Eigen::VectorXd& x,
                          const ShapeParams& shape, const Mat3& cano_rotation,
                          const Vec3& head_pos,
                          const std::array<Vec3, 2>& wrist_ref,
                          const std::array<Vec3, 2>& wrist_obs,
                          const std::array<bool, 2>& wrist_visible,
                          double alpha_bar, double scale,
                          Eigen::VectorXd* grad = nullptr);

// Damped least-squares refinement of the arm joints of every frame of the
// predicted clean pose matrix toward the observed wrist positions. Frames are
// refined independently; all non-arm pose parameters are left untouched. A
// frame whose objective fails to decrease keeps its unrefined prediction.
// Returns the refined T x kPoseDim matrix.
Eigen::MatrixXd guidance_refine(const KinematicTree& tree,
                                const Eigen::MatrixXd& x_hat,
                                const ShapeParams& shape,
                                const std::vector<Mat3>& cano_rotations,
                                const std::vector<Vec3>& head_positions,
                                const WristTargets& targets, double alpha_bar,
                                double scale, int iterations = 3);

}  // namespace hamos
