#include "hamos/guidance.hpp"

#include <array>
#include <cstdio>

namespace hamos {

namespace {

// Strict ancestors of each wrist among the guided joints, chain order.
constexpr std::array<std::array<int, 3>, 2> kWristChain = {{
    {kLeftCollar, kLeftShoulder, kLeftElbow},
    {kRightCollar, kRightShoulder, kRightElbow},
}};

bool in_chain(int joint, int hand) {
  for (int j : kWristChain[hand])
    if (j == joint) return true;
  return false;
}

// d p_wrist / d omega_k for a right-multiplied tangent perturbation of the
// global rotation at `joint`: (G_j e_k) x (p_wrist - p_j).
Vec3 jac_column(const FrameFk& fk, int joint, int k, const Vec3& wrist_pos) {
  const Vec3 axis = fk.global[joint].col(k);
  return axis.cross(wrist_pos - fk.world_pos[joint]);
}

}  // namespace

double guidance_objective(const KinematicTree& tree, const Eigen::VectorXd& x,
                          const ShapeParams& shape, const Mat3& cano_rotation,
                          const Vec3& head_pos,
                          const std::array<Vec3, 2>& wrist_ref,
                          const std::array<Vec3, 2>& wrist_obs,
                          const std::array<bool, 2>& wrist_visible,
                          double alpha_bar, double scale,
                          Eigen::VectorXd* grad) {
  const FrameFk fk = frame_fk_forward(tree, x, shape, cano_rotation, head_pos);
  const double wp = alpha_bar;
  if (grad) grad->setZero(3 * static_cast<int>(kArmJoints.size()));

  double value = 0.0;
  for (int h = 0; h < 2; ++h) {
    const Vec3 pw = fk.world_pos[kWristJoints[h]];
    const double wc = wrist_visible[h] ? scale * (1.0 - alpha_bar) : 0.0;
    const Vec3 ep = pw - wrist_ref[h];
    const Vec3 ec = pw - wrist_obs[h];
    value += wp * ep.squaredNorm() + wc * ec.squaredNorm();
    if (!grad) continue;
    const Vec3 r = 2.0 * wp * ep + 2.0 * wc * ec;
    for (int a = 0; a < static_cast<int>(kArmJoints.size()); ++a) {
      const int j = kArmJoints[a];
      if (!in_chain(j, h)) continue;
      for (int k = 0; k < 3; ++k)
        (*grad)[3 * a + k] += r.dot(jac_column(fk, j, k, pw));
    }
  }
  return value;
}

Eigen::MatrixXd guidance_refine(const KinematicTree& tree,
                                const Eigen::MatrixXd& x_hat,
                                const ShapeParams& shape,
                                const std::vector<Mat3>& cano_rotations,
                                const std::vector<Vec3>& head_positions,
                                const WristTargets& targets, double alpha_bar,
                                double scale, int iterations) {
  const int T = static_cast<int>(x_hat.rows());
  Eigen::MatrixXd out = x_hat;
  const double damping = 1e-4;
  const double sqrt_wp = std::sqrt(alpha_bar);
  int rejected = 0;

  for (int t = 0; t < T; ++t) {
    const std::array<bool, 2> vis = {targets.visible[0][t] != 0,
                                     targets.visible[1][t] != 0};
    if (!vis[0] && !vis[1]) continue;  // already at the prior optimum

    const Eigen::VectorXd x0 = x_hat.row(t).transpose();
    const FrameFk fk0 = frame_fk_forward(tree, x0, shape, cano_rotations[t],
                                         head_positions[t]);
    const std::array<Vec3, 2> ref = {fk0.world_pos[kLeftWrist],
                                     fk0.world_pos[kRightWrist]};
    const std::array<Vec3, 2> obs = {
        vis[0] ? targets.position[0][t] : ref[0],
        vis[1] ? targets.position[1][t] : ref[1]};

    Eigen::VectorXd x_cur = x0;
    for (int it = 0; it < iterations; ++it) {
      const FrameFk fk = frame_fk_forward(tree, x_cur, shape,
                                          cano_rotations[t],
                                          head_positions[t]);
      // Each wrist only depends on its own side's chain, so the two sides
      // decouple into independent 6-residual, 12-variable solves.
      for (int h = 0; h < 2; ++h) {
        const std::array<int, 4> side = {kWristChain[h][0], kWristChain[h][1],
                                         kWristChain[h][2], kWristJoints[h]};
        const Vec3 pw = fk.world_pos[kWristJoints[h]];
        const double sqrt_wc =
            vis[h] ? std::sqrt(scale * (1.0 - alpha_bar)) : 0.0;

        Eigen::Matrix<double, 6, 12> jac;
        jac.setZero();
        Eigen::Matrix<double, 6, 1> res;
        res.segment<3>(0) = sqrt_wp * (pw - ref[h]);
        res.segment<3>(3) = sqrt_wc * (pw - obs[h]);
        for (int a = 0; a < 4; ++a) {
          const int j = side[a];
          if (j == kWristJoints[h]) continue;  // no effect on own position
          for (int k = 0; k < 3; ++k) {
            const Vec3 col = jac_column(fk, j, k, pw);
            jac.block<3, 1>(0, 3 * a + k) = sqrt_wp * col;
            jac.block<3, 1>(3, 3 * a + k) = sqrt_wc * col;
          }
        }

        const Eigen::Matrix<double, 12, 12> lhs =
            jac.transpose() * jac +
            damping * Eigen::Matrix<double, 12, 12>::Identity();
        const Eigen::Matrix<double, 12, 1> delta =
            lhs.ldlt().solve(-(jac.transpose() * res));

        for (int a = 0; a < 4; ++a) {
          const int j = side[a];
          const Mat3 r_new = fk.rot[j] * rot_exp(delta.segment<3>(3 * a));
          x_cur.segment<6>(6 * j) = rot_to_6d(r_new);
        }
      }
    }

    const double obj0 = guidance_objective(tree, x0, shape, cano_rotations[t],
                                           head_positions[t], ref, obs, vis,
                                           alpha_bar, scale);
    const double obj1 = guidance_objective(tree, x_cur, shape,
                                           cano_rotations[t],
                                           head_positions[t], ref, obs, vis,
                                           alpha_bar, scale);
    if (std::isfinite(obj1) && obj1 <= obj0) {
      out.row(t) = x_cur.transpose();
    } else {
      ++rejected;
    }
  }
  if (rejected > 0) {
    std::fprintf(stderr,
                 "guidance: kept unrefined prediction on %d/%d frames\n",
                 rejected, T);
  }
  return out;
}

}  // namespace hamos
