#include "hamos/fk_grad.hpp"

namespace hamos {

Eigen::VectorXd encode_pose(const CanonicalPose& pose) {
  Eigen::VectorXd x(kPoseDim);
  x.segment<6>(0) = rot_to_6d(pose.root_to_cano);
  for (int j = 1; j < kNumJoints; ++j) {
    x.segment<6>(6 * j) = rot_to_6d(pose.joint_angles[j - 1]);
  }
  return x;
}

CanonicalPose decode_pose(const Eigen::VectorXd& x) {
  CanonicalPose pose;
  pose.root_to_cano = rot_from_6d(x.segment<6>(0));
  pose.joint_angles.reserve(kNumJoints - 1);
  for (int j = 1; j < kNumJoints; ++j) {
    pose.joint_angles.push_back(rot_from_6d(x.segment<6>(6 * j)));
  }
  return pose;
}

void rot_from_6d_backward(const Rot6& u, const Mat3& dR, Rot6& du) {
  Vec3 a1 = u.head<3>();
  Vec3 a2 = u.tail<3>();
  double na = a1.norm();
  Vec3 b1 = a1 / na;
  Vec3 w = a2 - b1.dot(a2) * b1;
  double nw = w.norm();
  Vec3 b2 = w / nw;
  // Gram-Schmidt is non-differentiable at degenerate encodings (zero or
  // parallel columns); pass zero gradient there instead of dividing by zero.
  if (!(na > 1e-9) || !(nw > 1e-9)) return;

  Vec3 g1 = dR.col(0), g2 = dR.col(1), g3 = dR.col(2);
  // b3 = b1 x b2
  Vec3 gb1 = b2.cross(g3);
  Vec3 gb2 = g3.cross(b1) + g2;
  // b2 = w / |w|
  Vec3 gw = (gb2 - b2 * b2.dot(gb2)) / nw;
  // w = a2 - (b1.a2) b1
  Vec3 ga2 = gw - b1 * b1.dot(gw);
  gb1 += -(b1.dot(gw)) * a2 - (b1.dot(a2)) * gw + g1;
  // b1 = a1 / |a1|
  Vec3 ga1 = (gb1 - b1 * b1.dot(gb1)) / na;

  du.head<3>() += ga1;
  du.tail<3>() += ga2;
}

FrameFk frame_fk_forward(const KinematicTree& tree, const Eigen::VectorXd& x,
                         const ShapeParams& shape, const Mat3& cano_rotation,
                         const Vec3& head_pos) {
  int n = tree.num_joints();
  FrameFk fk;
  fk.rot.resize(n);
  fk.global.resize(n);
  fk.rel_pos.resize(n);
  fk.world_pos.resize(n);
  fk.lengths = tree.bone_lengths(shape);
  for (int j = 0; j < n; ++j) fk.rot[j] = rot_from_6d(x.segment<6>(6 * j));
  fk.global[0] = cano_rotation * fk.rot[0];
  fk.rel_pos[0] = Vec3::Zero();
  for (int j = 1; j < n; ++j) {
    int p = tree.parent[j];
    fk.rel_pos[j] =
        fk.rel_pos[p] + fk.global[p] * (tree.rest_dir[j] * fk.lengths[j]);
    fk.global[j] = fk.global[p] * fk.rot[j];
  }
  fk.root_translation = head_pos - fk.rel_pos[kHead];
  for (int j = 0; j < n; ++j) {
    fk.world_pos[j] = fk.rel_pos[j] + fk.root_translation;
  }
  return fk;
}

void frame_fk_backward(const KinematicTree& tree, const FrameFk& cache,
                       const Eigen::VectorXd& x, const ShapeParams& shape,
                       const Mat3& cano_rotation,
                       const std::vector<Vec3>& d_world_pos,
                       Eigen::VectorXd& dx, Vec16& dbeta) {
  int n = tree.num_joints();
  std::vector<Vec3> drel(n, Vec3::Zero());
  std::vector<Mat3> dG(n, Mat3::Zero());
  Eigen::VectorXd dlen = Eigen::VectorXd::Zero(n);
  // world_pos = rel_pos + (head_pos - rel_pos[head]); head_pos is constant.
  Vec3 total = Vec3::Zero();
  for (int j = 0; j < n; ++j) {
    drel[j] = d_world_pos[j];
    total += d_world_pos[j];
  }
  drel[kHead] -= total;
  for (int j = n - 1; j >= 1; --j) {
    int p = tree.parent[j];
    Vec3 bone = tree.rest_dir[j] * cache.lengths[j];
    dG[p] += drel[j] * bone.transpose();
    dlen[j] = drel[j].dot(cache.global[p] * tree.rest_dir[j]);
    drel[p] += drel[j];
    dG[p] += dG[j] * cache.rot[j].transpose();
    Mat3 dRj = cache.global[p].transpose() * dG[j];
    Rot6 du = Rot6::Zero();
    rot_from_6d_backward(x.segment<6>(6 * j), dRj, du);
    dx.segment<6>(6 * j) += du;
  }
  Mat3 dR0 = cano_rotation.transpose() * dG[0];
  Rot6 du0 = Rot6::Zero();
  rot_from_6d_backward(x.segment<6>(0), dR0, du0);
  dx.segment<6>(0) += du0;
  // Clamp: components pinned at the box boundary receive no gradient.
  Vec16 g = tree.basis.transpose() * dlen;
  for (int k = 0; k < kShapeDim; ++k) {
    if (std::abs(shape.beta[k]) < 5.0) dbeta[k] += g[k];
  }
}

std::vector<Vec3> tpose_with_grad(const KinematicTree& tree,
                                  const ShapeParams& shape) {
  return tpose_joints(tree, shape);
}

void tpose_backward(const KinematicTree& tree, const ShapeParams& shape,
                    const std::vector<Vec3>& d_pos, Vec16& dbeta) {
  int n = tree.num_joints();
  std::vector<Vec3> drel(d_pos);
  Eigen::VectorXd dlen = Eigen::VectorXd::Zero(n);
  for (int j = n - 1; j >= 1; --j) {
    int p = tree.parent[j];
    dlen[j] = drel[j].dot(tree.rest_dir[j]);
    drel[p] += drel[j];
  }
  Vec16 g = tree.basis.transpose() * dlen;
  for (int k = 0; k < kShapeDim; ++k) {
    if (std::abs(shape.beta[k]) < 5.0) dbeta[k] += g[k];
  }
}

}  // namespace hamos
