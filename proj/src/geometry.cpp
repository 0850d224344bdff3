#include "hamos/geometry.hpp"

#include <cmath>

namespace hamos {

Rot6 rot_to_6d(const Mat3& R) {
  Rot6 u;
  u.head<3>() = R.col(0);
  u.tail<3>() = R.col(1);
  return u;
}

Mat3 rot_from_6d(const Rot6& u) {
  // Degenerate encodings (zero or collinear columns) fall back to fixed
  // axes so the decode always yields a rotation; the matching backward pass
  // treats these regions as zero-gradient.
  Vec3 a1 = u.head<3>();
  Vec3 a2 = u.tail<3>();
  const double n1 = a1.norm();
  Vec3 b1 = n1 > 1e-9 ? Vec3(a1 / n1) : Vec3::UnitX();
  Vec3 w = a2 - b1.dot(a2) * b1;
  const double nw = w.norm();
  Vec3 b2 = nw > 1e-9 ? Vec3(w / nw) : b1.unitOrthogonal();
  Vec3 b3 = b1.cross(b2);
  Mat3 R;
  R.col(0) = b1;
  R.col(1) = b2;
  R.col(2) = b3;
  return R;
}

Mat3 orthonormalize(const Mat3& M) {
  Rot6 u;
  u.head<3>() = M.col(0);
  u.tail<3>() = M.col(1);
  return rot_from_6d(u);
}

bool is_rotation(const Mat3& R, double tol) {
  return (R.transpose() * R - Mat3::Identity()).norm() < tol &&
         std::abs(R.determinant() - 1.0) < tol;
}

Mat3 rot_z(double angle) {
  return Eigen::AngleAxisd(angle, Vec3::UnitZ()).toRotationMatrix();
}

Mat3 rot_x(double angle) {
  return Eigen::AngleAxisd(angle, Vec3::UnitX()).toRotationMatrix();
}

Mat3 rot_y(double angle) {
  return Eigen::AngleAxisd(angle, Vec3::UnitY()).toRotationMatrix();
}

Mat3 rot_exp(const Vec3& w) {
  double theta = w.norm();
  if (theta < 1e-12) {
    Mat3 W;
    W << 0, -w.z(), w.y(), w.z(), 0, -w.x(), -w.y(), w.x(), 0;
    return Mat3::Identity() + W;
  }
  return Eigen::AngleAxisd(theta, w / theta).toRotationMatrix();
}

CanonicalFrame canonical_frame(const RigidTransform& head_pose,
                               const CanonicalFrame* previous) {
  Vec3 forward = head_pose.R * kHeadForwardLocal;
  Vec3 horiz{forward.x(), forward.y(), 0.0};
  Vec3 y_axis;
  if (horiz.norm() <= 1e-6) {
    if (previous == nullptr) {
      throw DegenerateHeading(
          "head forward axis is gravity-parallel and no previous canonical "
          "frame is available");
    }
    y_axis = previous->transform.R.col(1);
  } else {
    y_axis = horiz.normalized();
  }
  Mat3 R;
  R.col(1) = y_axis;
  R.col(2) = kUp;
  R.col(0) = y_axis.cross(kUp);
  CanonicalFrame frame;
  frame.transform.R = R;
  frame.transform.t = Vec3{head_pose.t.x(), head_pose.t.y(), 0.0};
  return frame;
}

std::vector<CanonicalFrame> canonical_frames(
    const std::vector<RigidTransform>& head_poses) {
  std::vector<CanonicalFrame> frames;
  frames.reserve(head_poses.size());
  for (size_t i = 0; i < head_poses.size(); ++i) {
    const CanonicalFrame* prev = frames.empty() ? nullptr : &frames.back();
    frames.push_back(canonical_frame(head_poses[i], prev));
  }
  return frames;
}

RigidTransform relative_head_motion(const RigidTransform& prev,
                                    const RigidTransform& curr) {
  return compose(inverse(prev), curr);
}

}  // namespace hamos
