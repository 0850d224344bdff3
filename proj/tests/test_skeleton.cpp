#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "hamos/skeleton.hpp"

using namespace hamos;

namespace {

std::mt19937_64 rng(777);

Mat3 random_rotation() {
  std::normal_distribution<double> d;
  Vec3 w(d(rng), d(rng), d(rng));
  return rot_exp(w);
}

ShapeParams random_shape(double scale = 2.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  ShapeParams s;
  for (int i = 0; i < kShapeDim; ++i) s.beta[i] = u(rng);
  return s;
}

// Independent FK oracle: walk the parent chain of each joint and sum the
// rotated bone vectors explicitly.
std::vector<Vec3> fk_oracle(const KinematicTree& tree, const Vec3& root_t,
                            const Mat3& root_r,
                            const std::vector<Mat3>& angles,
                            const ShapeParams& shape) {
  const Eigen::VectorXd len = tree.bone_lengths(shape);
  const int J = tree.num_joints();
  std::vector<Vec3> pos(J);
  for (int j = 0; j < J; ++j) {
    // Collect the chain root..j.
    std::vector<int> chain;
    for (int a = j; a != -1; a = tree.parent[a]) chain.push_back(a);
    std::reverse(chain.begin(), chain.end());
    Mat3 g = root_r;
    Vec3 p = root_t;
    for (size_t c = 1; c < chain.size(); ++c) {
      const int a = chain[c];
      p += g * (tree.rest_dir[a] * len[a]);
      g = g * angles[a - 1];
    }
    pos[j] = p;
  }
  return pos;
}

}  // namespace

TEST_CASE("default tree is well formed") {
  const KinematicTree& tree = KinematicTree::default_tree();
  REQUIRE(tree.num_joints() == kNumJoints);
  CHECK(tree.parent[0] == -1);
  for (int j = 1; j < kNumJoints; ++j) {
    CHECK(tree.parent[j] >= 0);
    CHECK(tree.parent[j] < j);
    CHECK(tree.rest_dir[j].norm() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(tree.base_length[j] > 0.0);
  }
}

TEST_CASE("bone lengths stay positive over the clamp box") {
  const KinematicTree& tree = KinematicTree::default_tree();
  ShapeParams corner;
  for (int i = 0; i < kShapeDim; ++i) corner.beta[i] = (i % 2 == 0) ? 5 : -5;
  const Eigen::VectorXd len = tree.bone_lengths(corner);
  for (int j = 1; j < kNumJoints; ++j) CHECK(len[j] > 0.0);
}

TEST_CASE("shape clamp saturates beyond the box") {
  const KinematicTree& tree = KinematicTree::default_tree();
  ShapeParams big, edge;
  big.beta.setConstant(10.0);
  edge.beta.setConstant(5.0);
  CHECK((tree.bone_lengths(big) - tree.bone_lengths(edge)).norm() < 1e-14);
}

TEST_CASE("fk matches the chain-sum oracle") {
  const KinematicTree& tree = KinematicTree::default_tree();
  for (int trial = 0; trial < 20; ++trial) {
    const ShapeParams shape = random_shape();
    std::normal_distribution<double> d;
    const Vec3 root_t(d(rng), d(rng), d(rng));
    const Mat3 root_r = random_rotation();
    std::vector<Mat3> angles(kNumJoints - 1);
    for (auto& a : angles) a = random_rotation();
    const auto fk = forward_kinematics(tree, root_t, root_r, angles, shape);
    const auto oracle = fk_oracle(tree, root_t, root_r, angles, shape);
    for (int j = 0; j < kNumJoints; ++j)
      CHECK((fk[j] - oracle[j]).norm() < 1e-10);
  }
}

TEST_CASE("tpose equals identity-rotation fk at the origin") {
  const KinematicTree& tree = KinematicTree::default_tree();
  const ShapeParams shape = random_shape();
  std::vector<Mat3> id(kNumJoints - 1, Mat3::Identity());
  const auto a = tpose_joints(tree, shape);
  const auto b =
      forward_kinematics(tree, Vec3::Zero(), Mat3::Identity(), id, shape);
  for (int j = 0; j < kNumJoints; ++j) CHECK((a[j] - b[j]).norm() < 1e-14);
}

TEST_CASE("height and span at the neutral shape match bone arithmetic") {
  // Oracle: sum the rest offsets along the extreme chains.
  const KinematicTree& tree = KinematicTree::default_tree();
  const HeightSpan hs = height_and_span(tree, ShapeParams{});
  const double top = 0.11 + 0.12 + 0.12 + 0.12 + 0.10;  // pelvis -> head
  const double bottom = 0.05 + 0.38 + 0.40 + 0.05;      // pelvis -> foot z
  CHECK(hs.height ==
        doctest::Approx(top + bottom + kHeadPad + kFootPad).epsilon(1e-9));
  const double arm = 0.09;  // hip x extent is smaller than the arm chain
  (void)arm;
  const double half_span = 0.07 + 0.11 + 0.26 + 0.25;  // collar -> wrist
  CHECK(hs.span == doctest::Approx(2.0 * half_span).epsilon(1e-9));
}

TEST_CASE("uniform bone scaling scales height and span linearly") {
  // Synthetic basis whose first component scales every bone by 10%/unit.
  KinematicTree tree = KinematicTree::default_tree();
  tree.basis.setZero();
  for (int j = 1; j < kNumJoints; ++j) tree.basis(j, 0) = 0.1 * tree.base_length[j];
  ShapeParams one;
  one.beta[0] = 1.0;
  const HeightSpan base = height_and_span(tree, ShapeParams{});
  const HeightSpan scaled = height_and_span(tree, one);
  CHECK(scaled.height - kHeadPad - kFootPad ==
        doctest::Approx(1.1 * (base.height - kHeadPad - kFootPad)).epsilon(1e-9));
  CHECK(scaled.span == doctest::Approx(1.1 * base.span).epsilon(1e-9));
}

TEST_CASE("tree json round trip") {
  const KinematicTree& tree = KinematicTree::default_tree();
  const KinematicTree back = KinematicTree::from_json(tree.to_json());
  CHECK(back.version == tree.version);
  CHECK(back.names == tree.names);
  CHECK(back.parent == tree.parent);
  CHECK((back.basis - tree.basis).norm() < 1e-12);
  for (int j = 0; j < kNumJoints; ++j) {
    CHECK((back.rest_dir[j] - tree.rest_dir[j]).norm() < 1e-12);
    CHECK(back.base_length[j] == doctest::Approx(tree.base_length[j]));
  }
}

TEST_CASE("versioned skeleton asset matches the built-in tree") {
  std::ifstream in(std::string(HAMOS_SOURCE_DIR) + "/assets/skeleton_v1.json");
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  const KinematicTree asset = KinematicTree::from_json(ss.str());
  const KinematicTree& tree = KinematicTree::default_tree();
  CHECK(asset.version == tree.version);
  CHECK(asset.names == tree.names);
  CHECK(asset.parent == tree.parent);
  CHECK((asset.basis - tree.basis).norm() < 1e-12);
}

TEST_CASE("head pose from camera pose composes the fixed mount") {
  const RigidTransform cam{random_rotation(), Vec3(0.1, 0.2, 1.5)};
  const RigidTransform head = head_from_camera(cam);
  const Vec3 probe(0.3, -0.2, 0.5);
  // head = offset * camera, so the offset acts after the camera transform.
  CHECK((head.apply(probe) - kCamToHead.apply(cam.apply(probe))).norm() < 1e-12);

  // Identity camera with a custom offset lands the head on the offset itself.
  const RigidTransform custom = translate(0.0, -0.05, -0.10);
  const RigidTransform at_offset =
      head_from_camera(RigidTransform{}, custom);
  CHECK((at_offset.t - Vec3(0.0, -0.05, -0.10)).norm() < 1e-15);
  CHECK((at_offset.R - Mat3::Identity()).norm() == 0.0);
}

TEST_CASE("mirrored bones share lengths") {
  const KinematicTree& tree = KinematicTree::default_tree();
  const ShapeParams shape = random_shape();
  const Eigen::VectorXd len = tree.bone_lengths(shape);
  CHECK(len[kLeftHip] == doctest::Approx(len[kRightHip]));
  CHECK(len[kLeftWrist] == doctest::Approx(len[kRightWrist]));
  CHECK(len[kLeftElbow] == doctest::Approx(len[kRightElbow]));
}
