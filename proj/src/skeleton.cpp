#include "hamos/skeleton.hpp"

#include <cmath>

#include "json.hpp"

namespace hamos {

namespace {

struct BoneDef {
  const char* name;
  int parent;
  Vec3 offset;  // rest offset from parent at beta = 0, meters
};

// T-pose faces +y; arms along +-x, legs down -z; left is +x.
const std::array<BoneDef, kNumJoints> kBones = {{
    {"pelvis", -1, {0.0, 0.0, 0.0}},
    {"l_hip", kPelvis, {0.09, 0.0, -0.05}},
    {"r_hip", kPelvis, {-0.09, 0.0, -0.05}},
    {"spine1", kPelvis, {0.0, 0.0, 0.11}},
    {"l_knee", kLeftHip, {0.0, 0.0, -0.38}},
    {"r_knee", kRightHip, {0.0, 0.0, -0.38}},
    {"spine2", kSpine1, {0.0, 0.0, 0.12}},
    {"l_ankle", kLeftKnee, {0.0, 0.0, -0.40}},
    {"r_ankle", kRightKnee, {0.0, 0.0, -0.40}},
    {"spine3", kSpine2, {0.0, 0.0, 0.12}},
    {"l_foot", kLeftAnkle, {0.0, 0.13, -0.05}},
    {"r_foot", kRightAnkle, {0.0, 0.13, -0.05}},
    {"neck", kSpine3, {0.0, 0.0, 0.12}},
    {"l_collar", kSpine3, {0.07, 0.0, 0.05}},
    {"r_collar", kSpine3, {-0.07, 0.0, 0.05}},
    {"head", kNeck, {0.0, 0.0, 0.10}},
    {"l_shoulder", kLeftCollar, {0.11, 0.0, 0.0}},
    {"r_shoulder", kRightCollar, {-0.11, 0.0, 0.0}},
    {"l_elbow", kLeftShoulder, {0.26, 0.0, 0.0}},
    {"r_elbow", kRightShoulder, {-0.26, 0.0, 0.0}},
    {"l_wrist", kLeftElbow, {0.25, 0.0, 0.0}},
    {"r_wrist", kRightElbow, {-0.25, 0.0, 0.0}},
}};

// Left/right bone pairs; mirrored members share base lengths and basis rows.
const std::array<std::array<int, 2>, 8> kMirror = {{
    {kLeftHip, kRightHip},
    {kLeftKnee, kRightKnee},
    {kLeftAnkle, kRightAnkle},
    {kLeftFoot, kRightFoot},
    {kLeftCollar, kRightCollar},
    {kLeftShoulder, kRightShoulder},
    {kLeftElbow, kRightElbow},
    {kLeftWrist, kRightWrist},
}};

// Bone groups for the secondary shape directions.
bool is_leg(int j) {
  switch (j) {
    case kLeftHip: case kRightHip: case kLeftKnee: case kRightKnee:
    case kLeftAnkle: case kRightAnkle: case kLeftFoot: case kRightFoot:
      return true;
    default:
      return false;
  }
}

bool is_arm(int j) {
  switch (j) {
    case kLeftCollar: case kRightCollar: case kLeftShoulder: case kRightShoulder:
    case kLeftElbow: case kRightElbow: case kLeftWrist: case kRightWrist:
      return true;
    default:
      return false;
  }
}

KinematicTree build_default_tree() {
  KinematicTree tree;
  tree.basis.resize(kNumJoints, kShapeDim);
  tree.basis.setZero();
  for (int j = 0; j < kNumJoints; ++j) {
    const BoneDef& b = kBones[j];
    tree.names.emplace_back(b.name);
    tree.parent.push_back(b.parent);
    double len = b.offset.norm();
    tree.rest_dir.push_back(len > 0.0 ? Vec3(b.offset / len) : Vec3::Zero());
    tree.base_length.push_back(len);
    if (j == 0) continue;
    // Component 0 dominates uniform scale; components 1-3 scale legs, arms
    // and torso; the rest add small symmetric detail. Row absolute sums stay
    // below 0.15 * base so lengths remain positive over the clamp box.
    tree.basis(j, 0) = 0.08 * len;
    if (is_leg(j)) tree.basis(j, 1) = 0.02 * len;
    else if (is_arm(j)) tree.basis(j, 2) = 0.02 * len;
    else tree.basis(j, 3) = 0.02 * len;
    // Mirror pairs share rows: key the detail signs on the left member.
    int canonical = j;
    for (size_t p = 0; p < kMirror.size(); ++p) {
      if (kMirror[p][1] == j) canonical = kMirror[p][0];
    }
    for (int k = 4; k < kShapeDim; ++k) {
      int sign = ((canonical + k) % 2 == 0) ? 1 : -1;
      tree.basis(j, k) = sign * 0.003 * len;
    }
  }
  return tree;
}

}  // namespace

Eigen::VectorXd KinematicTree::bone_lengths(const ShapeParams& shape) const {
  return Eigen::VectorXd(
      Eigen::Map<const Eigen::VectorXd>(base_length.data(), num_joints()) +
      basis * shape.clamped());
}

const KinematicTree& KinematicTree::default_tree() {
  static const KinematicTree tree = build_default_tree();
  return tree;
}

std::string KinematicTree::to_json() const {
  nlohmann::json j;
  j["version"] = version;
  j["names"] = names;
  j["parents"] = parent;
  for (int i = 0; i < num_joints(); ++i) {
    j["rest_dirs"].push_back({rest_dir[i].x(), rest_dir[i].y(), rest_dir[i].z()});
    std::vector<double> row(kShapeDim);
    for (int k = 0; k < kShapeDim; ++k) row[k] = basis(i, k);
    j["basis"].push_back(row);
  }
  j["base_lengths"] = base_length;
  return j.dump(2);
}

KinematicTree KinematicTree::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  KinematicTree tree;
  tree.version = j.at("version").get<int>();
  tree.names = j.at("names").get<std::vector<std::string>>();
  tree.parent = j.at("parents").get<std::vector<int>>();
  tree.base_length = j.at("base_lengths").get<std::vector<double>>();
  int n = static_cast<int>(tree.parent.size());
  tree.basis.resize(n, kShapeDim);
  for (int i = 0; i < n; ++i) {
    auto d = j.at("rest_dirs").at(i).get<std::vector<double>>();
    tree.rest_dir.emplace_back(d.at(0), d.at(1), d.at(2));
    auto row = j.at("basis").at(i).get<std::vector<double>>();
    for (int k = 0; k < kShapeDim; ++k) tree.basis(i, k) = row.at(k);
  }
  return tree;
}

std::vector<Vec3> forward_kinematics(const KinematicTree& tree,
                                     const Vec3& root_translation,
                                     const Mat3& root_orientation,
                                     const std::vector<Mat3>& joint_angles,
                                     const ShapeParams& shape) {
  int n = tree.num_joints();
  Eigen::VectorXd lengths = tree.bone_lengths(shape);
  std::vector<Mat3> global(n);
  std::vector<Vec3> pos(n);
  global[0] = root_orientation;
  pos[0] = root_translation;
  for (int j = 1; j < n; ++j) {
    int p = tree.parent[j];
    pos[j] = pos[p] + global[p] * (tree.rest_dir[j] * lengths[j]);
    global[j] = global[p] * joint_angles[j - 1];
  }
  return pos;
}

std::vector<Vec3> tpose_joints(const KinematicTree& tree,
                               const ShapeParams& shape) {
  std::vector<Mat3> identity(tree.num_joints() - 1, Mat3::Identity());
  return forward_kinematics(tree, Vec3::Zero(), Mat3::Identity(), identity,
                            shape);
}

HeightSpan height_and_span(const KinematicTree& tree,
                           const ShapeParams& shape) {
  std::vector<Vec3> joints = tpose_joints(tree, shape);
  double min_z = joints[0].z(), max_z = joints[0].z();
  double min_x = joints[0].x(), max_x = joints[0].x();
  for (const Vec3& p : joints) {
    min_z = std::min(min_z, p.z());
    max_z = std::max(max_z, p.z());
    min_x = std::min(min_x, p.x());
    max_x = std::max(max_x, p.x());
  }
  return {max_z - min_z + kHeadPad + kFootPad, max_x - min_x};
}

RigidTransform head_from_camera(const RigidTransform& camera_pose,
                                const RigidTransform& cam_to_head) {
  return compose(cam_to_head, camera_pose);
}

}  // namespace hamos
