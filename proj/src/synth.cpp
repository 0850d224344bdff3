#include "hamos/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace hamos {

namespace {

constexpr double kPi = std::numbers::pi;

enum class Activity { kWalk, kTurn, kSquat, kReach, kIdle };

struct Controls {
  // Per-frame smoothed control channels.
  std::vector<double> speed;      // m/s
  std::vector<double> turn_rate;  // rad/s
  std::vector<double> squat;      // squat angle, rad
  std::vector<double> reach_l;    // 0..1
  std::vector<double> reach_r;    // 0..1
};

void box_smooth(std::vector<double>& v, int radius, int passes) {
  const int n = static_cast<int>(v.size());
  std::vector<double> tmp(n);
  for (int p = 0; p < passes; ++p) {
    for (int i = 0; i < n; ++i) {
      double sum = 0.0;
      int count = 0;
      for (int k = -radius; k <= radius; ++k) {
        const int j = i + k;
        if (j < 0 || j >= n) continue;
        sum += v[j];
        ++count;
      }
      tmp[i] = sum / count;
    }
    v.swap(tmp);
  }
}

Controls sample_controls(int frames, double fps, Rng& rng) {
  Controls c;
  c.speed.assign(frames, 0.0);
  c.turn_rate.assign(frames, 0.0);
  c.squat.assign(frames, 0.0);
  c.reach_l.assign(frames, 0.0);
  c.reach_r.assign(frames, 0.0);

  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_real_distribution<double> seg_len(1.5, 3.5);  // s
  int start = 0;
  while (start < frames) {
    const int len = std::min(
        frames - start, std::max(8, int(std::lround(seg_len(rng) * fps))));
    const double pick = u01(rng);
    Activity act;
    if (pick < 0.35) act = Activity::kWalk;
    else if (pick < 0.50) act = Activity::kTurn;
    else if (pick < 0.65) act = Activity::kSquat;
    else if (pick < 0.85) act = Activity::kReach;
    else act = Activity::kIdle;

    double speed = 0.0, turn = 0.0, squat = 0.0;
    bool reach_left = false, reach_right = false;
    switch (act) {
      case Activity::kWalk:
        speed = 0.6 + 0.7 * u01(rng);
        turn = -0.3 + 0.6 * u01(rng);
        break;
      case Activity::kTurn:
        speed = 0.3 * u01(rng);
        turn = (u01(rng) < 0.5 ? -1.0 : 1.0) * (0.6 + 0.6 * u01(rng));
        break;
      case Activity::kSquat:
        squat = 0.5 + 0.5 * u01(rng);
        break;
      case Activity::kReach: {
        const double which = u01(rng);
        reach_left = which < 0.7;
        reach_right = which > 0.3;
        break;
      }
      case Activity::kIdle:
        break;
    }
    for (int i = 0; i < len; ++i) {
      const int t = start + i;
      const double u = (len > 1) ? double(i) / (len - 1) : 0.0;
      const double bump = std::sin(kPi * u);  // zero at both segment ends
      c.speed[t] = speed;
      c.turn_rate[t] = turn;
      c.squat[t] = squat * bump;
      c.reach_l[t] = reach_left ? bump : 0.0;
      c.reach_r[t] = reach_right ? bump : 0.0;
    }
    start += len;
  }
  box_smooth(c.speed, 4, 2);
  box_smooth(c.turn_rate, 4, 2);
  box_smooth(c.squat, 3, 2);
  box_smooth(c.reach_l, 3, 2);
  box_smooth(c.reach_r, 3, 2);
  return c;
}

}  // namespace

std::vector<Mat3> global_rotations(const KinematicTree& tree,
                                   const Mat3& root_orientation,
                                   const std::vector<Mat3>& joint_angles) {
  const int J = tree.num_joints();
  std::vector<Mat3> g(J);
  g[0] = root_orientation;
  for (int j = 1; j < J; ++j) g[j] = g[tree.parent[j]] * joint_angles[j - 1];
  return g;
}

Eigen::MatrixXi contact_labels(const std::vector<std::vector<Vec3>>& joints,
                               double fps) {
  const int T = static_cast<int>(joints.size()) - 1;
  Eigen::MatrixXi contacts(T, 2);
  for (int t = 1; t <= T; ++t) {
    for (int f = 0; f < 2; ++f) {
      const int j = kFootJoints[f];
      const double height = joints[t][j].z();
      const double speed = (joints[t][j] - joints[t - 1][j]).norm() * fps;
      contacts(t - 1, f) =
          (height < kContactHeight && speed < kContactSpeed) ? 1 : 0;
    }
  }
  return contacts;
}

MotionRecord generate_motion(const KinematicTree& tree, const std::string& id,
                             int frames, double fps, Rng& rng) {
  const int T = frames;
  std::uniform_real_distribution<double> beta_dist(-2.0, 2.0);
  ShapeParams shape;
  for (int i = 0; i < kShapeDim; ++i) shape.beta[i] = beta_dist(rng);

  // Pelvis height that rests the lowest T-pose joint just above the floor.
  const std::vector<Vec3> tpose = tpose_joints(tree, shape);
  double min_z = 0.0;
  for (const Vec3& p : tpose) min_z = std::min(min_z, p.z());
  const double pelvis_z = 0.02 - min_z;
  const Eigen::VectorXd lengths = tree.bone_lengths(shape);
  const double leg_drop_scale = lengths[kLeftKnee] + lengths[kLeftAnkle];

  const Controls c = sample_controls(T + 1, fps, rng);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double phase0 = 2.0 * kPi * u01(rng);
  const double yaw0 = 2.0 * kPi * u01(rng);

  std::vector<Vec3> root_t(T + 1);
  std::vector<Mat3> root_r(T + 1);
  std::vector<std::vector<Mat3>> angles(T + 1,
                                        std::vector<Mat3>(kNumJoints - 1,
                                                          Mat3::Identity()));

  double yaw = yaw0, phase = phase0;
  Vec3 pos(0.0, 0.0, 0.0);
  for (int t = 0; t <= T; ++t) {
    const double speed = c.speed[t];
    const double gate = std::min(1.0, speed / 0.3);
    const double sq = c.squat[t];
    yaw += c.turn_rate[t] / fps;
    const Mat3 heading = rot_z(yaw);
    pos += (speed / fps) * (heading * Vec3(0.0, 1.0, 0.0));
    const double freq = 1.4 + 0.5 * speed;
    phase += 2.0 * kPi * freq / fps * gate;

    const double drop = leg_drop_scale * (1.0 - std::cos(sq));
    const double bounce = 0.015 * gate * std::sin(2.0 * phase);
    root_t[t] = Vec3(pos.x(), pos.y(), pelvis_z - drop + bounce);
    const double lean = 0.05 * gate + 0.15 * sq;
    root_r[t] = heading * rot_x(lean);

    auto& a = angles[t];
    auto set = [&](int joint, const Mat3& r) { a[joint - 1] = r; };

    // Legs: sinusoidal walk cycle plus the squat flexion.
    const double amp = 0.40 * gate * std::min(1.0, speed / 1.2 + 0.3);
    const double hip_l = amp * std::sin(phase);
    const double hip_r = amp * std::sin(phase + kPi);
    const double knee_l = 0.12 * gate + 0.55 * gate * std::max(0.0, -std::sin(phase));
    const double knee_r =
        0.12 * gate + 0.55 * gate * std::max(0.0, -std::sin(phase + kPi));
    set(kLeftHip, rot_x(hip_l + sq));
    set(kRightHip, rot_x(hip_r + sq));
    set(kLeftKnee, rot_x(-(knee_l + 2.0 * sq)));
    set(kRightKnee, rot_x(-(knee_r + 2.0 * sq)));
    set(kLeftAnkle, rot_x(0.3 * hip_l * gate + sq));
    set(kRightAnkle, rot_x(0.3 * hip_r * gate + sq));

    // Torso counter-sway and a small breathing pitch.
    set(kSpine1, rot_z(-0.10 * amp * std::sin(phase)) *
                     rot_x(0.02 * std::sin(0.7 * t / fps)));
    set(kSpine2, rot_z(-0.05 * amp * std::sin(phase)));
    set(kNeck, rot_x(-0.12 * sq + 0.02 * std::sin(1.3 * t / fps)));

    // Arms: dropped to the sides, counter-swing while walking, forward
    // raises during reach segments.
    const double drop_arm = 1.25;
    const double swing_l = 0.35 * amp * std::sin(phase + kPi);
    const double swing_r = 0.35 * amp * std::sin(phase);
    const double raise_l = 1.45 * c.reach_l[t];
    const double raise_r = 1.45 * c.reach_r[t];
    // The arm hangs along -z after the rot_y drop, so a forward raise is a
    // rotation about x applied before it.
    set(kLeftShoulder,
        rot_z(0.45 * c.reach_l[t]) * rot_x(swing_l + raise_l) *
            rot_y(drop_arm * (1.0 - 0.2 * c.reach_l[t])));
    set(kRightShoulder,
        rot_z(-0.45 * c.reach_r[t]) * rot_x(swing_r + raise_r) *
            rot_y(-drop_arm * (1.0 - 0.2 * c.reach_r[t])));
    set(kLeftElbow,
        rot_z((0.25 + 0.15 * gate) * (1.0 - 0.7 * c.reach_l[t])));
    set(kRightElbow,
        rot_z(-(0.25 + 0.15 * gate) * (1.0 - 0.7 * c.reach_r[t])));
    set(kLeftWrist, rot_x(0.08 * std::sin(phase)));
    set(kRightWrist, rot_x(0.08 * std::sin(phase + kPi)));
  }

  // FK tracks for the derived signals.
  std::vector<std::vector<Vec3>> joints(T + 1);
  for (int t = 0; t <= T; ++t)
    joints[t] = forward_kinematics(tree, root_t[t], root_r[t], angles[t], shape);

  MotionRecord rec;
  rec.id = id;
  rec.fps = fps;
  rec.motion.shape = shape;
  for (int t = 1; t <= T; ++t) {
    rec.motion.root_translation.push_back(root_t[t]);
    rec.motion.root_orientation.push_back(root_r[t]);
    rec.motion.joint_angles.push_back(angles[t]);
  }
  rec.contacts = contact_labels(joints, fps);

  rec.head.resize(T + 1);
  for (int h = 0; h < 2; ++h) rec.hands[h].resize(T + 1);
  for (int t = 0; t <= T; ++t) {
    const std::vector<Mat3> g = global_rotations(tree, root_r[t], angles[t]);
    const RigidTransform head{g[kHead], joints[t][kHead]};
    rec.head[t] = head;
    for (int h = 0; h < 2; ++h) {
      const int w = kWristJoints[h];
      rec.hands[h][t].pose =
          compose(inverse(head), RigidTransform{g[w], joints[t][w]});
      rec.hands[h][t].visible = true;
    }
  }
  return rec;
}

std::vector<MotionRecord> generate_synthetic_dataset(const KinematicTree& tree,
                                                     const SynthOptions& options,
                                                     Rng& rng) {
  std::vector<MotionRecord> out;
  std::uniform_int_distribution<int> len_dist(options.min_frames,
                                              options.max_frames);
  for (int i = 0; i < options.count; ++i) {
    const int frames = len_dist(rng);
    out.push_back(generate_motion(tree,
                                  options.id_prefix + "_" + std::to_string(i),
                                  frames, options.fps, rng));
  }
  return out;
}

}  // namespace hamos
