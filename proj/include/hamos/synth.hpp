#pragma once

#include "hamos/data.hpp"

namespace hamos {

struct SynthOptions {
  int count = 8;
  int min_frames = 96;
  int max_frames = 256;
  double fps = 30.0;
  std::string id_prefix = "synth";
};

// One procedurally composed motion: a random schedule of walk / turn / squat /
// reach / idle segments with smoothed control curves, a root trajectory
// integrated from the heading, FK-derived head and hand-in-head tracks
// (all visible; augmentation is a separate pass), and heuristic foot contacts.
MotionRecord generate_motion(const KinematicTree& tree, const std::string& id,
                             int frames, double fps, Rng& rng);

std::vector<MotionRecord> generate_synthetic_dataset(const KinematicTree& tree,
                                                     const SynthOptions& options,
                                                     Rng& rng);

// HuMoR-style contact heuristic thresholds.
inline constexpr double kContactHeight = 0.05;  // m
inline constexpr double kContactSpeed = 0.30;   // m/s

// Foot contact labels for frames 1..T of a T+1-frame position track.
Eigen::MatrixXi contact_labels(const std::vector<std::vector<Vec3>>& joints,
                               double fps);

// Global joint rotations under the FK convention (G_0 = root orientation,
// G_j = G_parent * R_j).
std::vector<Mat3> global_rotations(const KinematicTree& tree,
                                   const Mat3& root_orientation,
                                   const std::vector<Mat3>& joint_angles);

}  // namespace hamos
