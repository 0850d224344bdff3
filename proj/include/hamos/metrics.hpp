#pragma once

#include <array>
#include <optional>
#include <vector>

#include "hamos/skeleton.hpp"

namespace hamos {

inline constexpr double kEvalFps = 30.0;

struct MetricReport {
  double mpjpe = 0.0;       // mm
  double mpjve = 0.0;       // cm/s
  double jerk = 0.0;        // km/s^3
  double hand_pe = 0.0;     // mm
  std::optional<double> vis_hand_pe;  // mm; absent when no visible frame
  double height_err = 0.0;  // cm
  double span_err = 0.0;    // cm
  double height_std = 0.0;  // cm
  double span_std = 0.0;    // cm
  double runtime = 0.0;     // s
};

// World-frame joint positions for every frame of a sequence.
std::vector<std::vector<Vec3>> joint_positions(const KinematicTree& tree,
                                               const MotionSequence& seq);

// Mean per-joint position error in mm, world coordinates, no alignment.
double mpjpe(const KinematicTree& tree, const MotionSequence& pred,
             const MotionSequence& gt);

// Mean per-joint error of forward finite-difference velocities, cm/s.
double mpjve(const KinematicTree& tree, const MotionSequence& pred,
             const MotionSequence& gt, double fps = kEvalFps);

// Mean magnitude of the third forward difference of joint positions scaled
// by fps^3, reported in km/s^3.
double jerk(const KinematicTree& tree, const MotionSequence& pred,
            double fps = kEvalFps);

// Mean wrist position error over both hands in mm. With visible_only,
// restricted per hand to frames flagged visible; empty selection -> nullopt.
std::optional<double> hand_pe(const KinematicTree& tree,
                              const MotionSequence& pred,
                              const MotionSequence& gt,
                              const std::array<std::vector<char>, 2>& visibility,
                              bool visible_only);

struct ShapeMetrics {
  double height_err = 0.0;  // cm
  double span_err = 0.0;    // cm
  double height_std = 0.0;  // cm
  double span_std = 0.0;    // cm
};

// Height/span errors of the mean prediction vs ground truth plus population
// standard deviations over the per-frame predictions (zero for a single
// shape), all in cm.
ShapeMetrics shape_metrics(const KinematicTree& tree,
                           const std::vector<ShapeParams>& pred_shapes,
                           const ShapeParams& gt_shape);

}  // namespace hamos
