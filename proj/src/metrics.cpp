#include "hamos/metrics.hpp"

#include <cmath>

#include "hamos/errors.hpp"

namespace hamos {

std::vector<std::vector<Vec3>> joint_positions(const KinematicTree& tree,
                                               const MotionSequence& seq) {
  std::vector<std::vector<Vec3>> out;
  out.reserve(seq.frames());
  for (int t = 0; t < seq.frames(); ++t) {
    out.push_back(forward_kinematics(tree, seq.root_translation[t],
                                     seq.root_orientation[t],
                                     seq.joint_angles[t], seq.shape));
  }
  return out;
}

namespace {

void check_lengths(const MotionSequence& pred, const MotionSequence& gt) {
  if (pred.frames() != gt.frames())
    throw LengthMismatch("prediction and ground truth frame counts differ");
}

}  // namespace

double mpjpe(const KinematicTree& tree, const MotionSequence& pred,
             const MotionSequence& gt) {
  check_lengths(pred, gt);
  const auto p = joint_positions(tree, pred);
  const auto g = joint_positions(tree, gt);
  const int J = tree.num_joints();
  double sum = 0.0;
  long count = 0;
  for (size_t t = 0; t < p.size(); ++t)
    for (int j = 0; j < J; ++j, ++count) sum += (p[t][j] - g[t][j]).norm();
  return count == 0 ? 0.0 : 1000.0 * sum / double(count);
}

double mpjve(const KinematicTree& tree, const MotionSequence& pred,
             const MotionSequence& gt, double fps) {
  check_lengths(pred, gt);
  const auto p = joint_positions(tree, pred);
  const auto g = joint_positions(tree, gt);
  const int J = tree.num_joints();
  double sum = 0.0;
  long count = 0;
  for (size_t t = 0; t + 1 < p.size(); ++t) {
    for (int j = 0; j < J; ++j, ++count) {
      const Vec3 vp = (p[t + 1][j] - p[t][j]) * fps;
      const Vec3 vg = (g[t + 1][j] - g[t][j]) * fps;
      sum += (vp - vg).norm();
    }
  }
  return count == 0 ? 0.0 : 100.0 * sum / double(count);
}

double jerk(const KinematicTree& tree, const MotionSequence& pred, double fps) {
  const auto p = joint_positions(tree, pred);
  const int J = tree.num_joints();
  const double fps3 = fps * fps * fps;
  double sum = 0.0;
  long count = 0;
  for (size_t t = 0; t + 3 < p.size(); ++t) {
    for (int j = 0; j < J; ++j, ++count) {
      const Vec3 d3 =
          p[t + 3][j] - 3.0 * p[t + 2][j] + 3.0 * p[t + 1][j] - p[t][j];
      sum += d3.norm() * fps3;
    }
  }
  return count == 0 ? 0.0 : 1e-3 * sum / double(count);
}

std::optional<double> hand_pe(const KinematicTree& tree,
                              const MotionSequence& pred,
                              const MotionSequence& gt,
                              const std::array<std::vector<char>, 2>& visibility,
                              bool visible_only) {
  check_lengths(pred, gt);
  const auto p = joint_positions(tree, pred);
  const auto g = joint_positions(tree, gt);
  double sum = 0.0;
  long count = 0;
  for (size_t t = 0; t < p.size(); ++t) {
    for (int h = 0; h < 2; ++h) {
      if (visible_only && (t >= visibility[h].size() || !visibility[h][t]))
        continue;
      const int j = kWristJoints[h];
      sum += (p[t][j] - g[t][j]).norm();
      ++count;
    }
  }
  if (count == 0) return std::nullopt;
  return 1000.0 * sum / double(count);
}

ShapeMetrics shape_metrics(const KinematicTree& tree,
                           const std::vector<ShapeParams>& pred_shapes,
                           const ShapeParams& gt_shape) {
  ShapeMetrics out;
  if (pred_shapes.empty()) return out;
  const HeightSpan gt = height_and_span(tree, gt_shape);
  const int n = static_cast<int>(pred_shapes.size());
  std::vector<double> heights(n), spans(n);
  double mean_h = 0.0, mean_s = 0.0;
  for (int i = 0; i < n; ++i) {
    const HeightSpan hs = height_and_span(tree, pred_shapes[i]);
    heights[i] = hs.height;
    spans[i] = hs.span;
    mean_h += hs.height;
    mean_s += hs.span;
  }
  mean_h /= n;
  mean_s /= n;
  double var_h = 0.0, var_s = 0.0;
  for (int i = 0; i < n; ++i) {
    var_h += (heights[i] - mean_h) * (heights[i] - mean_h);
    var_s += (spans[i] - mean_s) * (spans[i] - mean_s);
  }
  out.height_err = 100.0 * std::abs(mean_h - gt.height);
  out.span_err = 100.0 * std::abs(mean_s - gt.span);
  out.height_std = 100.0 * std::sqrt(var_h / n);
  out.span_std = 100.0 * std::sqrt(var_s / n);
  return out;
}

}  // namespace hamos
