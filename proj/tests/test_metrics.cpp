#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <random>

#include "doctest.h"
#include "hamos/metrics.hpp"
#include "hamos/errors.hpp"

using namespace hamos;

namespace {

MotionSequence translation_sequence(const std::vector<Vec3>& roots) {
  MotionSequence seq;
  for (const Vec3& r : roots) {
    seq.root_translation.push_back(r);
    seq.root_orientation.push_back(Mat3::Identity());
    seq.joint_angles.emplace_back(kNumJoints - 1, Mat3::Identity());
  }
  return seq;
}

MotionSequence shifted(const MotionSequence& seq, const Vec3& offset) {
  MotionSequence out = seq;
  for (auto& r : out.root_translation) r += offset;
  return out;
}

std::vector<Vec3> static_roots(int frames) {
  return std::vector<Vec3>(frames, Vec3(0.2, -0.1, 0.9));
}

}  // namespace

TEST_CASE("identical sequences score zero position and velocity error") {
  const KinematicTree& tree = KinematicTree::default_tree();
  const MotionSequence seq = translation_sequence(static_roots(8));
  CHECK(mpjpe(tree, seq, seq) == 0.0);
  CHECK(mpjve(tree, seq, seq) == 0.0);
  std::array<std::vector<char>, 2> vis;
  vis[0].assign(8, 1);
  vis[1].assign(8, 1);
  const auto pe = hand_pe(tree, seq, seq, vis, true);
  REQUIRE(pe.has_value());
  CHECK(*pe == 0.0);
}

TEST_CASE("a constant 10 mm offset scores exactly 10 mm") {
  const KinematicTree& tree = KinematicTree::default_tree();
  const MotionSequence gt = translation_sequence(static_roots(6));
  const MotionSequence pred = shifted(gt, Vec3(0.0, 0.0, 0.01));
  CHECK(mpjpe(tree, pred, gt) == doctest::Approx(10.0).epsilon(1e-10));
  // The offset is constant in time, so the velocity error vanishes.
  CHECK(mpjve(tree, pred, gt) == doctest::Approx(0.0).epsilon(1e-10));
  std::array<std::vector<char>, 2> vis;
  vis[0].assign(6, 1);
  vis[1].assign(6, 1);
  CHECK(*hand_pe(tree, pred, gt, vis, true) ==
        doctest::Approx(10.0).epsilon(1e-10));
}

TEST_CASE("a 0.1 m/s velocity offset scores 10 cm/s") {
  const KinematicTree& tree = KinematicTree::default_tree();
  const int T = 10;
  const double fps = kEvalFps;
  std::vector<Vec3> gt_roots = static_roots(T), pred_roots = static_roots(T);
  for (int t = 0; t < T; ++t)
    pred_roots[t] += Vec3(0.1 * t / fps, 0.0, 0.0);  // drifts at 0.1 m/s
  const MotionSequence gt = translation_sequence(gt_roots);
  const MotionSequence pred = translation_sequence(pred_roots);
  CHECK(mpjve(tree, pred, gt, fps) == doctest::Approx(10.0).epsilon(1e-9));
}

TEST_CASE("jerk of polynomial trajectories") {
  const KinematicTree& tree = KinematicTree::default_tree();
  const int T = 20;
  const double fps = kEvalFps;
  // Quadratic in time: the third difference is identically zero.
  std::vector<Vec3> quad(T);
  for (int k = 0; k < T; ++k) {
    const double t = k / fps;
    quad[k] = Vec3(0.3 * t * t, -0.2 * t * t + 0.5 * t, 1.0 + 0.1 * t);
  }
  CHECK(jerk(tree, translation_sequence(quad), fps) ==
        doctest::Approx(0.0).epsilon(1e-9));

  // Cubic x(t) = t^3: constant jerk of 6 m/s^3 = 0.006 km/s^3.
  std::vector<Vec3> cubic(T);
  for (int k = 0; k < T; ++k) {
    const double t = k / fps;
    cubic[k] = Vec3(t * t * t, 0.0, 1.0);
  }
  CHECK(std::abs(jerk(tree, translation_sequence(cubic), fps) - 0.006) < 1e-9);
}

TEST_CASE("hand position error respects the visibility masks") {
  const KinematicTree& tree = KinematicTree::default_tree();
  const int T = 4;
  const MotionSequence gt = translation_sequence(static_roots(T));
  // Shift the whole body 20 mm so both wrists are off by exactly 20 mm.
  const MotionSequence pred = shifted(gt, Vec3(0.02, 0.0, 0.0));

  std::array<std::vector<char>, 2> vis;
  vis[0] = {1, 0, 1, 0};  // left visible at t=0,2
  vis[1] = {0, 0, 0, 1};  // right visible at t=3
  const auto masked = hand_pe(tree, pred, gt, vis, true);
  REQUIRE(masked.has_value());
  CHECK(*masked == doctest::Approx(20.0).epsilon(1e-10));

  // Unmasked: all 2T wrist samples contribute.
  const auto full = hand_pe(tree, pred, gt, vis, false);
  REQUIRE(full.has_value());
  CHECK(*full == doctest::Approx(20.0).epsilon(1e-10));

  // Mixed errors: make the prediction match at the masked-in frames only for
  // the left hand, then the masked mean only sees the right-hand error.
  std::array<std::vector<char>, 2> left_only;
  left_only[0] = {1, 1, 1, 1};
  left_only[1] = {0, 0, 0, 0};
  const auto left = hand_pe(tree, pred, gt, left_only, true);
  REQUIRE(left.has_value());
  CHECK(*left == doctest::Approx(20.0).epsilon(1e-10));

  // No visible frame at all -> no value.
  std::array<std::vector<char>, 2> none;
  none[0].assign(T, 0);
  none[1].assign(T, 0);
  CHECK(!hand_pe(tree, pred, gt, none, true).has_value());
}

TEST_CASE("masked hand error averages per-sample, not per-hand") {
  const KinematicTree& tree = KinematicTree::default_tree();
  const int T = 2;
  const MotionSequence gt = translation_sequence(static_roots(T));
  // Different wrist errors per frame via distinct root offsets.
  MotionSequence pred = gt;
  pred.root_translation[0] += Vec3(0.01, 0, 0);  // 10 mm at t=0
  pred.root_translation[1] += Vec3(0.03, 0, 0);  // 30 mm at t=1
  std::array<std::vector<char>, 2> vis;
  vis[0] = {1, 1};
  vis[1] = {1, 0};
  // Samples: left 10, left 30, right 10 -> mean 50/3.
  const auto pe = hand_pe(tree, pred, gt, vis, true);
  REQUIRE(pe.has_value());
  CHECK(*pe == doctest::Approx(50.0 / 3.0).epsilon(1e-10));
}

TEST_CASE("frame count mismatches are rejected") {
  const KinematicTree& tree = KinematicTree::default_tree();
  const MotionSequence a = translation_sequence(static_roots(5));
  const MotionSequence b = translation_sequence(static_roots(6));
  CHECK_THROWS_AS(mpjpe(tree, a, b), LengthMismatch);
  CHECK_THROWS_AS(mpjve(tree, a, b), LengthMismatch);
  std::array<std::vector<char>, 2> vis;
  CHECK_THROWS_AS(hand_pe(tree, a, b, vis, false), LengthMismatch);
}

TEST_CASE("shape metrics against the height/span oracle") {
  const KinematicTree& tree = KinematicTree::default_tree();
  ShapeParams gt;
  gt.beta[0] = 1.0;
  ShapeParams pred;
  pred.beta[0] = -0.5;
  const HeightSpan hs_gt = height_and_span(tree, gt);
  const HeightSpan hs_pred = height_and_span(tree, pred);

  // A single predicted shape: zero standard deviation, direct errors.
  const ShapeMetrics single = shape_metrics(tree, {pred}, gt);
  CHECK(single.height_std == 0.0);
  CHECK(single.span_std == 0.0);
  CHECK(single.height_err ==
        doctest::Approx(100.0 * std::abs(hs_pred.height - hs_gt.height))
            .epsilon(1e-10));
  CHECK(single.span_err ==
        doctest::Approx(100.0 * std::abs(hs_pred.span - hs_gt.span))
            .epsilon(1e-10));

  // Two shapes: population standard deviation is half the gap.
  ShapeParams other;
  other.beta[0] = 0.75;
  const HeightSpan hs_other = height_and_span(tree, other);
  const ShapeMetrics two = shape_metrics(tree, {pred, other}, gt);
  CHECK(two.height_std ==
        doctest::Approx(100.0 * std::abs(hs_pred.height - hs_other.height) / 2.0)
            .epsilon(1e-10));
  CHECK(two.span_std ==
        doctest::Approx(100.0 * std::abs(hs_pred.span - hs_other.span) / 2.0)
            .epsilon(1e-10));
  const double mean_h = (hs_pred.height + hs_other.height) / 2.0;
  CHECK(two.height_err ==
        doctest::Approx(100.0 * std::abs(mean_h - hs_gt.height)).epsilon(1e-10));

  // Symmetric predictions around the truth cancel in the mean error.
  const ShapeMetrics sym = shape_metrics(tree, {gt, gt}, gt);
  CHECK(sym.height_err == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(sym.height_std == doctest::Approx(0.0).epsilon(1e-12));
}
