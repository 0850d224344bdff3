#pragma once

#include <array>

#include "hamos/augmentation.hpp"
#include "hamos/geometry.hpp"

namespace hamos {

// Per-frame spatio-temporally invariant quantities the condition vector is
// built from. All rotations/translations are relative (previous head frame,
// canonical frame, or head frame), so a global yaw + horizontal translation
// of the world inputs leaves them unchanged.
struct RawFrameFeatures {
  RigidTransform delta_head;  // head motion from t-1, in the t-1 head frame
  Mat3 head_to_cano = Mat3::Identity();
  double head_height = 0.0;  // z of the head position, m
  Mat3 delta_cano = Mat3::Identity();  // canonical heading change from t-1
  std::array<HandObservation, 2> hands;  // hand-in-head pose + visibility
};

// Flattened encoding: rotations as 6-D, translations raw.
// [ delta_head R6 | delta_head t | head_to_cano R6 | h | delta_cano R6 |
//   lHand R6,t | rHand R6,t ]
inline constexpr int kRawFeatureDim = 40;
inline constexpr int kHandFeatureDim = 9;
inline constexpr std::array<int, 2> kHandFeatureOffset = {22, 31};

// head_poses and hands cover frames 0..T; features are produced for 1..T
// (frame 0 only serves as the delta reference).
std::vector<RawFrameFeatures> build_raw_features(
    const std::vector<RigidTransform>& head_poses,
    const std::array<std::vector<HandObservation>, 2>& hands);

// Hand slots carry the pose unconditionally; visibility gating (null
// embedding substitution) happens in the embedding network.
Eigen::VectorXd encode_raw_frame(const RawFrameFeatures& raw);

// Two-layer perceptron Gamma with per-hand learnable null embeddings that
// replace invisible hand slots before the first layer.
struct GammaWeights {
  Eigen::MatrixXd w1;  // kRawFeatureDim x D
  Eigen::RowVectorXd b1;
  Eigen::MatrixXd w2;  // D x D
  Eigen::RowVectorXd b2;
  std::array<Eigen::RowVectorXd, 2> null_hand;  // 1 x kHandFeatureDim
};

// Omega_{1:T}: one row per frame.
Eigen::MatrixXd embed_features(const std::vector<RawFrameFeatures>& raw,
                               const GammaWeights& weights);

}  // namespace hamos
