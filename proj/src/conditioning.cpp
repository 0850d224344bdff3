#include "hamos/conditioning.hpp"

namespace hamos {

std::vector<RawFrameFeatures> build_raw_features(
    const std::vector<RigidTransform>& head_poses,
    const std::array<std::vector<HandObservation>, 2>& hands) {
  size_t n = head_poses.size();
  if (n < 2) {
    throw LengthMismatch("build_raw_features: need frames 0..T with T >= 1");
  }
  if (hands[0].size() != n || hands[1].size() != n) {
    throw LengthMismatch("build_raw_features: hand/head lengths differ");
  }
  std::vector<CanonicalFrame> frames = canonical_frames(head_poses);
  std::vector<RawFrameFeatures> out;
  out.reserve(n - 1);
  for (size_t t = 1; t < n; ++t) {
    RawFrameFeatures f;
    f.delta_head = relative_head_motion(head_poses[t - 1], head_poses[t]);
    f.head_to_cano = frames[t].transform.R.transpose() * head_poses[t].R;
    f.head_height = head_poses[t].t.z();
    f.delta_cano =
        frames[t - 1].transform.R.transpose() * frames[t].transform.R;
    f.hands = {hands[0][t], hands[1][t]};
    out.push_back(f);
  }
  return out;
}

Eigen::VectorXd encode_raw_frame(const RawFrameFeatures& raw) {
  Eigen::VectorXd x(kRawFeatureDim);
  x.segment<6>(0) = rot_to_6d(raw.delta_head.R);
  x.segment<3>(6) = raw.delta_head.t;
  x.segment<6>(9) = rot_to_6d(raw.head_to_cano);
  x[15] = raw.head_height;
  x.segment<6>(16) = rot_to_6d(raw.delta_cano);
  for (int hand = 0; hand < 2; ++hand) {
    int o = kHandFeatureOffset[hand];
    x.segment<6>(o) = rot_to_6d(raw.hands[hand].pose.R);
    x.segment<3>(o + 6) = raw.hands[hand].pose.t;
  }
  return x;
}

namespace {
double silu(double v) { return v / (1.0 + std::exp(-v)); }
}  // namespace

Eigen::MatrixXd embed_features(const std::vector<RawFrameFeatures>& raw,
                               const GammaWeights& weights) {
  int T = static_cast<int>(raw.size());
  Eigen::MatrixXd x(T, kRawFeatureDim);
  for (int t = 0; t < T; ++t) {
    x.row(t) = encode_raw_frame(raw[t]).transpose();
    for (int hand = 0; hand < 2; ++hand) {
      if (!raw[t].hands[hand].visible) {
        x.row(t).segment<kHandFeatureDim>(kHandFeatureOffset[hand]) =
            weights.null_hand[hand];
      }
    }
  }
  Eigen::MatrixXd h = (x * weights.w1).rowwise() + weights.b1;
  h = h.unaryExpr([](double v) { return silu(v); });
  return (h * weights.w2).rowwise() + weights.b2;
}

}  // namespace hamos
