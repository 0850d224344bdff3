#include "hamos/augmentation.hpp"

#include <algorithm>
#include <cmath>

namespace hamos {

std::pair<double, double> wrist_angles(const RigidTransform& hand_in_head) {
  const Vec3& q = hand_in_head.t;
  if (q.norm() <= 1e-6) {
    throw DegeneratePosition("wrist position coincides with the head origin");
  }
  double yaw = std::atan2(q.x(), q.y());
  double pitch = std::atan2(q.z(), std::hypot(q.x(), q.y()));
  return {yaw, pitch};
}

bool is_visible(double psi_x, double psi_y, const FovSpec& fov) {
  double u = std::abs((psi_x - fov.phi_x) / fov.gamma_x);
  double v = std::abs((psi_y - fov.phi_y) / fov.gamma_y);
  return std::pow(u, fov.power) + std::pow(v, fov.power) <= 1.0;
}

FovSpec sample_fov(Rng& rng) {
  std::uniform_real_distribution<double> gx(0.35, 2.15);
  std::uniform_real_distribution<double> gy(0.35, 1.35);
  std::uniform_real_distribution<double> ox(-0.15, 0.15);
  std::uniform_real_distribution<double> oy(0.0, 1.5);
  std::uniform_real_distribution<double> pw(2.0, 10.0);
  for (int attempt = 0; attempt < 10000; ++attempt) {
    FovSpec fov;
    fov.gamma_x = gx(rng);
    fov.gamma_y = gy(rng);
    fov.phi_x = ox(rng);
    fov.phi_y = oy(rng);
    fov.power = pw(rng);
    double aspect = fov.gamma_y / fov.gamma_x;
    if (aspect < 0.4 || aspect > 1.1) continue;
    if (fov.phi_y > 0.4 + (fov.gamma_y - 0.35) * 1.1) continue;
    return fov;
  }
  throw ResamplingExhausted("sample_fov: no accepted draw in 10000 attempts");
}

double drop_rate(int frames, const DropSpec& spec) {
  return static_cast<double>(frames) * spec.ratio / spec.mean;
}

VisibilityMask sample_drops(int frames, const DropSpec& spec, Rng& rng) {
  VisibilityMask mask;
  mask.bits.assign(frames, false);
  double lambda = drop_rate(frames, spec);
  if (lambda <= 0.0) return mask;
  std::poisson_distribution<int> event_count(lambda);
  // Log-Normal parameterized by the duration's own mean/std.
  double m2 = spec.mean * spec.mean;
  double s2 = spec.stddev * spec.stddev;
  double mu = std::log(m2 / std::sqrt(m2 + s2));
  double sigma = std::sqrt(std::log(1.0 + s2 / m2));
  std::lognormal_distribution<double> duration(mu, sigma);
  std::uniform_int_distribution<int> start_index(0, frames - 1);
  int events = event_count(rng);
  for (int e = 0; e < events; ++e) {
    double raw = sigma > 0.0 ? duration(rng) : spec.mean;
    int length = std::max(spec.min_duration,
                          static_cast<int>(std::llround(raw)));
    int start = start_index(rng);
    int end = std::min(frames, start + length);
    for (int t = start; t < end; ++t) mask.bits[t] = true;
  }
  return mask;
}

std::array<std::vector<HandObservation>, 2> apply_augmentation(
    const std::array<std::vector<RigidTransform>, 2>& hand_in_head,
    const FovSpec& fov, const DropSpec& short_drops,
    const DropSpec& long_drops, Rng& rng) {
  if (hand_in_head[0].size() != hand_in_head[1].size()) {
    throw LengthMismatch("apply_augmentation: per-hand lengths differ");
  }
  int T = static_cast<int>(hand_in_head[0].size());
  std::array<std::vector<HandObservation>, 2> out;
  for (int hand = 0; hand < 2; ++hand) {
    VisibilityMask short_mask = sample_drops(T, short_drops, rng);
    VisibilityMask long_mask = sample_drops(T, long_drops, rng);
    out[hand].reserve(T);
    for (int t = 0; t < T; ++t) {
      HandObservation obs;
      obs.pose = hand_in_head[hand][t];
      auto [yaw, pitch] = wrist_angles(obs.pose);
      obs.visible = is_visible(yaw, pitch, fov) && !short_mask.bits[t] &&
                    !long_mask.bits[t];
      out[hand].push_back(obs);
    }
  }
  return out;
}

FovSpec pinhole_fov(double fov_degrees) {
  FovSpec fov;
  double half = 0.5 * fov_degrees * M_PI / 180.0;
  fov.gamma_x = half;
  fov.gamma_y = half;
  fov.phi_x = 0.0;
  fov.phi_y = 0.0;
  fov.power = 8.0;  // near-square boundary
  return fov;
}

}  // namespace hamos
