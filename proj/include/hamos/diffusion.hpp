#pragma once

#include "hamos/alignment.hpp"
#include "hamos/augmentation.hpp"
#include "hamos/network.hpp"

namespace hamos {

// Cumulative signal-retention coefficients alpha_bar(0..steps); alpha_bar(0)=1.
struct NoiseSchedule {
  int steps = 1000;
  Eigen::VectorXd alpha_bar;

  static NoiseSchedule cosine(int steps, double offset = 0.008);

  double at(int n) const {
    if (n < 0 || n > steps) throw StepOutOfRange("diffusion step out of range");
    return alpha_bar[n];
  }
};

struct LossWeights {
  double shape = 2.0;
  double pos = 0.25;
  double skat = 0.4;
  double guidance_scale = 8.0;
};

// X^n = sqrt(abar_n) X^0 + sqrt(1 - abar_n) noise
nn::Mat forward_noise(const nn::Mat& x0, int n, const nn::Mat& noise,
                      const NoiseSchedule& schedule);

// Mean squared error over all rotation-encoding components and frames.
double loss_simple(const nn::Mat& x0, const nn::Mat& x0_hat);

// T-pose joint position error, mean over joints; gradient w.r.t. beta_hat.
double loss_shape(const KinematicTree& tree, const ShapeParams& beta,
                  const ShapeParams& beta_hat, Vec16* grad = nullptr);

// abar * (lambda_pos * L_pos + lambda_skat * L_skat) over a full sequence in
// the canonicalized pose representation, with gradients w.r.t. the predicted
// pose matrix and (clamped) shape.
struct AuxLossResult {
  double value = 0.0;
  double pos = 0.0;   // unweighted L_pos
  double skat = 0.0;  // unweighted L_skat
  nn::Mat dx;         // T x kPoseDim
  Vec16 dbeta = Vec16::Zero();
};
AuxLossResult loss_aux(const KinematicTree& tree, const nn::Mat& x_hat,
                       const ShapeParams& beta_hat,
                       const std::vector<Mat3>& cano_rotations,
                       const std::vector<Vec3>& head_positions,
                       const std::vector<std::vector<Vec3>>& gt_joints,
                       const Eigen::MatrixXi& contacts, double alpha_bar,
                       const LossWeights& weights);

// Precomputed per-sequence training inputs.
struct TrainItem {
  std::string id;
  nn::Mat raw;  // T x kRawFeatureDim
  nn::Mat vis;  // T x 2
  nn::Mat x0;   // T x kPoseDim
  std::vector<Mat3> cano_rotations;
  std::vector<Vec3> head_positions;
  std::vector<std::vector<Vec3>> gt_joints;
  Eigen::MatrixXi contacts;  // T x 2
  ShapeParams gt_shape;
};

struct TrainConfig {
  double lr = 1e-4;
  double weight_decay = 1e-4;
  double ema_rate = 0.9999;
};

struct LossReport {
  double total = 0.0;
  double simple = 0.0;
  double shape = 0.0;
  double pos = 0.0;
  double skat = 0.0;
};

// One decoupled-weight-decay adaptive-gradient step over a batch, with EMA
// update. Deterministic given the RNG stream. Throws NonFiniteLoss with the
// offending sequence id on divergence.
class Trainer {
 public:
  Trainer(Model& model, const KinematicTree& tree, NoiseSchedule schedule,
          LossWeights weights, TrainConfig config)
      : model_(model),
        tree_(tree),
        schedule_(std::move(schedule)),
        weights_(weights),
        config_(config) {}

  LossReport step(const std::vector<const TrainItem*>& batch, Rng& rng);
  long long steps_taken() const { return steps_; }
  void set_steps_taken(long long n) { steps_ = n; }

  const NoiseSchedule& schedule() const { return schedule_; }
  const LossWeights& weights() const { return weights_; }
  const TrainConfig& train_config() const { return config_; }

 private:
  Model& model_;
  const KinematicTree& tree_;
  NoiseSchedule schedule_;
  LossWeights weights_;
  TrainConfig config_;
  long long steps_ = 0;
};

struct SampleOptions {
  int steps = 50;
  bool guidance = true;
  std::uint64_t seed = 0;
  bool use_ema = true;
  int guidance_iterations = 3;
};

// Deterministic (eta = 0) DDIM over a uniformly strided step subset, with
// optional per-step guidance refinement, followed by global alignment.
MotionSequence ddim_sample(
    Model& model, const NoiseSchedule& schedule, const LossWeights& weights,
    const KinematicTree& tree, const std::vector<RigidTransform>& head_poses,
    const std::array<std::vector<HandObservation>, 2>& hands,
    const SampleOptions& options);

}  // namespace hamos
