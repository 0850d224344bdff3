#include "hamos/diffusion.hpp"

#include <cmath>
#include <numbers>

#include "hamos/guidance.hpp"

namespace hamos {

NoiseSchedule NoiseSchedule::cosine(int steps, double offset) {
  NoiseSchedule s;
  s.steps = steps;
  s.alpha_bar.resize(steps + 1);
  const double half_pi = std::numbers::pi / 2.0;
  auto f = [&](double n) {
    double c = std::cos((n / steps + offset) / (1.0 + offset) * half_pi);
    return c * c;
  };
  const double f0 = f(0.0);
  for (int n = 0; n <= steps; ++n) s.alpha_bar[n] = f(double(n)) / f0;
  return s;
}

nn::Mat forward_noise(const nn::Mat& x0, int n, const nn::Mat& noise,
                      const NoiseSchedule& schedule) {
  const double ab = schedule.at(n);
  return std::sqrt(ab) * x0 + std::sqrt(1.0 - ab) * noise;
}

double loss_simple(const nn::Mat& x0, const nn::Mat& x0_hat) {
  return (x0_hat - x0).squaredNorm() / double(x0.size());
}

double loss_shape(const KinematicTree& tree, const ShapeParams& beta,
                  const ShapeParams& beta_hat, Vec16* grad) {
  const std::vector<Vec3> gt = tpose_joints(tree, beta);
  const std::vector<Vec3> pred = tpose_with_grad(tree, beta_hat);
  const int J = tree.num_joints();
  double loss = 0.0;
  std::vector<Vec3> d_pos(J, Vec3::Zero());
  for (int j = 0; j < J; ++j) {
    const Vec3 diff = pred[j] - gt[j];
    loss += diff.squaredNorm();
    d_pos[j] = 2.0 / J * diff;
  }
  loss /= J;
  if (grad) {
    grad->setZero();
    tpose_backward(tree, beta_hat, d_pos, *grad);
  }
  return loss;
}

AuxLossResult loss_aux(const KinematicTree& tree, const nn::Mat& x_hat,
                       const ShapeParams& beta_hat,
                       const std::vector<Mat3>& cano_rotations,
                       const std::vector<Vec3>& head_positions,
                       const std::vector<std::vector<Vec3>>& gt_joints,
                       const Eigen::MatrixXi& contacts, double alpha_bar,
                       const LossWeights& weights) {
  const int T = static_cast<int>(x_hat.rows());
  const int J = tree.num_joints();
  AuxLossResult res;
  res.dx = nn::Mat::Zero(T, kPoseDim);
  if (T == 0) return res;

  std::vector<FrameFk> caches;
  caches.reserve(T);
  for (int t = 0; t < T; ++t) {
    caches.push_back(frame_fk_forward(tree, x_hat.row(t).transpose(), beta_hat,
                                      cano_rotations[t], head_positions[t]));
  }

  // Gradient of the weighted total w.r.t. world joint positions, then one
  // FK backward pass per frame.
  std::vector<std::vector<Vec3>> d_world(T, std::vector<Vec3>(J, Vec3::Zero()));
  const double w_pos = alpha_bar * weights.pos;
  const double pos_norm = 1.0 / (double(T) * J);
  for (int t = 0; t < T; ++t) {
    for (int j = 0; j < J; ++j) {
      const Vec3 diff = caches[t].world_pos[j] - gt_joints[t][j];
      res.pos += pos_norm * diff.squaredNorm();
      d_world[t][j] += w_pos * 2.0 * pos_norm * diff;
    }
  }
  if (T > 1) {
    const double skat_norm = 1.0 / (double(T - 1) * 2.0);
    const double w_skat = alpha_bar * weights.skat;
    for (int t = 0; t + 1 < T; ++t) {
      for (int f = 0; f < 2; ++f) {
        if (contacts(t, f) == 0) continue;
        const int j = kFootJoints[f];
        const Vec3 diff = caches[t + 1].world_pos[j] - caches[t].world_pos[j];
        res.skat += skat_norm * diff.squaredNorm();
        const Vec3 g = w_skat * 2.0 * skat_norm * diff;
        d_world[t + 1][j] += g;
        d_world[t][j] -= g;
      }
    }
  }
  res.value = alpha_bar * (weights.pos * res.pos + weights.skat * res.skat);

  for (int t = 0; t < T; ++t) {
    Eigen::VectorXd dxt = Eigen::VectorXd::Zero(kPoseDim);
    frame_fk_backward(tree, caches[t], x_hat.row(t).transpose(), beta_hat,
                      cano_rotations[t], d_world[t], dxt, res.dbeta);
    res.dx.row(t) = dxt.transpose();
  }
  return res;
}

namespace {

nn::Mat normal_matrix(int rows, int cols, Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  nn::Mat m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = dist(rng);
  return m;
}

}  // namespace

LossReport Trainer::step(const std::vector<const TrainItem*>& batch, Rng& rng) {
  if (batch.empty()) throw Error("empty training batch");
  const double inv_b = 1.0 / double(batch.size());
  model_.params().zero_grads();
  LossReport report;

  std::uniform_int_distribution<int> step_dist(1, schedule_.steps);
  for (const TrainItem* item : batch) {
    const int T = static_cast<int>(item->x0.rows());
    const int n = step_dist(rng);
    const nn::Mat noise = normal_matrix(T, kPoseDim, rng);
    const nn::Mat xn = forward_noise(item->x0, n, noise, schedule_);
    const double abar = schedule_.at(n);

    nn::Tape tape;
    EncoderOutputs enc = model_.encode(tape, item->raw, item->vis);
    // The decoder and the auxiliary losses see a detached shape estimate;
    // shape learning is driven by the T-pose loss alone.
    const nn::Mat shape_row = tape.val(enc.shape);
    ShapeParams beta_hat;
    beta_hat.beta = shape_row.row(0).transpose();
    nn::Var shape_det = tape.constant(shape_row);

    nn::Var x_hat =
        model_.denoise(tape, tape.constant(xn), n, shape_det, enc.summaries);
    nn::Var l_simple = tape.mse(x_hat, item->x0);

    const ShapeParams gt_shape = item->gt_shape;
    const KinematicTree& tree = tree_;
    nn::Var l_shape = tape.external(
        {enc.shape},
        [&tree, gt_shape](const std::vector<const nn::Mat*>& in) {
          ShapeParams bh;
          bh.beta = in[0]->row(0).transpose();
          Vec16 g;
          nn::Tape::External out;
          out.value = loss_shape(tree, gt_shape, bh, &g);
          out.input_grads.push_back(g.transpose());
          return out;
        });

    double pos_val = 0.0, skat_val = 0.0;
    nn::Var l_aux = tape.external(
        {x_hat}, [&, this](const std::vector<const nn::Mat*>& in) {
          AuxLossResult aux = loss_aux(tree_, *in[0], beta_hat,
                                       item->cano_rotations,
                                       item->head_positions, item->gt_joints,
                                       item->contacts, abar, weights_);
          pos_val = aux.pos;
          skat_val = aux.skat;
          nn::Tape::External out;
          out.value = aux.value;
          out.input_grads.push_back(aux.dx);
          return out;
        });

    nn::Var total = tape.scale(
        tape.add(tape.add(l_simple, tape.scale(l_shape, weights_.shape)),
                 l_aux),
        inv_b);
    const double total_val = tape.val(total)(0, 0);
    if (!std::isfinite(total_val))
      throw NonFiniteLoss("non-finite loss on sequence '" + item->id + "'");

    tape.backward(total);
    tape.flush_param_grads();

    report.total += total_val;
    report.simple += inv_b * tape.val(l_simple)(0, 0);
    report.shape += inv_b * tape.val(l_shape)(0, 0);
    report.pos += inv_b * pos_val;
    report.skat += inv_b * skat_val;
  }

  // Decoupled weight decay; bias-corrected first/second moments; EMA of the
  // raw weights.
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  const double t = double(steps_ + 1);
  const double c1 = 1.0 - std::pow(b1, t);
  const double c2 = 1.0 - std::pow(b2, t);
  for (nn::Param* p : model_.params().all()) {
    p->adam_m = b1 * p->adam_m + (1.0 - b1) * p->grad;
    p->adam_v =
        (b2 * p->adam_v.array() + (1.0 - b2) * p->grad.array().square())
            .matrix();
    const nn::Mat update =
        ((p->adam_m.array() / c1) /
         ((p->adam_v.array() / c2).sqrt() + eps))
            .matrix();
    p->value -= config_.lr * (update + config_.weight_decay * p->value);
    p->ema = config_.ema_rate * p->ema + (1.0 - config_.ema_rate) * p->value;
  }
  ++steps_;
  return report;
}

MotionSequence ddim_sample(
    Model& model, const NoiseSchedule& schedule, const LossWeights& weights,
    const KinematicTree& tree, const std::vector<RigidTransform>& head_poses,
    const std::array<std::vector<HandObservation>, 2>& hands,
    const SampleOptions& options) {
  if (head_poses.size() < 2)
    throw Error("sampling needs at least two head poses");
  const int T = static_cast<int>(head_poses.size()) - 1;

  const std::vector<RawFrameFeatures> raw = build_raw_features(head_poses, hands);
  const nn::Mat raw_mat = Model::raw_matrix(raw);
  const nn::Mat vis_mat = Model::vis_matrix(raw);

  const std::vector<CanonicalFrame> all_frames = canonical_frames(head_poses);
  std::vector<CanonicalFrame> frames(all_frames.begin() + 1, all_frames.end());
  std::vector<Mat3> cano_r(T);
  std::vector<Vec3> head_pos(T);
  std::vector<RigidTransform> head_sub(head_poses.begin() + 1,
                                       head_poses.end());
  for (int t = 0; t < T; ++t) {
    cano_r[t] = frames[t].transform.R;
    head_pos[t] = head_poses[t + 1].t;
  }

  WristTargets targets;
  for (int h = 0; h < 2; ++h) {
    targets.position[h].resize(T);
    targets.visible[h].resize(T);
    for (int t = 0; t < T; ++t) {
      const HandObservation& obs = hands[h][t + 1];
      targets.position[h][t] = compose(head_poses[t + 1], obs.pose).t;
      targets.visible[h][t] = obs.visible ? 1 : 0;
    }
  }

  nn::Mat shape_row, summaries;
  {
    nn::Tape tape;
    EncoderOutputs enc =
        model.encode(tape, raw_mat, vis_mat, options.use_ema);
    shape_row = tape.val(enc.shape);
    summaries = tape.val(enc.summaries);
  }
  ShapeParams shape;
  shape.beta = shape_row.row(0).transpose();
  shape.beta = shape.clamped();

  const int K = std::max(1, std::min(options.steps, schedule.steps));
  std::vector<int> ns(K + 1);
  for (int i = 0; i <= K; ++i)
    ns[i] = static_cast<int>(
        std::lround(double(schedule.steps) * double(K - i) / K));

  Rng rng(options.seed);
  nn::Mat x = normal_matrix(T, kPoseDim, rng);
  for (int i = 0; i < K; ++i) {
    const int n = ns[i];
    const int n_next = ns[i + 1];
    const double ab = schedule.at(n);
    const double ab_next = schedule.at(n_next);

    nn::Tape tape;
    nn::Var x_hat_var =
        model.denoise(tape, tape.constant(x), n, tape.constant(shape_row),
                      tape.constant(summaries), options.use_ema);
    nn::Mat x_hat = tape.val(x_hat_var);

    if (options.guidance) {
      x_hat = guidance_refine(tree, x_hat, shape, cano_r, head_pos, targets,
                              ab, weights.guidance_scale,
                              options.guidance_iterations);
    }

    const nn::Mat eps = (x - std::sqrt(ab) * x_hat) / std::sqrt(1.0 - ab);
    x = std::sqrt(ab_next) * x_hat + std::sqrt(1.0 - ab_next) * eps;
  }

  std::vector<CanonicalPose> poses(T);
  for (int t = 0; t < T; ++t) poses[t] = decode_pose(x.row(t).transpose());
  return global_alignment(frames, poses, head_sub, shape, tree);
}

}  // namespace hamos
