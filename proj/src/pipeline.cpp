#include "hamos/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <map>

#include "json.hpp"

namespace hamos {

using json = nlohmann::json;

TrainItem make_train_item(const KinematicTree& tree,
                          const MotionRecord& record) {
  if (!record.has_observations())
    throw Error("record '" + record.id + "' has no observation tracks");
  const int T = record.frames();
  TrainItem item;
  item.id = record.id;

  const std::vector<RawFrameFeatures> raw =
      build_raw_features(record.head, record.hands);
  item.raw = Model::raw_matrix(raw);
  item.vis = Model::vis_matrix(raw);

  const std::vector<CanonicalFrame> frames = canonical_frames(record.head);
  item.x0.resize(T, kPoseDim);
  item.cano_rotations.resize(T);
  item.head_positions.resize(T);
  item.gt_joints.resize(T);
  for (int t = 1; t <= T; ++t) {
    const CanonicalPose pose =
        canonicalize(frames[t], record.motion.root_orientation[t - 1],
                     record.motion.joint_angles[t - 1]);
    item.x0.row(t - 1) = encode_pose(pose).transpose();
    item.cano_rotations[t - 1] = frames[t].transform.R;
    item.head_positions[t - 1] = record.head[t].t;
    item.gt_joints[t - 1] = forward_kinematics(
        tree, record.motion.root_translation[t - 1],
        record.motion.root_orientation[t - 1],
        record.motion.joint_angles[t - 1], record.motion.shape);
  }
  item.contacts = record.contacts;
  item.gt_shape = record.motion.shape;
  return item;
}

namespace {

MotionRecord slice_record(const MotionRecord& record, int first, int count) {
  // Body frames [first, first+count) of the zero-based motion arrays; the
  // observation tracks keep one extra leading frame as the delta reference.
  MotionRecord out;
  out.id = record.id + "#" + std::to_string(first);
  out.fps = record.fps;
  out.motion.shape = record.motion.shape;
  for (int t = first; t < first + count; ++t) {
    out.motion.root_translation.push_back(record.motion.root_translation[t]);
    out.motion.root_orientation.push_back(record.motion.root_orientation[t]);
    out.motion.joint_angles.push_back(record.motion.joint_angles[t]);
  }
  out.contacts = record.contacts.block(first, 0, count, 2);
  out.head.assign(record.head.begin() + first,
                  record.head.begin() + first + count + 1);
  for (int h = 0; h < 2; ++h)
    out.hands[h].assign(record.hands[h].begin() + first,
                        record.hands[h].begin() + first + count + 1);
  return out;
}

std::uint64_t sequence_seed(std::uint64_t base, std::uint64_t index) {
  std::uint64_t x = base ^ (0x9e3779b97f4a7c15ULL * (index + 1));
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  return x;
}

}  // namespace

std::vector<TrainItem> make_train_items(const KinematicTree& tree,
                                        const std::vector<MotionRecord>& records,
                                        int max_seq_len) {
  std::vector<TrainItem> items;
  for (const MotionRecord& rec : records) {
    const int T = rec.frames();
    if (T <= max_seq_len) {
      items.push_back(make_train_item(tree, rec));
      continue;
    }
    const int stride = std::max(1, max_seq_len / 2);
    for (int start = 0; start < T; start += stride) {
      const int count = std::min(max_seq_len, T - start);
      items.push_back(make_train_item(tree, slice_record(rec, start, count)));
      if (start + count >= T) break;
    }
  }
  return items;
}

MotionRecord augment_record(const MotionRecord& record,
                            const AugmentConfig& config, std::uint64_t seed) {
  if (!record.has_observations())
    throw Error("record '" + record.id + "' has no hand tracks to augment");
  Rng rng(seed);
  FovSpec fov;
  if (config.fov_preset == "pinhole90") fov = pinhole_fov(90.0);
  else if (config.fov_preset == "pinhole180") fov = pinhole_fov(180.0);
  else fov = sample_fov(rng);
  std::uniform_real_distribution<double> rho_short(0.0, config.rho_short_max);
  std::uniform_real_distribution<double> rho_long(0.0, config.rho_long_max);
  const DropSpec short_spec = DropSpec::short_mode(rho_short(rng));
  const DropSpec long_spec = DropSpec::long_mode(rho_long(rng));

  std::array<std::vector<RigidTransform>, 2> hand_in_head;
  for (int h = 0; h < 2; ++h)
    for (const HandObservation& o : record.hands[h])
      hand_in_head[h].push_back(o.pose);

  MotionRecord out = record;
  out.hands = apply_augmentation(hand_in_head, fov, short_spec, long_spec, rng);
  return out;
}

std::vector<MotionRecord> augment_records(const std::vector<MotionRecord>& records,
                                          const AugmentConfig& config,
                                          std::uint64_t base_seed) {
  std::vector<MotionRecord> out;
  out.reserve(records.size());
  for (size_t i = 0; i < records.size(); ++i)
    out.push_back(
        augment_record(records[i], config, sequence_seed(base_seed, i)));
  return out;
}

TrainOutput run_training(const RunConfig& config,
                         const std::vector<MotionRecord>& records,
                         const ProgressFn& progress, LoadedCheckpoint* resume) {
  const KinematicTree& tree = KinematicTree::default_tree();
  const std::vector<TrainItem> items =
      make_train_items(tree, records, config.max_seq_len);
  if (items.empty()) throw Error("no training sequences");

  TrainOutput out;
  Rng rng;
  if (resume && resume->model) {
    out.model = std::move(resume->model);
    rng = rng_from_string(resume->rng_state);
  } else {
    out.model = std::make_unique<Model>(config.model, config.seed);
    rng = Rng(config.seed);
  }
  Trainer trainer(*out.model, tree, NoiseSchedule::cosine(config.schedule_steps),
                  config.loss, config.train);
  if (resume) trainer.set_steps_taken(resume->steps);

  std::uniform_int_distribution<size_t> pick(0, items.size() - 1);
  while (trainer.steps_taken() < config.train_steps) {
    std::vector<const TrainItem*> batch;
    for (int b = 0; b < config.batch_size; ++b) batch.push_back(&items[pick(rng)]);
    const LossReport report = trainer.step(batch, rng);
    if (progress) progress({trainer.steps_taken(), report});
  }
  out.steps = trainer.steps_taken();
  out.rng_state = rng_to_string(rng);
  return out;
}

MotionRecord sample_record(Model& model, const RunConfig& config,
                           const MotionRecord& obs,
                           const SampleOptions& options) {
  if (!obs.has_observations())
    throw Error("record '" + obs.id + "' has no observation tracks");
  const KinematicTree& tree = KinematicTree::default_tree();
  NoiseSchedule schedule = NoiseSchedule::cosine(config.schedule_steps);

  MotionRecord out;
  out.id = obs.id;
  out.fps = obs.fps;
  out.motion = ddim_sample(model, schedule, config.loss, tree, obs.head,
                           obs.hands, options);
  const int T = out.motion.frames();
  const std::vector<std::vector<Vec3>> joints =
      joint_positions(tree, out.motion);
  out.contacts.resize(T, 2);
  for (int t = 0; t < T; ++t) {
    for (int f = 0; f < 2; ++f) {
      const int j = kFootJoints[f];
      const int prev = std::max(0, t - 1);
      const int next = (t == 0) ? 1 : t;
      const double speed = (joints[next][j] - joints[prev][j]).norm() * obs.fps;
      out.contacts(t, f) =
          (joints[t][j].z() < kContactHeight && speed < kContactSpeed) ? 1 : 0;
    }
  }
  out.head = obs.head;
  out.hands = obs.hands;
  return out;
}

std::vector<MotionRecord> sample_records(Model& model, const RunConfig& config,
                                         const std::vector<MotionRecord>& obs,
                                         const SampleOptions& options) {
  std::vector<MotionRecord> out;
  out.reserve(obs.size());
  for (size_t i = 0; i < obs.size(); ++i) {
    SampleOptions per = options;
    per.seed = sequence_seed(options.seed, i);
    out.push_back(sample_record(model, config, obs[i], per));
  }
  return out;
}

EvalOutput evaluate_records(const KinematicTree& tree,
                            const std::vector<MotionRecord>& pred,
                            const std::vector<MotionRecord>& gt,
                            const std::vector<MotionRecord>& obs) {
  std::map<std::string, const MotionRecord*> gt_by_id, obs_by_id;
  for (const MotionRecord& r : gt) gt_by_id[r.id] = &r;
  for (const MotionRecord& r : obs) obs_by_id[r.id] = &r;

  EvalOutput out;
  double vis_sum = 0.0;
  for (const MotionRecord& p : pred) {
    const auto git = gt_by_id.find(p.id);
    const auto oit = obs_by_id.find(p.id);
    if (git == gt_by_id.end() || oit == obs_by_id.end())
      throw Error("no ground truth/observations for sequence '" + p.id + "'");
    const MotionRecord& g = *git->second;
    const MotionRecord& o = *oit->second;
    const int T = p.frames();

    std::array<std::vector<char>, 2> visibility;
    for (int h = 0; h < 2; ++h) {
      visibility[h].resize(T, 1);
      if (o.has_observations())
        for (int t = 1; t <= T; ++t)
          visibility[h][t - 1] = o.hands[h][t].visible ? 1 : 0;
    }

    const auto start = std::chrono::steady_clock::now();
    MetricReport r;
    r.mpjpe = mpjpe(tree, p.motion, g.motion);
    r.mpjve = mpjve(tree, p.motion, g.motion, p.fps);
    r.jerk = jerk(tree, p.motion, p.fps);
    r.hand_pe = hand_pe(tree, p.motion, g.motion, visibility, false).value();
    r.vis_hand_pe = hand_pe(tree, p.motion, g.motion, visibility, true);
    const ShapeMetrics sm =
        shape_metrics(tree, {p.motion.shape}, g.motion.shape);
    r.height_err = sm.height_err;
    r.span_err = sm.span_err;
    r.height_std = sm.height_std;
    r.span_std = sm.span_std;
    r.runtime = std::chrono::duration<double>(
                    std::chrono::steady_clock::now() - start)
                    .count();

    out.aggregate.mpjpe += r.mpjpe;
    out.aggregate.mpjve += r.mpjve;
    out.aggregate.jerk += r.jerk;
    out.aggregate.hand_pe += r.hand_pe;
    if (r.vis_hand_pe) {
      vis_sum += *r.vis_hand_pe;
      ++out.visible_sequences;
    }
    out.aggregate.height_err += r.height_err;
    out.aggregate.span_err += r.span_err;
    out.aggregate.height_std += r.height_std;
    out.aggregate.span_std += r.span_std;
    out.aggregate.runtime += r.runtime;
    out.per_sequence.emplace_back(p.id, r);
  }
  const double n = std::max<size_t>(1, out.per_sequence.size());
  out.aggregate.mpjpe /= n;
  out.aggregate.mpjve /= n;
  out.aggregate.jerk /= n;
  out.aggregate.hand_pe /= n;
  out.aggregate.height_err /= n;
  out.aggregate.span_err /= n;
  out.aggregate.height_std /= n;
  out.aggregate.span_std /= n;
  if (out.visible_sequences > 0)
    out.aggregate.vis_hand_pe = vis_sum / out.visible_sequences;
  return out;
}

namespace {

json report_to_json(const MetricReport& r) {
  json j;
  j["mpjpe_mm"] = r.mpjpe;
  j["mpjve_cms"] = r.mpjve;
  j["jerk_kms3"] = r.jerk;
  j["hand_pe_mm"] = r.hand_pe;
  if (r.vis_hand_pe) j["vis_hand_pe_mm"] = *r.vis_hand_pe;
  else j["vis_hand_pe_mm"] = nullptr;
  j["height_err_cm"] = r.height_err;
  j["span_err_cm"] = r.span_err;
  j["height_std_cm"] = r.height_std;
  j["span_std_cm"] = r.span_std;
  j["runtime_s"] = r.runtime;
  return j;
}

}  // namespace

std::string eval_report_json(const EvalOutput& out) {
  json j;
  j["aggregate"] = report_to_json(out.aggregate);
  json per = json::array();
  for (const auto& [id, report] : out.per_sequence) {
    json e = report_to_json(report);
    e["id"] = id;
    per.push_back(e);
  }
  j["per_sequence"] = per;
  return j.dump(2);
}

EndToEndResult end_to_end(Model& model, const RunConfig& config,
                          const std::vector<MotionRecord>& gt,
                          const SampleOptions& options) {
  const KinematicTree& tree = KinematicTree::default_tree();
  EndToEndResult result;
  result.observations = augment_records(gt, config.augment, config.seed);
  result.predictions =
      sample_records(model, config, result.observations, options);
  result.eval = evaluate_records(tree, result.predictions, gt,
                                 result.observations);
  return result;
}

}  // namespace hamos
