#pragma once

#include <functional>

#include "hamos/data.hpp"
#include "hamos/metrics.hpp"
#include "hamos/synth.hpp"

namespace hamos {

// Training inputs derived from a record with observation tracks; sequences
// longer than max_seq_len are split into half-overlapping chunks.
TrainItem make_train_item(const KinematicTree& tree, const MotionRecord& record);
std::vector<TrainItem> make_train_items(const KinematicTree& tree,
                                        const std::vector<MotionRecord>& records,
                                        int max_seq_len);

// Per-sequence visibility augmentation. Each sequence gets an independent
// stream (seed = base_seed xor a sequence-index hash), a FoV per the preset,
// and fresh drop-ratio draws for both temporal modes.
MotionRecord augment_record(const MotionRecord& record,
                            const AugmentConfig& config, std::uint64_t seed);
std::vector<MotionRecord> augment_records(const std::vector<MotionRecord>& records,
                                          const AugmentConfig& config,
                                          std::uint64_t base_seed);

struct TrainProgress {
  long long step = 0;
  LossReport loss;
};
using ProgressFn = std::function<void(const TrainProgress&)>;

struct TrainOutput {
  std::unique_ptr<Model> model;
  long long steps = 0;
  std::string rng_state;
};

// Full training loop from observation-augmented records; resumes from a
// loaded checkpoint when provided.
TrainOutput run_training(const RunConfig& config,
                         const std::vector<MotionRecord>& records,
                         const ProgressFn& progress = nullptr,
                         LoadedCheckpoint* resume = nullptr);

// Reconstruct one observed sequence; the prediction keeps the observation
// tracks so it can be evaluated downstream, and re-derives contacts from its
// own FK.
MotionRecord sample_record(Model& model, const RunConfig& config,
                           const MotionRecord& obs,
                           const SampleOptions& options);
std::vector<MotionRecord> sample_records(Model& model, const RunConfig& config,
                                         const std::vector<MotionRecord>& obs,
                                         const SampleOptions& options);

struct EvalOutput {
  std::vector<std::pair<std::string, MetricReport>> per_sequence;
  MetricReport aggregate;
  int visible_sequences = 0;  // sequences contributing to vis_hand_pe
};

// Paired evaluation by record id; obs provides the per-frame visibility.
EvalOutput evaluate_records(const KinematicTree& tree,
                            const std::vector<MotionRecord>& pred,
                            const std::vector<MotionRecord>& gt,
                            const std::vector<MotionRecord>& obs);
std::string eval_report_json(const EvalOutput& out);

// gt motions -> augment -> sample -> eval, deterministic given seeds.
struct EndToEndResult {
  std::vector<MotionRecord> observations;
  std::vector<MotionRecord> predictions;
  EvalOutput eval;
};
EndToEndResult end_to_end(Model& model, const RunConfig& config,
                          const std::vector<MotionRecord>& gt,
                          const SampleOptions& options);

}  // namespace hamos
