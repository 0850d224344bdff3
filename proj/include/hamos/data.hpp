#pragma once

#include <memory>
#include <string>

#include "hamos/diffusion.hpp"

namespace hamos {

// One motion sequence on disk (a single JSON line). The head/hand tracks are
// optional on ground-truth-only files; when present they cover frames 0..T
// while the body motion covers 1..T.
struct MotionRecord {
  std::string id;
  double fps = 30.0;
  MotionSequence motion;
  Eigen::MatrixXi contacts;  // T x 2 (left, right foot)
  std::vector<RigidTransform> head;                  // T+1 or empty
  std::array<std::vector<HandObservation>, 2> hands; // T+1 each or empty

  int frames() const { return motion.frames(); }
  bool has_observations() const { return !head.empty(); }
};

std::string motion_record_to_json(const MotionRecord& record);
// Throws SchemaViolation / DecodeError on malformed input.
MotionRecord motion_record_from_json(const std::string& line);

struct LoadReport {
  std::vector<MotionRecord> records;
  std::vector<std::string> errors;  // "line N: message" per rejected line
};

// Streaming JSONL reader. With strict, the first malformed line throws;
// otherwise bad lines are reported and skipped.
LoadReport load_motion_records(const std::string& path, bool strict = false);
void save_motion_records(const std::string& path,
                         const std::vector<MotionRecord>& records);

// Augmentation settings: a fixed pinhole preset or per-sequence random FoV,
// with uniform per-sequence drop-ratio draws for the two temporal modes.
struct AugmentConfig {
  std::string fov_preset = "random";  // random | pinhole90 | pinhole180
  double rho_short_max = 0.10;
  double rho_long_max = 0.20;
};

struct RunConfig {
  ModelConfig model;
  int schedule_steps = 1000;
  TrainConfig train;
  LossWeights loss;
  AugmentConfig augment;
  int batch_size = 32;
  int train_steps = 20000;
  int max_seq_len = 512;
  int sample_steps = 50;
  std::uint64_t seed = 0;

  std::string to_json() const;
  // Schema-validated; unknown keys anywhere reject with SchemaViolation.
  static RunConfig from_json(const std::string& text);
  static RunConfig load(const std::string& path);
};

// Versioned binary checkpoint: weights, EMA weights, optimizer state, config
// hash, trainer step count, and the training RNG state.
void save_checkpoint(const std::string& path, const Model& model,
                     const RunConfig& config, long long steps,
                     const std::string& rng_state);

struct LoadedCheckpoint {
  RunConfig config;
  std::unique_ptr<Model> model;
  long long steps = 0;
  std::string rng_state;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

// Serialization helpers for the mt19937_64 stream state.
std::string rng_to_string(const Rng& rng);
Rng rng_from_string(const std::string& text);

}  // namespace hamos
