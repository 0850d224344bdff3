#pragma once

#include <cstdint>

#include "hamos/conditioning.hpp"
#include "hamos/fk_grad.hpp"
#include "hamos/nn.hpp"

namespace hamos {

struct ModelConfig {
  int model_dim = 256;
  int heads = 4;
  int trunk_layers = 4;   // shared by the shape and global pooling heads
  int local_layers = 4;
  int dec_layers = 6;
  int window = 63;        // attention horizon, frames each side
  int mlp_mult = 4;

  bool operator==(const ModelConfig&) const = default;
};

struct EncoderOutputs {
  nn::Var shape;      // 1 x 16
  nn::Var global_ctx; // 1 x D
  nn::Var summaries;  // T x D
};

// Encoder-decoder transformer: Gamma feature embedding, a shared windowed
// trunk with learned-query pooling heads for shape/global context, an
// AdaLN-Zero local encoder, and a DiT-style denoising decoder with windowed
// self- and cross-attention plus rotary positions.
class Model {
 public:
  Model(const ModelConfig& cfg, std::uint64_t init_seed);

  const ModelConfig& config() const { return config_; }
  nn::ParamStore& params() { return params_; }
  const nn::ParamStore& params() const { return params_; }

  // raw: T x kRawFeatureDim encoded features (hand slots as observed);
  // vis: T x 2 visibility flags (1 = visible). Builds Omega internally and
  // substitutes null embeddings for invisible hand slots.
  EncoderOutputs encode(nn::Tape& tape, const nn::Mat& raw, const nn::Mat& vis,
                        bool use_ema = false);

  // x0-parameterized denoiser: predicts the clean pose sequence.
  // x_noisy: T x kPoseDim, shape_cond: 1 x 16 (detach upstream if desired).
  nn::Var denoise(nn::Tape& tape, nn::Var x_noisy, int step, nn::Var shape_cond,
                  nn::Var summaries, bool use_ema = false);

  // Snapshot of the Gamma weights for the standalone embed_features path.
  GammaWeights gamma_weights(bool use_ema = false) const;

  // Visibility-masked raw feature matrix helper (null slots handled in-graph).
  static nn::Mat raw_matrix(const std::vector<RawFrameFeatures>& raw);
  static nn::Mat vis_matrix(const std::vector<RawFrameFeatures>& raw);

 private:
  nn::Var embed_omega(nn::Tape& tape, const nn::Mat& raw, const nn::Mat& vis,
                      bool ema);
  nn::Var attn_block(nn::Tape& tape, nn::Var x, const std::string& prefix,
                     bool ema);
  nn::Var pool_head(nn::Tape& tape, nn::Var tokens, const std::string& prefix,
                    bool ema);

  ModelConfig config_;
  nn::ParamStore params_;
};

}  // namespace hamos
