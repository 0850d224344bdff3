#include "hamos/network.hpp"

#include <cmath>

namespace hamos {

using nn::Mat;
using nn::Var;

namespace {

Mat sinusoidal_embedding(double n, int dim) {
  Mat emb(1, dim);
  int half = dim / 2;
  for (int i = 0; i < half; ++i) {
    double omega = std::pow(10000.0, -static_cast<double>(i) / half);
    emb(0, i) = std::sin(n * omega);
    emb(0, half + i) = std::cos(n * omega);
  }
  return emb;
}

}  // namespace

Model::Model(const ModelConfig& cfg, std::uint64_t init_seed) : config_(cfg) {
  std::mt19937_64 rng(init_seed);
  int D = cfg.model_dim;
  int F = cfg.mlp_mult * D;
  auto xavier = [&rng](int in, int out) {
    return nn::uniform_init(std::sqrt(6.0 / (in + out)), rng);
  };
  auto mk = [&](const std::string& name, int rows, int cols, bool zero = false) {
    params_.create(name, rows, cols,
                   zero ? nn::zeros_init() : xavier(rows, cols));
  };

  // Gamma conditioning MLP + null hand embeddings.
  mk("gamma.w1", kRawFeatureDim, D);
  mk("gamma.b1", 1, D, true);
  mk("gamma.w2", D, D);
  mk("gamma.b2", 1, D, true);
  mk("gamma.null0", 1, kHandFeatureDim);
  mk("gamma.null1", 1, kHandFeatureDim);

  auto mk_attn = [&](const std::string& p) {
    mk(p + ".wq", D, D);
    mk(p + ".wk", D, D);
    mk(p + ".wv", D, D);
    mk(p + ".wo", D, D);
    mk(p + ".bo", 1, D, true);
    mk(p + ".wf1", D, F);
    mk(p + ".bf1", 1, F, true);
    mk(p + ".wf2", F, D);
    mk(p + ".bf2", 1, D, true);
  };

  for (int l = 0; l < cfg.trunk_layers; ++l) {
    std::string p = "trunk." + std::to_string(l);
    mk_attn(p);
    mk(p + ".ln1g", 1, D, true);  // stored as offsets from 1
    mk(p + ".ln1b", 1, D, true);
    mk(p + ".ln2g", 1, D, true);
    mk(p + ".ln2b", 1, D, true);
  }
  for (const std::string& head : {std::string("pool.shape"), std::string("pool.global")}) {
    mk(head + ".q", 1, D);
    mk(head + ".wk", D, D);
    mk(head + ".wv", D, D);
  }
  mk("pool.shape.head_w", D, kShapeDim);
  mk("pool.shape.head_b", 1, kShapeDim, true);
  mk("pool.global.head_w", D, D);
  mk("pool.global.head_b", 1, D, true);

  for (int l = 0; l < cfg.local_layers; ++l) {
    std::string p = "local." + std::to_string(l);
    mk_attn(p);
    mk(p + ".mod_w", D, 6 * D, true);  // AdaLN-Zero
    mk(p + ".mod_b", 1, 6 * D, true);
  }

  mk("dec.temb.w1", D, D);
  mk("dec.temb.b1", 1, D, true);
  mk("dec.temb.w2", D, D);
  mk("dec.temb.b2", 1, D, true);
  mk("dec.bemb.w", kShapeDim, D);
  mk("dec.bemb.b", 1, D, true);
  mk("dec.in_w", kPoseDim, D);
  mk("dec.in_b", 1, D, true);
  for (int l = 0; l < cfg.dec_layers; ++l) {
    std::string p = "dec." + std::to_string(l);
    mk_attn(p);
    mk(p + ".cwq", D, D);
    mk(p + ".cwk", D, D);
    mk(p + ".cwv", D, D);
    mk(p + ".cwo", D, D);
    mk(p + ".cbo", 1, D, true);
    mk(p + ".mod_w", D, 9 * D, true);
    mk(p + ".mod_b", 1, 9 * D, true);
  }
  mk("dec.final.mod_w", D, 2 * D, true);
  mk("dec.final.mod_b", 1, 2 * D, true);
  mk("dec.out_w", D, kPoseDim, true);
  mk("dec.out_b", 1, kPoseDim, true);
}

Mat Model::raw_matrix(const std::vector<RawFrameFeatures>& raw) {
  int T = static_cast<int>(raw.size());
  Mat x(T, kRawFeatureDim);
  for (int t = 0; t < T; ++t) x.row(t) = encode_raw_frame(raw[t]).transpose();
  return x;
}

Mat Model::vis_matrix(const std::vector<RawFrameFeatures>& raw) {
  int T = static_cast<int>(raw.size());
  Mat v(T, 2);
  for (int t = 0; t < T; ++t) {
    v(t, 0) = raw[t].hands[0].visible ? 1.0 : 0.0;
    v(t, 1) = raw[t].hands[1].visible ? 1.0 : 0.0;
  }
  return v;
}

Var Model::embed_omega(nn::Tape& tape, const Mat& raw, const Mat& vis,
                       bool ema) {
  int T = static_cast<int>(raw.rows());
  // Zero the invisible hand slots in the constant and add the broadcast null
  // embedding there instead, so nulls receive gradient.
  Mat masked = raw;
  Mat inv_mask = Mat::Zero(T, kRawFeatureDim);
  for (int t = 0; t < T; ++t) {
    for (int hand = 0; hand < 2; ++hand) {
      if (vis(t, hand) == 0.0) {
        masked.row(t)
            .segment(kHandFeatureOffset[hand], kHandFeatureDim)
            .setZero();
        inv_mask.row(t)
            .segment(kHandFeatureOffset[hand], kHandFeatureDim)
            .setOnes();
      }
    }
  }
  Var null0 = tape.param(params_.get("gamma.null0"), ema);
  Var null1 = tape.param(params_.get("gamma.null1"), ema);
  Var null_row = tape.add(
      tape.pad_cols(null0, kRawFeatureDim, kHandFeatureOffset[0]),
      tape.pad_cols(null1, kRawFeatureDim, kHandFeatureOffset[1]));
  Var filled = tape.add_const(
      tape.mul_const(tape.repeat_rows(null_row, T), inv_mask), masked);
  Var h = tape.row_broadcast_add(
      tape.matmul(filled, tape.param(params_.get("gamma.w1"), ema)),
      tape.param(params_.get("gamma.b1"), ema));
  h = tape.silu(h);
  return tape.row_broadcast_add(
      tape.matmul(h, tape.param(params_.get("gamma.w2"), ema)),
      tape.param(params_.get("gamma.b2"), ema));
}

// Pre-LN windowed block with learned LN affine (gains stored as 1 + g).
Var Model::attn_block(nn::Tape& tape, Var x, const std::string& prefix,
                      bool ema) {
  auto P = [&](const std::string& s) -> nn::Param& {
    return params_.get(prefix + "." + s);
  };
  int D = config_.model_dim;
  Mat ones = Mat::Ones(1, D);
  Var h = tape.layer_norm(x);
  h = tape.row_broadcast_mul(h, tape.add_const(tape.param(P("ln1g"), ema), ones));
  h = tape.row_broadcast_add(h, tape.param(P("ln1b"), ema));
  Var a = tape.attention(tape.matmul(h, tape.param(P("wq"), ema)),
                         tape.matmul(h, tape.param(P("wk"), ema)),
                         tape.matmul(h, tape.param(P("wv"), ema)),
                         config_.heads, config_.window, true);
  a = tape.row_broadcast_add(tape.matmul(a, tape.param(P("wo"), ema)),
                             tape.param(P("bo"), ema));
  x = tape.add(x, a);
  Var h2 = tape.layer_norm(x);
  h2 = tape.row_broadcast_mul(h2,
                              tape.add_const(tape.param(P("ln2g"), ema), ones));
  h2 = tape.row_broadcast_add(h2, tape.param(P("ln2b"), ema));
  Var m = tape.silu(tape.row_broadcast_add(
      tape.matmul(h2, tape.param(P("wf1"), ema)), tape.param(P("bf1"), ema)));
  m = tape.row_broadcast_add(tape.matmul(m, tape.param(P("wf2"), ema)),
                             tape.param(P("bf2"), ema));
  return tape.add(x, m);
}

Var Model::pool_head(nn::Tape& tape, Var tokens, const std::string& prefix,
                     bool ema) {
  auto P = [&](const std::string& s) -> nn::Param& {
    return params_.get(prefix + "." + s);
  };
  Var q = tape.param(P("q"), ema);
  Var k = tape.matmul(tokens, tape.param(P("wk"), ema));
  Var v = tape.matmul(tokens, tape.param(P("wv"), ema));
  Var pooled = tape.attention(q, k, v, config_.heads, -1, false);
  return tape.row_broadcast_add(tape.matmul(pooled, tape.param(P("head_w"), ema)),
                                tape.param(P("head_b"), ema));
}

EncoderOutputs Model::encode(nn::Tape& tape, const Mat& raw, const Mat& vis,
                             bool use_ema) {
  int T = static_cast<int>(raw.rows());
  int D = config_.model_dim;
  Var omega = embed_omega(tape, raw, vis, use_ema);

  Var trunk = omega;
  for (int l = 0; l < config_.trunk_layers; ++l) {
    trunk = attn_block(tape, trunk, "trunk." + std::to_string(l), use_ema);
  }
  EncoderOutputs out;
  out.shape = pool_head(tape, trunk, "pool.shape", use_ema);
  out.global_ctx = pool_head(tape, trunk, "pool.global", use_ema);

  // E_local: AdaLN-Zero blocks modulated by the global context; residual
  // branches are gated off at initialization.
  Var x = omega;
  Var mod_src = tape.silu(out.global_ctx);
  for (int l = 0; l < config_.local_layers; ++l) {
    std::string p = "local." + std::to_string(l);
    auto P = [&](const std::string& s) -> nn::Param& {
      return params_.get(p + "." + s);
    };
    Var mod = tape.row_broadcast_add(
        tape.matmul(mod_src, tape.param(P("mod_w"), use_ema)),
        tape.param(P("mod_b"), use_ema));
    Var sh1 = tape.cols(mod, 0, D), sc1 = tape.cols(mod, D, D),
        g1 = tape.cols(mod, 2 * D, D), sh2 = tape.cols(mod, 3 * D, D),
        sc2 = tape.cols(mod, 4 * D, D), g2 = tape.cols(mod, 5 * D, D);
    Mat ones = Mat::Ones(1, D);
    Var h = tape.layer_norm(x);
    h = tape.row_broadcast_mul(h, tape.add_const(sc1, ones));
    h = tape.row_broadcast_add(h, sh1);
    Var a = tape.attention(tape.matmul(h, tape.param(P("wq"), use_ema)),
                           tape.matmul(h, tape.param(P("wk"), use_ema)),
                           tape.matmul(h, tape.param(P("wv"), use_ema)),
                           config_.heads, config_.window, true);
    a = tape.row_broadcast_add(tape.matmul(a, tape.param(P("wo"), use_ema)),
                               tape.param(P("bo"), use_ema));
    x = tape.add(x, tape.row_broadcast_mul(a, g1));
    Var h2 = tape.layer_norm(x);
    h2 = tape.row_broadcast_mul(h2, tape.add_const(sc2, ones));
    h2 = tape.row_broadcast_add(h2, sh2);
    Var m = tape.silu(tape.row_broadcast_add(
        tape.matmul(h2, tape.param(P("wf1"), use_ema)),
        tape.param(P("bf1"), use_ema)));
    m = tape.row_broadcast_add(tape.matmul(m, tape.param(P("wf2"), use_ema)),
                               tape.param(P("bf2"), use_ema));
    x = tape.add(x, tape.row_broadcast_mul(m, g2));
  }
  out.summaries = x;
  (void)T;
  return out;
}

Var Model::denoise(nn::Tape& tape, Var x_noisy, int step, Var shape_cond,
                   Var summaries, bool use_ema) {
  int D = config_.model_dim;
  Mat ones = Mat::Ones(1, D);
  auto G = [&](const std::string& s) -> nn::Param& { return params_.get(s); };

  Var temb = tape.constant(sinusoidal_embedding(step, D));
  temb = tape.row_broadcast_add(
      tape.matmul(temb, tape.param(G("dec.temb.w1"), use_ema)),
      tape.param(G("dec.temb.b1"), use_ema));
  temb = tape.silu(temb);
  temb = tape.row_broadcast_add(
      tape.matmul(temb, tape.param(G("dec.temb.w2"), use_ema)),
      tape.param(G("dec.temb.b2"), use_ema));
  Var bemb = tape.row_broadcast_add(
      tape.matmul(shape_cond, tape.param(G("dec.bemb.w"), use_ema)),
      tape.param(G("dec.bemb.b"), use_ema));
  Var cond = tape.silu(tape.add(temb, bemb));

  Var x = tape.row_broadcast_add(
      tape.matmul(x_noisy, tape.param(G("dec.in_w"), use_ema)),
      tape.param(G("dec.in_b"), use_ema));

  for (int l = 0; l < config_.dec_layers; ++l) {
    std::string p = "dec." + std::to_string(l);
    auto P = [&](const std::string& s) -> nn::Param& {
      return params_.get(p + "." + s);
    };
    Var mod = tape.row_broadcast_add(
        tape.matmul(cond, tape.param(P("mod_w"), use_ema)),
        tape.param(P("mod_b"), use_ema));
    auto chunk = [&](int i) { return tape.cols(mod, i * D, D); };
    Var sh1 = chunk(0), sc1 = chunk(1), g1 = chunk(2);
    Var sh2 = chunk(3), sc2 = chunk(4), g2 = chunk(5);
    Var sh3 = chunk(6), sc3 = chunk(7), g3 = chunk(8);

    Var h = tape.layer_norm(x);
    h = tape.row_broadcast_mul(h, tape.add_const(sc1, ones));
    h = tape.row_broadcast_add(h, sh1);
    Var a = tape.attention(tape.matmul(h, tape.param(P("wq"), use_ema)),
                           tape.matmul(h, tape.param(P("wk"), use_ema)),
                           tape.matmul(h, tape.param(P("wv"), use_ema)),
                           config_.heads, config_.window, true);
    a = tape.row_broadcast_add(tape.matmul(a, tape.param(P("wo"), use_ema)),
                               tape.param(P("bo"), use_ema));
    x = tape.add(x, tape.row_broadcast_mul(a, g1));

    Var hc = tape.layer_norm(x);
    hc = tape.row_broadcast_mul(hc, tape.add_const(sc2, ones));
    hc = tape.row_broadcast_add(hc, sh2);
    Var ca = tape.attention(
        tape.matmul(hc, tape.param(P("cwq"), use_ema)),
        tape.matmul(summaries, tape.param(P("cwk"), use_ema)),
        tape.matmul(summaries, tape.param(P("cwv"), use_ema)), config_.heads,
        config_.window, true);
    ca = tape.row_broadcast_add(tape.matmul(ca, tape.param(P("cwo"), use_ema)),
                                tape.param(P("cbo"), use_ema));
    x = tape.add(x, tape.row_broadcast_mul(ca, g2));

    Var hm = tape.layer_norm(x);
    hm = tape.row_broadcast_mul(hm, tape.add_const(sc3, ones));
    hm = tape.row_broadcast_add(hm, sh3);
    Var m = tape.silu(tape.row_broadcast_add(
        tape.matmul(hm, tape.param(P("wf1"), use_ema)),
        tape.param(P("bf1"), use_ema)));
    m = tape.row_broadcast_add(tape.matmul(m, tape.param(P("wf2"), use_ema)),
                               tape.param(P("bf2"), use_ema));
    x = tape.add(x, tape.row_broadcast_mul(m, g3));
  }

  Var fmod = tape.row_broadcast_add(
      tape.matmul(cond, tape.param(G("dec.final.mod_w"), use_ema)),
      tape.param(G("dec.final.mod_b"), use_ema));
  Var shf = tape.cols(fmod, 0, D), scf = tape.cols(fmod, D, D);
  Var h = tape.layer_norm(x);
  h = tape.row_broadcast_mul(h, tape.add_const(scf, ones));
  h = tape.row_broadcast_add(h, shf);
  return tape.row_broadcast_add(
      tape.matmul(h, tape.param(G("dec.out_w"), use_ema)),
      tape.param(G("dec.out_b"), use_ema));
}

GammaWeights Model::gamma_weights(bool use_ema) const {
  auto pick = [&](const std::string& n) -> const Mat& {
    const nn::Param& p = params_.get(n);
    return use_ema ? p.ema : p.value;
  };
  GammaWeights w;
  w.w1 = pick("gamma.w1");
  w.b1 = pick("gamma.b1").row(0);
  w.w2 = pick("gamma.w2");
  w.b2 = pick("gamma.b2").row(0);
  w.null_hand[0] = pick("gamma.null0").row(0);
  w.null_hand[1] = pick("gamma.null1").row(0);
  return w;
}

}  // namespace hamos
