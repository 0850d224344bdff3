#include <cstdlib>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "hamos/pipeline.hpp"

namespace {

// --seed beats HAMOS_SEED beats the config/default.
std::uint64_t resolve_seed(const CLI::Option* seed_opt, std::uint64_t seed_flag,
                           std::uint64_t fallback) {
  if (seed_opt->count() > 0) return seed_flag;
  if (const char* env = std::getenv("HAMOS_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw hamos::SchemaViolation("HAMOS_SEED is not an integer");
    }
  }
  return fallback;
}

std::vector<hamos::MotionRecord> load_records(const std::string& path,
                                              bool strict) {
  hamos::LoadReport report = hamos::load_motion_records(path, strict);
  for (const std::string& err : report.errors)
    std::cerr << path << ": " << err << "\n";
  return std::move(report.records);
}

int run(int argc, char** argv) {
  CLI::App app{"hamos: full-body motion reconstruction from head and "
               "intermittent hand tracking"};
  app.require_subcommand(1);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "Generate synthetic motions");
  std::string gen_out;
  hamos::SynthOptions synth;
  std::uint64_t gen_seed = 0;
  gen->add_option("--out", gen_out, "Output JSONL path")->required();
  gen->add_option("--count", synth.count, "Number of sequences");
  gen->add_option("--min-frames", synth.min_frames, "Minimum frames");
  gen->add_option("--max-frames", synth.max_frames, "Maximum frames");
  gen->add_option("--prefix", synth.id_prefix, "Sequence id prefix");
  auto* gen_seed_opt = gen->add_option("--seed", gen_seed, "RNG seed");

  // augment
  auto* aug = app.add_subcommand("augment", "Apply visibility augmentation");
  std::string aug_in, aug_out, fov_preset = "random";
  std::uint64_t aug_seed = 0;
  bool aug_strict = false;
  aug->add_option("--in", aug_in, "Input motions JSONL")->required();
  aug->add_option("--out", aug_out, "Output observations JSONL")->required();
  aug->add_option("--fov-preset", fov_preset, "pinhole90|pinhole180|random");
  aug->add_flag("--strict", aug_strict, "Fail on the first malformed line");
  auto* aug_seed_opt = aug->add_option("--seed", aug_seed, "RNG seed");

  // train
  auto* train = app.add_subcommand("train", "Train the diffusion model");
  std::string train_cfg, train_data, train_ckpt, train_resume;
  std::uint64_t train_seed = 0;
  int log_every = 50;
  train->add_option("--config", train_cfg, "RunConfig JSON path")->required();
  train->add_option("--data", train_data, "Observation JSONL path")->required();
  train->add_option("--out", train_ckpt, "Checkpoint output path")->required();
  train->add_option("--resume", train_resume, "Checkpoint to resume from");
  train->add_option("--log-every", log_every, "Progress print interval");
  auto* train_seed_opt = train->add_option("--seed", train_seed, "RNG seed");

  // sample
  auto* sample = app.add_subcommand("sample", "Reconstruct motion");
  std::string smp_ckpt, smp_obs, smp_out;
  bool no_guidance = false;
  int smp_steps = 0;
  std::uint64_t smp_seed = 0;
  sample->add_option("--ckpt", smp_ckpt, "Checkpoint path")->required();
  sample->add_option("--obs", smp_obs, "Observations JSONL")->required();
  sample->add_option("--out", smp_out, "Predictions JSONL")->required();
  sample->add_flag("--no-guidance", no_guidance, "Disable guidance refinement");
  sample->add_option("--steps", smp_steps, "DDIM step count");
  auto* smp_seed_opt = sample->add_option("--seed", smp_seed, "RNG seed");

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate predictions");
  std::string ev_pred, ev_gt, ev_obs, ev_report;
  eval->add_option("--pred", ev_pred, "Predictions JSONL")->required();
  eval->add_option("--gt", ev_gt, "Ground-truth JSONL")->required();
  eval->add_option("--obs", ev_obs, "Observations JSONL")->required();
  eval->add_option("--report", ev_report, "Report JSON output")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // flag errors are validation errors; help is 0
  }

  const hamos::KinematicTree& tree = hamos::KinematicTree::default_tree();

  if (gen->parsed()) {
    hamos::Rng rng(resolve_seed(gen_seed_opt, gen_seed, 0));
    const std::vector<hamos::MotionRecord> records =
        hamos::generate_synthetic_dataset(tree, synth, rng);
    hamos::save_motion_records(gen_out, records);
    std::cout << "wrote " << records.size() << " sequences to " << gen_out
              << "\n";
  } else if (aug->parsed()) {
    hamos::AugmentConfig cfg;
    cfg.fov_preset = fov_preset;
    if (fov_preset != "random" && fov_preset != "pinhole90" &&
        fov_preset != "pinhole180")
      throw hamos::SchemaViolation("unknown --fov-preset '" + fov_preset + "'");
    const std::uint64_t seed = resolve_seed(aug_seed_opt, aug_seed, 0);
    const auto records = load_records(aug_in, aug_strict);
    hamos::save_motion_records(aug_out,
                               hamos::augment_records(records, cfg, seed));
    std::cout << "augmented " << records.size() << " sequences -> " << aug_out
              << "\n";
  } else if (train->parsed()) {
    hamos::RunConfig cfg = hamos::RunConfig::load(train_cfg);
    cfg.seed = resolve_seed(train_seed_opt, train_seed, cfg.seed);
    const auto records = load_records(train_data, false);
    hamos::LoadedCheckpoint resume;
    hamos::LoadedCheckpoint* resume_ptr = nullptr;
    if (!train_resume.empty()) {
      resume = hamos::load_checkpoint(train_resume);
      resume.config.train_steps = cfg.train_steps;
      cfg = resume.config;
      resume_ptr = &resume;
    }
    hamos::TrainOutput out = hamos::run_training(
        cfg, records,
        [&](const hamos::TrainProgress& p) {
          if (log_every > 0 && p.step % log_every == 0)
            std::cout << "step " << p.step << " total " << p.loss.total
                      << " simple " << p.loss.simple << " shape "
                      << p.loss.shape << " pos " << p.loss.pos << " skat "
                      << p.loss.skat << std::endl;
        },
        resume_ptr);
    hamos::save_checkpoint(train_ckpt, *out.model, cfg, out.steps,
                           out.rng_state);
    std::cout << "saved checkpoint to " << train_ckpt << " after " << out.steps
              << " steps\n";
  } else if (sample->parsed()) {
    hamos::LoadedCheckpoint ckpt = hamos::load_checkpoint(smp_ckpt);
    const auto obs = load_records(smp_obs, false);
    hamos::SampleOptions opts;
    opts.steps = smp_steps > 0 ? smp_steps : ckpt.config.sample_steps;
    opts.guidance = !no_guidance;
    opts.seed = resolve_seed(smp_seed_opt, smp_seed, ckpt.config.seed);
    const auto preds =
        hamos::sample_records(*ckpt.model, ckpt.config, obs, opts);
    hamos::save_motion_records(smp_out, preds);
    std::cout << "sampled " << preds.size() << " sequences -> " << smp_out
              << "\n";
  } else if (eval->parsed()) {
    const auto pred = load_records(ev_pred, false);
    const auto gt = load_records(ev_gt, false);
    const auto obs = load_records(ev_obs, false);
    const hamos::EvalOutput out =
        hamos::evaluate_records(tree, pred, gt, obs);
    std::ofstream rf(ev_report);
    if (!rf) throw hamos::Error("cannot write report '" + ev_report + "'");
    rf << hamos::eval_report_json(out) << "\n";
    std::cout << "mpjpe_mm " << out.aggregate.mpjpe << " hand_pe_mm "
              << out.aggregate.hand_pe;
    if (out.aggregate.vis_hand_pe)
      std::cout << " vis_hand_pe_mm " << *out.aggregate.vis_hand_pe;
    std::cout << " jerk_kms3 " << out.aggregate.jerk << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const hamos::SchemaViolation& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const hamos::DecodeError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
