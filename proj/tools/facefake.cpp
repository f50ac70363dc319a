#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "facefake/commands.hpp"

namespace {

using facefake::RunConfig;

struct GlobalFlags {
  std::string config_path;
  uint64_t seed = 0;
  int workers = 0;
  CLI::Option* config_opt = nullptr;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* workers_opt = nullptr;
};

void add_global_flags(CLI::App* cmd, GlobalFlags& g) {
  g.config_opt = cmd->add_option("--config", g.config_path,
                                 "JSON config file (falls back to $FACEFAKE_CONFIG)");
  g.seed_opt = cmd->add_option("--seed", g.seed, "Run seed");
  g.workers_opt =
      cmd->add_option("--workers", g.workers, "Per-video worker threads");
}

RunConfig resolve_config(const GlobalFlags& g) {
  std::optional<std::filesystem::path> file;
  if (g.config_opt->count() > 0) file = g.config_path;
  RunConfig cfg = facefake::load_run_config(file);
  if (g.seed_opt->count() > 0) cfg.seed = g.seed;
  if (g.workers_opt->count() > 0) cfg.workers = g.workers;
  return cfg;
}

int run(int argc, char** argv) {
  CLI::App app{"Deepfake video authenticity pipeline"};
  app.require_subcommand(1);

  // ---- synth ----------------------------------------------------------
  auto* synth = app.add_subcommand("synth", "Generate a synthetic video dataset");
  GlobalFlags synth_g;
  add_global_flags(synth, synth_g);
  std::string synth_out;
  facefake::SynthOptions synth_opts;
  synth->add_option("--out", synth_out, "Output dataset directory")->required();
  synth->add_option("--videos", synth_opts.n_videos, "Total videos");
  synth->add_option("--frames", synth_opts.frames_per_video, "Frames per video");
  synth->add_option("--width", synth_opts.width, "Frame width");
  synth->add_option("--height", synth_opts.height, "Frame height");
  synth->add_option("--folders", synth_opts.n_folders, "Folder count");
  synth->add_option("--fake-fraction", synth_opts.fake_fraction,
                    "Fraction of fake videos");

  // ---- extract --------------------------------------------------------
  auto* extract = app.add_subcommand(
      "extract", "Detect faces and materialize crops, masks and the manifest");
  GlobalFlags ex_g;
  add_global_flags(extract, ex_g);
  std::string ex_input, ex_out, ex_scorer;
  int ex_frames = 0, ex_min_face = 0, ex_cap = 0;
  double ex_margin = -1, ex_scale_factor = 0;
  bool ex_no_masks = false;
  extract->add_option("--input", ex_input, "Dataset root of frame-directory videos")
      ->required();
  extract->add_option("--out", ex_out, "Output directory")->required();
  auto* ex_frames_opt =
      extract->add_option("--frames-per-video", ex_frames, "Frames to sample");
  auto* ex_margin_opt =
      extract->add_option("--margin", ex_margin, "Crop margin fraction");
  auto* ex_min_face_opt =
      extract->add_option("--min-face", ex_min_face, "Smallest detectable face");
  auto* ex_scale_opt = extract->add_option("--scale-factor", ex_scale_factor,
                                           "Pyramid scale factor");
  auto* ex_cap_opt =
      extract->add_option("--input-cap", ex_cap, "Max frame side fed to detector");
  auto* ex_scorer_opt =
      extract->add_option("--scorer", ex_scorer, "blob or conv:<dir>");
  extract->add_flag("--no-masks", ex_no_masks, "Skip SSIM masks");

  // ---- train ----------------------------------------------------------
  auto* train = app.add_subcommand("train", "Train the classifier on a manifest");
  GlobalFlags tr_g;
  add_global_flags(train, tr_g);
  std::string tr_manifest, tr_out, tr_variant, tr_holdout;
  double tr_budget = 0, tr_lr = 0, tr_momentum = -1, tr_power = 0, tr_eps = -1;
  int tr_input_res = -1, tr_steps = 0, tr_batch = -1, tr_val_every = 0, tr_threads = 0;
  train->add_option("--manifest", tr_manifest, "manifest.json path")->required();
  train->add_option("--out", tr_out, "Output directory")->required();
  auto* tr_variant_opt = train->add_option("--variant", tr_variant, "B0..B7");
  auto* tr_budget_opt =
      train->add_option("--width-budget", tr_budget, "Channel shrink factor (0,1]");
  auto* tr_input_res_opt = train->add_option(
      "--input-res", tr_input_res, "Input resolution override (0 = variant default)");
  auto* tr_lr_opt = train->add_option("--base-lr", tr_lr, "Base learning rate");
  auto* tr_momentum_opt = train->add_option("--momentum", tr_momentum, "SGD momentum");
  auto* tr_power_opt =
      train->add_option("--poly-power", tr_power, "Polynomial decay power");
  auto* tr_steps_opt = train->add_option("--steps", tr_steps, "Total steps");
  auto* tr_batch_opt = train->add_option(
      "--batch-size", tr_batch, "Even batch size (0 = variant default)");
  auto* tr_eps_opt =
      train->add_option("--label-smoothing", tr_eps, "Label smoothing epsilon");
  auto* tr_holdout_opt = train->add_option(
      "--holdout", tr_holdout, "Comma-separated holdout folder ids");
  auto* tr_val_opt =
      train->add_option("--validation-every", tr_val_every, "Validation cadence");
  auto* tr_threads_opt =
      train->add_option("--threads", tr_threads, "Compute threads for layer math");

  // ---- predict --------------------------------------------------------
  auto* predict = app.add_subcommand(
      "predict", "Score videos or extracted crops with a trained checkpoint");
  GlobalFlags pr_g;
  add_global_flags(predict, pr_g);
  std::string pr_input, pr_ckpt, pr_out, pr_scorer;
  double pr_low = -1, pr_high = -1, pr_weight = 0;
  bool pr_raw_conf = false;
  predict->add_option("--input", pr_input, "Videos dir or extracted dataset dir")
      ->required();
  predict->add_option("--checkpoint", pr_ckpt, "Model checkpoint")->required();
  predict->add_option("--out", pr_out, "Output directory")->required();
  auto* pr_low_opt = predict->add_option("--low-conf", pr_low, "Discard threshold");
  auto* pr_high_opt =
      predict->add_option("--high-conf", pr_high, "High-confidence threshold");
  auto* pr_weight_opt =
      predict->add_option("--high-weight", pr_weight, "High-confidence weight");
  predict->add_flag("--raw-confidence", pr_raw_conf,
                    "Rank frames by raw p instead of folded confidence");
  auto* pr_scorer_opt =
      predict->add_option("--scorer", pr_scorer, "blob or conv:<dir>");

  // ---- evaluate -------------------------------------------------------
  auto* evaluate = app.add_subcommand(
      "evaluate", "Compute metrics for a predictions CSV against labels");
  GlobalFlags ev_g;
  add_global_flags(evaluate, ev_g);
  std::string ev_preds, ev_labels, ev_report;
  evaluate->add_option("--predictions", ev_preds, "predictions.csv")->required();
  evaluate->add_option("--labels", ev_labels, "labels.csv")->required();
  auto* ev_report_opt =
      evaluate->add_option("--report", ev_report, "Write the JSON report here");

  CLI11_PARSE(app, argc, argv);

  if (synth->parsed()) {
    RunConfig cfg = resolve_config(synth_g);
    synth_opts.seed = cfg.seed;
    const auto summary = facefake::cmd_synth(synth_out, synth_opts);
    std::printf("synth: %d real + %d fake videos, %d frames -> %s\n",
                summary.real_videos, summary.fake_videos, summary.frames_written,
                synth_out.c_str());
    return 0;
  }

  if (extract->parsed()) {
    RunConfig cfg = resolve_config(ex_g);
    if (ex_frames_opt->count()) cfg.sampling.frames_per_video = ex_frames;
    if (ex_margin_opt->count()) cfg.margin_fraction = static_cast<float>(ex_margin);
    if (ex_min_face_opt->count()) cfg.detector.pyramid.min_face_size = ex_min_face;
    if (ex_scale_opt->count()) {
      cfg.detector.pyramid.scale_factor = static_cast<float>(ex_scale_factor);
    }
    if (ex_cap_opt->count()) cfg.detector.detector_input_cap = ex_cap;
    if (ex_scorer_opt->count()) cfg.scorer = ex_scorer;
    if (ex_no_masks) cfg.write_masks = false;
    const auto result = facefake::cmd_extract(ex_input, ex_out, cfg);
    std::printf("extract: %d videos ok, %d crops, %d masks -> %s\n",
                result.videos_ok, result.crops_written, result.masks_written,
                ex_out.c_str());
    for (const std::string& f : result.failures) {
      std::fprintf(stderr, "warning: %s\n", f.c_str());
    }
    return 0;
  }

  if (train->parsed()) {
    RunConfig cfg = resolve_config(tr_g);
    if (tr_variant_opt->count()) cfg.variant = tr_variant;
    if (tr_budget_opt->count()) cfg.width_budget = static_cast<float>(tr_budget);
    if (tr_input_res_opt->count()) cfg.input_resolution = tr_input_res;
    if (tr_lr_opt->count()) cfg.training.base_lr = static_cast<float>(tr_lr);
    if (tr_momentum_opt->count()) {
      cfg.training.momentum = static_cast<float>(tr_momentum);
    }
    if (tr_power_opt->count()) cfg.training.poly_power = static_cast<float>(tr_power);
    if (tr_steps_opt->count()) cfg.training.total_steps = tr_steps;
    if (tr_batch_opt->count()) cfg.training.batch_size = tr_batch;
    if (tr_eps_opt->count()) {
      cfg.training.label_smoothing_eps = static_cast<float>(tr_eps);
    }
    if (tr_holdout_opt->count()) {
      cfg.training.holdout_folders.clear();
      std::string item;
      std::istringstream in(tr_holdout);
      while (std::getline(in, item, ',')) {
        if (!item.empty()) cfg.training.holdout_folders.insert(std::stoi(item));
      }
    }
    if (tr_val_opt->count()) cfg.training.validation_every = tr_val_every;
    if (tr_threads_opt->count()) cfg.training.compute_threads = tr_threads;

    const auto result = facefake::cmd_train(tr_manifest, tr_out, cfg);
    if (result.final_validation) {
      const auto& v = *result.final_validation;
      std::printf(
          "validation step %d: logloss %.6f (real %.6f, fake %.6f), auc %.4f\n",
          v.step, v.logloss_overall, v.logloss_real, v.logloss_fake, v.auc);
    }
    std::printf("train: best step %d, checkpoint %s\n", result.best_step,
                result.checkpoint_path.c_str());
    return 0;
  }

  if (predict->parsed()) {
    RunConfig cfg = resolve_config(pr_g);
    if (pr_low_opt->count()) cfg.aggregation.low_conf = pr_low;
    if (pr_high_opt->count()) cfg.aggregation.high_conf = pr_high;
    if (pr_weight_opt->count()) {
      cfg.aggregation.high_weight = pr_weight;
    }
    if (pr_raw_conf) cfg.aggregation.folded_confidence = false;
    if (pr_scorer_opt->count()) cfg.scorer = pr_scorer;
    const auto result = facefake::cmd_predict(pr_input, pr_ckpt, pr_out, cfg);
    std::printf("predict: %zu videos -> %s\n", result.predictions.size(),
                result.csv_path.c_str());
    return 0;
  }

  if (evaluate->parsed()) {
    resolve_config(ev_g);  // honors --config validation even here
    std::optional<std::filesystem::path> report;
    if (ev_report_opt->count()) report = ev_report;
    const auto result = facefake::cmd_evaluate(ev_preds, ev_labels, report);
    std::printf("%s\n", result.table.c_str());
    std::printf("logloss %.6f", result.logloss);
    if (result.auc) std::printf("  auc %.6f", *result.auc);
    std::printf("  f1 %.6f  (n=%d, threshold %.2f)\n", result.prf.f1,
                result.n_videos, result.threshold);
    return 0;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const facefake::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const facefake::DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 3;
  } catch (const facefake::NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return 4;
  } catch (const facefake::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "unexpected error: %s\n", e.what());
    return 1;
  }
}
