// gestaltfuse.cpp

// Copyright 2026  gestaltfuse authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Command-line front end. One JSON config drives the pipeline; flags can
// override the seed and output directory. Logs go to stderr (GESTALTFUSE_LOG
// selects verbosity); data goes to files. On failure the last stderr line
// is a single machine-readable JSON object and the exit code is nonzero.

#include "gestaltfuse/pipeline.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <optional>
#include <string>

namespace {

using namespace gestaltfuse;

struct CommonOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "pipeline config JSON")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--seed", [&opts](const CLI::results_t& res) {
        opts.seed = std::stoull(res[0]);
        return true;
      },
      "override the config seed");
  cmd->add_option("--out", [&opts](const CLI::results_t& res) {
        opts.out = res[0];
        return true;
      },
      "override the output directory");
}

PipelineConfig load(const CommonOpts& opts) {
  return load_pipeline_config(opts.config_path, opts.seed, opts.out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"media-memorability batch pipeline"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("gestaltfuse ") + kVersion);

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset and config");
  std::string synth_dir;
  FixtureSpec fx;
  bool no_long = false, no_audio = false;
  synth->add_option("--out", synth_dir, "directory for the dataset")->required();
  synth->add_option("--videos", fx.synth.n_videos, "number of videos");
  synth->add_option("--users", fx.synth.n_users, "number of users");
  synth->add_option("--density", fx.synth.density, "fraction of (user,video) pairs logged");
  synth->add_option("--noise-ms", fx.synth.noise_sd_ms, "reaction-time noise sd");
  synth->add_option("--seed", fx.synth.seed, "generator seed");
  synth->add_flag("--audio-boost", fx.audio_boost,
                  "make with-audio models accurate only on high-gestalt videos");
  synth->add_flag("--no-long", no_long, "skip long-term annotations");
  synth->add_flag("--no-audio", no_audio, "skip per-video wav emission");

  CommonOpts score_gt_opts, extract_opts, gestalt_opts, fuse_opts, calibrate_opts,
      evaluate_opts, pipeline_opts;
  auto* score_gt = app.add_subcommand("score-gt", "compute ground-truth scores.csv");
  add_common(score_gt, score_gt_opts);
  auto* extract = app.add_subcommand("extract-audio", "write MFCC feature images");
  add_common(extract, extract_opts);
  auto* gestalt = app.add_subcommand("gestalt", "compute gestalt.csv");
  add_common(gestalt, gestalt_opts);

  std::string fuse_run, calibrate_run;
  auto* fuse = app.add_subcommand("fuse", "fuse run predictions");
  add_common(fuse, fuse_opts);
  fuse->add_option("--run", fuse_run, "only this run id (e.g. run4_gestalt)");
  auto* calibrate = app.add_subcommand("calibrate", "grid-search run weights");
  add_common(calibrate, calibrate_opts);
  calibrate->add_option("--run", calibrate_run, "only this run id");

  auto* evaluate = app.add_subcommand("evaluate", "score runs and write the report");
  add_common(evaluate, evaluate_opts);
  auto* pipeline = app.add_subcommand("pipeline", "run every stage in order");
  add_common(pipeline, pipeline_opts);

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      fx.synth.emit_long_lag = !no_long;
      auto config_path = cmd_synth(synth_dir, fx, !no_audio);
      std::printf("%s\n", config_path.c_str());
    } else if (score_gt->parsed()) {
      std::printf("%s\n", cmd_score_gt(load(score_gt_opts)).c_str());
    } else if (extract->parsed()) {
      auto outputs = cmd_extract_audio(load(extract_opts));
      log_info(std::to_string(outputs.size()) + " feature files written");
      if (!outputs.empty())
        std::printf("%s\n",
                    std::filesystem::path(outputs.front()).parent_path().c_str());
    } else if (gestalt->parsed()) {
      std::printf("%s\n", cmd_gestalt(load(gestalt_opts)).c_str());
    } else if (fuse->parsed()) {
      for (const auto& p : cmd_fuse(load(fuse_opts), fuse_run))
        std::printf("%s\n", p.c_str());
    } else if (calibrate->parsed()) {
      for (const auto& p : cmd_calibrate(load(calibrate_opts), calibrate_run))
        std::printf("%s\n", p.c_str());
    } else if (evaluate->parsed()) {
      auto out = cmd_evaluate(load(evaluate_opts));
      std::printf("%s\n%s\n", out.results_csv.c_str(), out.report_md.c_str());
    } else if (pipeline->parsed()) {
      auto out = cmd_pipeline(load(pipeline_opts));
      std::printf("%s\n%s\n", out.results_csv.c_str(), out.report_md.c_str());
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "{\"error\":\"%s\",\"detail\":\"%s\"}\n", e.code().c_str(),
                 e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "{\"error\":\"Internal\",\"detail\":\"%s\"}\n", e.what());
    return 1;
  }
  return 0;
}
