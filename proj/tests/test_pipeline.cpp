// test_pipeline.cpp

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

#include <catch2/catch_amalgamated.hpp>
#include <filesystem>
#include <thread>

#include "gestaltfuse/pipeline.hpp"

using namespace gestaltfuse;
namespace fs = std::filesystem;

namespace {

std::string fresh_dir(const std::string& name) {
  std::string dir = "/tmp/gf_pl_" + name;
  fs::remove_all(dir);
  return dir;
}

/// Relative path -> file bytes for every regular file under root.
std::map<std::string, std::string> tree_bytes(const std::string& root) {
  std::map<std::string, std::string> out;
  for (const auto& entry : fs::recursive_directory_iterator(root))
    if (entry.is_regular_file())
      out[fs::relative(entry.path(), root).string()] =
          read_file(entry.path().string());
  return out;
}

FixtureSpec small_fixture(std::uint64_t seed) {
  FixtureSpec fx;
  fx.synth.n_users = 20;
  fx.synth.n_videos = 40;
  fx.synth.seed = seed;
  return fx;
}

}  // namespace

TEST_CASE("synth emits a loadable config with resolved paths") {
  auto dir = fresh_dir("cfg");
  auto config_path = cmd_synth(dir, small_fixture(5));
  auto cfg = load_pipeline_config(config_path);
  CHECK(fs::exists(cfg.paths.annotations));
  CHECK(fs::exists(cfg.paths.captions));
  CHECK(fs::exists(cfg.paths.audio_tags));
  CHECK(fs::exists(cfg.paths.audio_dir));
  CHECK(cfg.runs.size() == 9);  // 4 runs x 2 terms + frame-only short
  CHECK(cfg.scorers.size() == 12);
  CHECK(!cfg.config_hash.empty());
}

TEST_CASE("seed and output overrides change the effective config and hash") {
  auto dir = fresh_dir("ovr");
  auto config_path = cmd_synth(dir, small_fixture(5));
  auto base = load_pipeline_config(config_path);
  auto reseeded = load_pipeline_config(config_path, 99);
  CHECK(reseeded.seed == 99);
  CHECK(reseeded.config_hash != base.config_hash);
  auto redirected = load_pipeline_config(config_path, std::nullopt, dir + "/elsewhere");
  CHECK(redirected.paths.output_dir == dir + "/elsewhere");
}

TEST_CASE("config validation rejects structural problems") {
  auto dir = fresh_dir("bad");
  auto config_path = cmd_synth(dir, small_fixture(5));
  auto j = nlohmann::json::parse(read_file(config_path));

  auto load_from = [&](nlohmann::json patched) {
    return pipeline_config_from_json(std::move(patched), dir);
  };

  auto dup_run = j;
  dup_run["runs"].push_back(dup_run["runs"][0]);
  CHECK_THROWS_AS(load_from(dup_run), ConfigInvalid);

  auto ghost_member = j;
  ghost_member["runs"][0]["with_audio"]["members"][0]["scorer_id"] = "nonexistent";
  CHECK_THROWS_AS(load_from(ghost_member), ConfigInvalid);

  auto bad_target = j;
  bad_target["scorers"][0]["target"] = "weekly";
  CHECK_THROWS_AS(load_from(bad_target), ConfigInvalid);

  auto no_annotations = j;
  no_annotations["paths"].erase("annotations");
  CHECK_THROWS_AS(load_from(no_annotations), ConfigInvalid);

  auto bad_long_mode = j;
  bad_long_mode["gt"]["long_mode"] = "cf";
  CHECK_THROWS_AS(cmd_score_gt(load_from(bad_long_mode)), ConfigInvalid);
}

TEST_CASE("score-gt writes scores plus a sidecar carrying hash and seed") {
  auto dir = fresh_dir("gt");
  auto cfg = load_pipeline_config(cmd_synth(dir, small_fixture(7)));
  auto path = cmd_score_gt(cfg);
  auto scores = load_scores(path);
  CHECK(scores.size() == 40);
  auto meta = nlohmann::json::parse(read_file(path + ".meta.json"));
  CHECK(meta["config_hash"] == cfg.config_hash);
  CHECK(meta["seed"] == cfg.seed);
  CHECK(meta["command"] == "score-gt");
}

TEST_CASE("hit-rate short mode differs from collaborative regeneration") {
  auto dir = fresh_dir("modes");
  auto config_path = cmd_synth(dir, small_fixture(11));
  auto j = nlohmann::json::parse(read_file(config_path));
  j["gt"]["short_mode"] = "hit_rate";
  j["paths"]["output_dir"] = "out_hit";
  auto cfg_hit = pipeline_config_from_json(j, dir);
  auto cfg_cf = load_pipeline_config(config_path);
  auto hit_scores = load_scores(cmd_score_gt(cfg_hit));
  auto cf_scores = load_scores(cmd_score_gt(cfg_cf));
  bool any_diff = false;
  for (size_t i = 0; i < hit_scores.size(); ++i)
    if (*hit_scores[i].short_term != *cf_scores[i].short_term) any_diff = true;
  CHECK(any_diff);
  // long-term path is hit-rate in both configs
  for (size_t i = 0; i < hit_scores.size(); ++i)
    CHECK(*hit_scores[i].long_term == *cf_scores[i].long_term);
}

TEST_CASE("gestalt demands scores.csv first, then covers every scored video") {
  auto dir = fresh_dir("gestalt");
  auto cfg = load_pipeline_config(cmd_synth(dir, small_fixture(13)));
  CHECK_THROWS_AS(cmd_gestalt(cfg), ConfigInvalid);
  cmd_score_gt(cfg);
  auto path = cmd_gestalt(cfg);
  auto scores = load_gestalt_csv(path);
  CHECK(scores.size() == 40);
  for (const auto& g : scores)
    CHECK(g.pathway == route(g.combined, cfg.gestalt_weights.threshold));
}

TEST_CASE("extract-audio writes three channels and a sidecar per clip") {
  auto dir = fresh_dir("xa");
  auto cfg = load_pipeline_config(cmd_synth(dir, small_fixture(17)));
  auto outputs = cmd_extract_audio(cfg);
  CHECK(outputs.size() == 40 * 4);  // c0, c1, c2, features.json
  auto meta = nlohmann::json::parse(
      read_file((fs::path(cfg.paths.output_dir) / "features/v00.features.json").string()));
  CHECK(meta["config_hash"] == cfg.config_hash);
  CHECK(meta["dsp"]["n_mfcc"] == 13);
  CHECK(meta["normalization"]["c0"].size() == 13);
  CHECK(fs::exists(fs::path(cfg.paths.output_dir) / "features/v00.c2.npy"));
}

TEST_CASE("fuse is idempotent and honors calibrated run configs") {
  auto dir = fresh_dir("fuse");
  auto cfg = load_pipeline_config(cmd_synth(dir, small_fixture(19)));
  cmd_score_gt(cfg);
  cmd_gestalt(cfg);
  auto first = cmd_fuse(cfg);
  auto bytes1 = read_file(first[0]);
  auto second = cmd_fuse(cfg);
  CHECK(read_file(second[0]) == bytes1);

  // calibrating rewrites weights; fuse must then pick the tuned config up
  cmd_calibrate(cfg, "run3_everything");
  auto run_cfg_path = fs::path(cfg.paths.output_dir) /
                      "run_config_run3_everything_short_term.json";
  REQUIRE(fs::exists(run_cfg_path));
  auto tuned = run_config_from_json(
      nlohmann::json::parse(read_file(run_cfg_path.string())));
  bool differs = false;
  for (size_t i = 0; i < tuned.with_audio->members.size(); ++i)
    if (tuned.with_audio->members[i].weight !=
        cfg.runs[2].with_audio->members[i].weight)
      differs = true;
  CHECK(differs);
  auto refused = cmd_fuse(cfg, "run3_everything");
  CHECK(read_file(refused[0]) != bytes1);
}

TEST_CASE("fuse on a missing member prediction fails loudly") {
  auto dir = fresh_dir("missing");
  auto cfg = load_pipeline_config(cmd_synth(dir, small_fixture(23)));
  cmd_score_gt(cfg);
  cmd_gestalt(cfg);
  // drop one video from a member file
  auto victim = dir + "/predictions/frame_short.csv";
  auto preds = load_predictions(victim, "frame_short", Term::kShortTerm);
  preds.scores.erase(preds.scores.begin());
  write_file(victim, write_predictions(preds.scores));
  // the member source itself is short one video: surfaces at scorer level
  CHECK_THROWS_AS(cmd_fuse(cfg, "run2_no_audio"), MissingVideo);
}

TEST_CASE("pipeline output equals the concatenation of individual commands") {
  auto dir = fresh_dir("whole_vs_steps");
  auto config_path = cmd_synth(dir, small_fixture(29));
  auto cfg_a = load_pipeline_config(config_path, std::nullopt, dir + "/out_whole");
  cmd_pipeline(cfg_a);

  auto cfg_b = load_pipeline_config(config_path, std::nullopt, dir + "/out_steps");
  cmd_score_gt(cfg_b);
  cmd_extract_audio(cfg_b);
  cmd_gestalt(cfg_b);
  cmd_calibrate(cfg_b);
  cmd_fuse(cfg_b);
  cmd_evaluate(cfg_b);

  auto a = tree_bytes(cfg_a.paths.output_dir);
  auto b = tree_bytes(cfg_b.paths.output_dir);
  REQUIRE(a.size() == b.size());
  for (const auto& [rel, bytes] : a) {
    INFO(rel);
    CHECK(b.at(rel) == bytes);
  }
}

TEST_CASE("a remote scorer plugs into fusion through the config") {
  auto dir = fresh_dir("remote");
  auto config_path = cmd_synth(dir, small_fixture(37));

  // an in-process model server that scores by caption length and records
  // whether captions arrived augmented
  std::atomic<bool> saw_augmented{false};
  httplib::Server server;
  server.Post("/score", [&](const httplib::Request& req, httplib::Response& res) {
    auto body = nlohmann::json::parse(req.body);
    nlohmann::json reply;
    reply["scores"] = nlohmann::json::array();
    for (const auto& v : body["videos"]) {
      std::string caption = v.value("caption", "");
      if (caption.find(' ') != caption.rfind(' ')) saw_augmented = true;
      double score = std::min(1.0, caption.size() / 64.0);
      reply["scores"].push_back({{"video_id", v["video_id"]}, {"score", score}});
    }
    res.set_content(reply.dump(), "application/json");
  });
  int port = server.bind_to_any_port("127.0.0.1");
  std::thread listener([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  auto j = nlohmann::json::parse(read_file(config_path));
  for (auto& s : j["scorers"])
    if (s["scorer_id"] == "caption_short") {
      s["kind"] = "remote";
      s["source"] = "http://127.0.0.1:" + std::to_string(port);
      s["augment_captions"] = true;
    }
  auto cfg = pipeline_config_from_json(j, dir);
  cmd_score_gt(cfg);
  cmd_gestalt(cfg);
  auto written = cmd_fuse(cfg, "run2_no_audio");
  server.stop();
  listener.join();

  auto fused = load_predictions(written[0], "run2", Term::kShortTerm);
  CHECK(fused.scores.size() == 40);
  CHECK(saw_augmented.load());
}

TEST_CASE("heuristic sub-score sources drive gestalt from real audio") {
  auto dir = fresh_dir("heur");
  auto config_path = cmd_synth(dir, small_fixture(43), /*emit_audio=*/true);
  auto j = nlohmann::json::parse(read_file(config_path));
  for (auto& s : j["scorers"]) {
    std::string target = s["target"];
    if (target.rfind("gestalt:", 0) == 0) {
      s["kind"] = "heuristic";
      s["source"] = "";
    }
  }
  auto cfg = pipeline_config_from_json(j, dir);
  cmd_score_gt(cfg);
  auto path = cmd_gestalt(cfg);
  auto scores = load_gestalt_csv(path);
  REQUIRE(scores.size() == 40);
  // synth audio loudness tracks the arousal level, so arousal must vary
  double lo = 1.0, hi = 0.0;
  for (const auto& g : scores) {
    lo = std::min(lo, g.subscores.arousal);
    hi = std::max(hi, g.subscores.arousal);
    CHECK(g.subscores.familiarity >= 0.0);
    CHECK(g.subscores.familiarity <= 1.0);
  }
  CHECK(hi - lo > 0.3);
}

TEST_CASE("pipeline runs with only annotations and prediction files") {
  auto dir = fresh_dir("minimal");
  auto config_path = cmd_synth(dir, small_fixture(47), /*emit_audio=*/false);
  auto j = nlohmann::json::parse(read_file(config_path));
  j["paths"]["captions"] = "";
  j["paths"]["audio_tags"] = "";
  j["paths"]["audio_dir"] = "";
  auto cfg = pipeline_config_from_json(j, dir);
  auto out = cmd_pipeline(cfg);  // extract-audio is skipped, everything else runs
  CHECK(fs::exists(out.report_md));
  CHECK(out.results.size() == 9);
}

TEST_CASE("a file-backed scorer whose source vanished fails config validation") {
  auto dir = fresh_dir("vanish");
  auto config_path = cmd_synth(dir, small_fixture(41));
  fs::remove(dir + "/predictions/frame_short.csv");
  CHECK_THROWS_AS(load_pipeline_config(config_path), ConfigInvalid);
}

TEST_CASE("evaluate reports every configured run on the test split") {
  auto dir = fresh_dir("eval");
  auto cfg = load_pipeline_config(cmd_synth(dir, small_fixture(31)));
  auto out = cmd_pipeline(cfg);
  CHECK(out.results.size() == 9);
  for (const auto& r : out.results) {
    CHECK(r.n == 16u);  // the 40% test split of 40 videos
    CHECK(r.spearman >= -1.0);
    CHECK(r.spearman <= 1.0);
  }
  auto md = read_file(out.report_md);
  CHECK(md.find("run4_gestalt") != std::string::npos);
  CHECK(md.find("| - |") != std::string::npos);  // frame-only has no long term
  CHECK(md.find("**") != std::string::npos);
  auto csv = read_file(out.results_csv);
  CHECK(csv.find("run_id,target,spearman,pearson,n") == 0);
}
