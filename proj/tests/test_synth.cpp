// test_synth.cpp

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

#include <Eigen/SVD>
#include <catch2/catch_amalgamated.hpp>
#include <filesystem>

#include "gestaltfuse/eval.hpp"
#include "gestaltfuse/synth.hpp"

using namespace gestaltfuse;

namespace {

std::map<std::string, double> latent_short(const SynthOutput& out) {
  std::map<std::string, double> m;
  for (const auto& s : out.latent) m[s.video_id] = *s.short_term;
  return m;
}

}  // namespace

TEST_CASE("same seed reproduces the identical log; different seeds differ") {
  SynthSpec spec;
  spec.n_users = 12;
  spec.n_videos = 20;
  spec.seed = 4;
  auto a = generate(spec);
  auto b = generate(spec);
  CHECK(a.log == b.log);
  REQUIRE(a.latent.size() == b.latent.size());
  for (size_t i = 0; i < a.latent.size(); ++i)
    CHECK(*a.latent[i].short_term == *b.latent[i].short_term);
  spec.seed = 5;
  CHECK(!(generate(spec).log == a.log));
}

TEST_CASE("full density, zero noise, full response: matrix is complete and low-rank") {
  SynthSpec spec;
  spec.n_users = 15;
  spec.n_videos = 25;
  spec.density = 1.0;
  spec.noise_sd_ms = 0.0;
  spec.miss_model.response_floor = 1.0;  // everyone responds
  spec.emit_long_lag = false;
  spec.seed = 8;
  auto out = generate(spec);
  auto matrix = build_rt_matrix(out.log);
  CHECK(matrix.cells.size() == spec.n_users * spec.n_videos);

  Eigen::MatrixXd dense(spec.n_users, spec.n_videos);
  for (const auto& [key, value] : matrix.cells)
    dense(key.first, key.second) = value;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(dense);
  const auto& sv = svd.singularValues();
  // base + user column + video row contribute at most rank 3 on top of the
  // rank-2 interaction
  for (int i = spec.latent_rank + 3; i < sv.size(); ++i)
    CHECK(sv(i) <= 1e-9 * sv(0));
}

TEST_CASE("m = 1 with full response model means every hit is recorded") {
  SynthSpec spec;
  spec.n_users = 10;
  spec.n_videos = 8;
  spec.density = 1.0;
  spec.miss_model.response_floor = 1.0;
  spec.seed = 3;
  auto out = generate(spec);
  for (const auto& s : hit_rate_scores(out.log)) {
    CHECK(*s.short_term == 1.0);
    CHECK(*s.long_term == 1.0);
  }
}

TEST_CASE("hit rate recovers the latent ordering at 50 users, noise-free full density") {
  SynthSpec spec;
  spec.n_users = 50;
  spec.n_videos = 100;
  spec.density = 1.0;
  spec.noise_sd_ms = 0.0;
  spec.miss_model.response_floor = 0.0;  // P(respond) = m exactly
  spec.emit_long_lag = false;
  for (std::uint64_t seed : {1, 2, 3}) {
    spec.seed = seed;
    auto out = generate(spec);
    auto latent = latent_short(out);
    std::vector<double> x, y;
    for (const auto& s : hit_rate_scores(out.log)) {
      x.push_back(*s.short_term);
      y.push_back(latent[s.video_id]);
    }
    CHECK(spearman(x, y) >= 0.95);
  }
}

TEST_CASE("monotone link: latent memorability against mean observed reaction time") {
  SynthSpec spec;
  spec.n_users = 40;
  spec.n_videos = 60;
  spec.density = 0.6;
  spec.seed = 9;
  auto out = generate(spec);
  auto latent = latent_short(out);
  std::map<std::string, std::pair<double, size_t>> acc;
  for (const auto& r : out.log.records)
    if (r.responded) {
      acc[r.video_id].first += *r.reaction_time_ms;
      acc[r.video_id].second += 1;
    }
  std::vector<double> m, rt;
  for (const auto& [video, sum_count] : acc) {
    m.push_back(latent[video]);
    rt.push_back(sum_count.first / sum_count.second);
  }
  CHECK(spearman(m, rt) < 0.0);
}

TEST_CASE("slow-outlier misses enter the log as responded late detections") {
  SynthSpec spec;
  spec.n_users = 30;
  spec.n_videos = 30;
  spec.density = 1.0;
  spec.miss_model.response_floor = 0.2;
  spec.miss_model.slow_outlier_prob = 1.0;  // every miss becomes a slow RT
  spec.emit_long_lag = false;
  spec.seed = 6;
  auto out = generate(spec);
  for (const auto& r : out.log.records) CHECK(r.responded);

  spec.miss_model.slow_outlier_prob = 0.0;
  auto without = generate(spec);
  size_t non_responses = 0;
  for (const auto& r : without.log.records)
    if (!r.responded) ++non_responses;
  CHECK(non_responses > 0);
}

TEST_CASE("emitted files round trip through the data model") {
  FixtureSpec fx;
  fx.synth.n_users = 10;
  fx.synth.n_videos = 12;
  fx.synth.seed = 21;
  auto files = write_fixture("/tmp/gf_fixture", fx);

  auto log = parse_annotations(files.annotations);
  CHECK(log.video_ids.size() == 12);
  auto latent = load_scores(files.latent_scores);
  CHECK(latent.size() == 12);
  auto caps = load_captions(files.captions);
  CHECK(caps.size() == 12);
  auto tags = load_audio_tags(files.audio_tags);
  CHECK(tags.size() == 12);
  for (const auto& [name, path] : files.gestalt_subscores)
    CHECK(load_predictions(path, name, Term::kShortTerm).scores.size() == 12);
  CHECK(files.predictions.size() == 8);  // 4 models x 2 terms
  for (const auto& [scorer, path] : files.predictions) {
    auto preds = load_predictions(path, scorer, Term::kShortTerm);
    CHECK(preds.scores.size() == 12);
  }
}

TEST_CASE("audio_boost degrades with-audio members only on low-gestalt videos") {
  FixtureSpec fx;
  fx.synth.n_users = 8;
  fx.synth.n_videos = 150;
  fx.synth.seed = 33;
  fx.audio_boost = true;
  auto files = write_fixture("/tmp/gf_fixture_boost", fx);
  auto latent = load_scores(files.latent_scores);
  auto aug = load_predictions(files.predictions.at("aug_caption_short"),
                              "aug_caption_short", Term::kShortTerm);
  // split videos by gestalt level recovered from the subscore file
  auto level = load_predictions(files.gestalt_subscores.at("imageability"),
                                "imageability", Term::kShortTerm);
  double err_hi = 0.0, err_lo = 0.0;
  size_t n_hi = 0, n_lo = 0;
  for (const auto& s : latent) {
    double e = std::abs(aug.scores.at(s.video_id) - *s.short_term);
    if (level.scores.at(s.video_id) >= 0.55) {
      err_hi += e;
      ++n_hi;
    } else if (level.scores.at(s.video_id) < 0.45) {
      err_lo += e;
      ++n_lo;
    }
  }
  REQUIRE(n_hi > 10);
  REQUIRE(n_lo > 10);
  CHECK(err_hi / n_hi < 0.5 * (err_lo / n_lo));
}
