// test_gestalt.cpp

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

#include "gestaltfuse/gestalt.hpp"
#include "gestaltfuse/rng.hpp"

using namespace gestaltfuse;

namespace {
GestaltWeights weights(double wi, double wh, double wa, double wf, double theta) {
  GestaltWeights w;
  w.w_imageability = wi;
  w.w_hcu = wh;
  w.w_arousal = wa;
  w.w_familiarity = wf;
  w.threshold = theta;
  return w;
}
}  // namespace

TEST_CASE("gestalt score is a plain weighted sum") {
  auto w = weights(0.25, 0.25, 0.25, 0.25, 0.5);
  CHECK(gestalt_score({1, 1, 1, 1}, w) == 1.0);
  CHECK(gestalt_score({0, 0, 0, 0}, w) == 0.0);
  CHECK(gestalt_score({0.7, 0.1, 0.9, 0.3}, weights(1, 0, 0, 0, 0.5)) == 0.7);
  // signed weights pass through without clamping
  CHECK(gestalt_score({1, 1, 0, 0}, weights(0.5, -0.5, 0, 0, 0.5)) == 0.0);
}

TEST_CASE("routing: threshold comparison with with-audio ties") {
  CHECK(route(0.6, 0.5) == Pathway::kWithAudio);
  CHECK(route(0.5, 0.5) == Pathway::kWithAudio);
  CHECK(route(0.49, 0.5) == Pathway::kWithoutAudio);
}

TEST_CASE("routing is invariant under positive rescaling of weights and threshold") {
  Xoshiro256 rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    GestaltSubscores s{rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()};
    auto w = weights(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1),
                     rng.uniform(-1, 1), rng.uniform());
    double c = rng.uniform(0.1, 4.0);
    double g = gestalt_score(s, w);
    auto scaled = weights(c * w.w_imageability, c * w.w_hcu, c * w.w_arousal,
                          c * w.w_familiarity, 0.0);
    double g_scaled = gestalt_score(s, scaled);
    CHECK(route(g, w.threshold) == route(g_scaled, c * w.threshold));
  }
}

TEST_CASE("with non-negative weights, raising a subscore never flips to without-audio") {
  Xoshiro256 rng(78);
  for (int trial = 0; trial < 200; ++trial) {
    auto w = weights(rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform(),
                     rng.uniform());
    GestaltSubscores s{rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()};
    if (route(gestalt_score(s, w), w.threshold) != Pathway::kWithAudio) continue;
    GestaltSubscores raised = s;
    raised.arousal = std::min(1.0, raised.arousal + rng.uniform());
    raised.hcu = std::min(1.0, raised.hcu + rng.uniform());
    CHECK(route(gestalt_score(raised, w), w.threshold) == Pathway::kWithAudio);
  }
}

TEST_CASE("weights validation") {
  CHECK_THROWS_AS(weights(0, 0, 0, 0, 0.5).validate(), Error);
  CHECK_THROWS_AS(weights(1, 0, 0, 0, 1.5).validate(), Error);
  CHECK_NOTHROW(weights(0.5, -0.5, 0, 0, 0.0).validate());
}

TEST_CASE("gestalt.csv round trip") {
  GestaltWeights w;
  std::vector<GestaltScore> scores;
  Xoshiro256 rng(5);
  for (int i = 0; i < 10; ++i) {
    GestaltSubscores s{rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()};
    scores.push_back(make_gestalt_score("v" + std::to_string(i), s, w));
  }
  write_file("/tmp/gf_gestalt.csv", write_gestalt_csv(scores));
  auto back = load_gestalt_csv("/tmp/gf_gestalt.csv");
  REQUIRE(back.size() == scores.size());
  for (size_t i = 0; i < scores.size(); ++i) {
    CHECK(back[i].video_id == scores[i].video_id);
    CHECK(back[i].combined == scores[i].combined);
    CHECK(back[i].pathway == scores[i].pathway);
    CHECK(back[i].subscores.hcu == scores[i].subscores.hcu);
  }
}
