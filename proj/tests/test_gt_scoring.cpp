// test_gt_scoring.cpp

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
#include <map>

#include "gestaltfuse/gt_scoring.hpp"
#include "gestaltfuse/rng.hpp"

using namespace gestaltfuse;

namespace {

AnnotationRecord rec(const std::string& u, const std::string& v, Term lag,
                     bool repeat, bool responded, double rt = -1.0) {
  AnnotationRecord r;
  r.user_id = u;
  r.video_id = v;
  r.lag = lag;
  r.is_repeat = repeat;
  r.responded = responded;
  if (responded) r.reaction_time_ms = rt;
  return r;
}

AnnotationLog make_log(std::vector<AnnotationRecord> records) {
  AnnotationLog log;
  std::set<std::string> su, sv;
  for (auto& r : records) {
    if (su.insert(r.user_id).second) log.user_ids.push_back(r.user_id);
    if (sv.insert(r.video_id).second) log.video_ids.push_back(r.video_id);
  }
  log.records = std::move(records);
  return log;
}

std::map<std::string, std::optional<double>> short_map(
    const std::vector<MemorabilityScore>& scores) {
  std::map<std::string, std::optional<double>> m;
  for (const auto& s : scores) m[s.video_id] = s.short_term;
  return m;
}

void check_trace_non_increasing(const std::vector<double>& trace) {
  for (size_t i = 0; i + 1 < trace.size(); ++i)
    CHECK(trace[i + 1] <= trace[i] + 1e-9 * std::max(1.0, trace[i]));
}

}  // namespace

TEST_CASE("hit rate: direct definition and absent lags") {
  std::vector<AnnotationRecord> rs;
  for (int i = 0; i < 10; ++i)
    rs.push_back(rec("u" + std::to_string(i), "v1", Term::kShortTerm, true,
                     i < 8, 400.0));
  rs.push_back(rec("u0", "v2", Term::kShortTerm, true, true, 350.0));
  rs.push_back(rec("u1", "v2", Term::kShortTerm, true, true, 500.0));
  auto scores = hit_rate_scores(make_log(rs));
  auto by_video = short_map(scores);
  CHECK(*by_video["v1"] == 0.8);
  CHECK(*by_video["v2"] == 1.0);
  for (const auto& s : scores) {
    CHECK(!s.long_term.has_value());
    CHECK(s.n_long == 0);
  }
}

TEST_CASE("hit rate: non-repeat exposures do not count") {
  auto log = make_log({rec("u1", "v1", Term::kShortTerm, false, true, 300.0),
                       rec("u1", "v1", Term::kShortTerm, true, false),
                       rec("u2", "v1", Term::kShortTerm, true, true, 410.0)});
  auto scores = hit_rate_scores(log);
  REQUIRE(scores.size() == 1);
  CHECK(*scores[0].short_term == 0.5);
  CHECK(scores[0].n_short == 2);
}

TEST_CASE("hit rate output is invariant under record permutation") {
  std::vector<AnnotationRecord> rs;
  Xoshiro256 rng(7);
  for (int i = 0; i < 200; ++i)
    rs.push_back(rec("u" + std::to_string(i % 13), "v" + std::to_string(i % 7),
                     (i % 2) ? Term::kShortTerm : Term::kLongTerm, i % 3 != 0,
                     i % 5 != 0, 300.0 + i));
  auto base = hit_rate_scores(make_log(rs));
  auto shuffled = rs;
  rng.shuffle(shuffled);
  auto permuted = hit_rate_scores(make_log(shuffled));
  std::map<std::string, std::pair<std::optional<double>, std::optional<double>>> a, b;
  for (const auto& s : base) a[s.video_id] = {s.short_term, s.long_term};
  for (const auto& s : permuted) b[s.video_id] = {s.short_term, s.long_term};
  CHECK(a == b);
}

TEST_CASE("rt matrix: multiple reaction times for one pair are averaged") {
  auto log = make_log({rec("u1", "v1", Term::kShortTerm, true, true, 400.0),
                       rec("u1", "v1", Term::kShortTerm, true, true, 600.0),
                       rec("u1", "v2", Term::kShortTerm, true, false)});
  auto m = build_rt_matrix(log);
  REQUIRE(m.users == std::vector<std::string>{"u1"});
  REQUIRE(m.videos == std::vector<std::string>{"v1"});
  REQUIRE(m.cells.size() == 1);
  CHECK(m.cells.at({0, 0}) == 500.0);
}

TEST_CASE("rt matrix: a log with no responses is an empty matrix") {
  auto log = make_log({rec("u1", "v1", Term::kShortTerm, true, false),
                       rec("u2", "v1", Term::kLongTerm, true, false)});
  CHECK_THROWS_AS(build_rt_matrix(log), EmptyMatrix);
}

TEST_CASE("factorize: a single observed cell predicts the global mean everywhere") {
  ReactionMatrix m;
  m.users = {"u1", "u2"};
  m.videos = {"v1", "v2"};
  m.cells[{0, 0}] = 500.0;
  FactorizationConfig cfg;
  cfg.rank = 2;
  cfg.seed = 11;
  auto done = factorize(m, cfg);
  for (int u = 0; u < 2; ++u)
    for (int v = 0; v < 2; ++v) CHECK(done.predicted(u, v) == 500.0);
  CHECK(done.warnings.size() == 2);  // u2 and v2 have no observations
  check_trace_non_increasing(done.objective_trace);
}

TEST_CASE("factorize: rank-1 structure is recovered almost exactly") {
  // outer product of u=[1,2], v=[3,4,5], scaled to plausible milliseconds
  ReactionMatrix m;
  m.users = {"u1", "u2"};
  m.videos = {"v1", "v2", "v3"};
  double uvals[2] = {1.0, 2.0}, vvals[3] = {3.0, 4.0, 5.0};
  double mean = 0.0;
  for (size_t u = 0; u < 2; ++u)
    for (size_t v = 0; v < 3; ++v) {
      m.cells[{u, v}] = 100.0 * uvals[u] * vvals[v];
      mean += m.cells[{u, v}];
    }
  mean /= 6.0;
  FactorizationConfig cfg;
  cfg.rank = 2;
  cfg.regularization = 1e-3;
  cfg.iterations = 50;
  cfg.seed = 3;
  auto done = factorize(m, cfg);
  double sse = 0.0;
  for (const auto& [key, value] : m.cells) {
    double d = done.predicted(key.first, key.second) - value;
    sse += d * d;
  }
  double rmse = std::sqrt(sse / 6.0);
  CHECK(rmse < 1e-3 * mean);
  check_trace_non_increasing(done.objective_trace);
}

TEST_CASE("factorize: identical seeds give bit-identical completions") {
  ReactionMatrix m;
  m.users = {"a", "b", "c"};
  m.videos = {"x", "y", "z", "w"};
  Xoshiro256 rng(99);
  for (size_t u = 0; u < 3; ++u)
    for (size_t v = 0; v < 4; ++v)
      if (rng.uniform() < 0.7) m.cells[{u, v}] = rng.uniform(300.0, 900.0);
  FactorizationConfig cfg;
  cfg.rank = 2;
  cfg.seed = 5;
  auto once = factorize(m, cfg);
  auto twice = factorize(m, cfg);
  CHECK(once.predicted == twice.predicted);
}

TEST_CASE("factorize rejects invalid configurations") {
  ReactionMatrix m;
  m.users = {"u1"};
  m.videos = {"v1"};
  m.cells[{0, 0}] = 100.0;
  FactorizationConfig cfg;
  cfg.rank = 2;  // > min(1, 1)
  CHECK_THROWS_AS(factorize(m, cfg), Error);
}

TEST_CASE("2-sigma rule: hand-computed miss on a 3x2 completion") {
  CompletedMatrix done;
  done.users = {"u1", "u2", "u3"};
  done.videos = {"A", "B"};
  done.predicted.resize(3, 2);
  done.predicted << 500.0, 500.0, 500.0, 500.0, 500.0, 3000.0;
  auto scores = cf_short_term_scores(done, MissRule{});
  auto by_video = short_map(scores);
  CHECK(*by_video["A"] == 1.0);
  CHECK(*by_video["B"] == 2.0 / 3.0);
  for (const auto& s : scores) CHECK(s.n_short == 3);
}

TEST_CASE("2-sigma rule: zero variance means no misses") {
  CompletedMatrix done;
  done.users = {"u1", "u2"};
  done.videos = {"A", "B", "C"};
  done.predicted = Eigen::MatrixXd::Constant(2, 3, 712.0);
  for (const auto& s : cf_short_term_scores(done, MissRule{}))
    CHECK(*s.short_term == 1.0);
}

TEST_CASE("2-sigma rule: enormous k_sigma never produces misses") {
  CompletedMatrix done;
  done.users = {"u1", "u2", "u3"};
  done.videos = {"A", "B"};
  done.predicted.resize(3, 2);
  done.predicted << 100, 5000, 200, 9000, 300, 12000;
  MissRule rule;
  rule.k_sigma = 1e12;
  for (const auto& s : cf_short_term_scores(done, rule))
    CHECK(*s.short_term == 1.0);
}

TEST_CASE("misses are monotone in k_sigma") {
  Xoshiro256 rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    CompletedMatrix done;
    size_t nu = 2 + rng.below(8), nv = 2 + rng.below(8);
    for (size_t u = 0; u < nu; ++u) done.users.push_back("u" + std::to_string(u));
    for (size_t v = 0; v < nv; ++v) done.videos.push_back("v" + std::to_string(v));
    done.predicted.resize(nu, nv);
    for (size_t u = 0; u < nu; ++u)
      for (size_t v = 0; v < nv; ++v)
        done.predicted(u, v) = rng.uniform(200.0, 2000.0);
    std::vector<double> previous(nv, -1.0);
    for (double k : {0.5, 1.0, 1.5, 2.0, 3.0}) {
      MissRule rule;
      rule.k_sigma = k;
      auto scores = cf_short_term_scores(done, rule);
      for (size_t v = 0; v < nv; ++v) {
        CHECK(*scores[v].short_term >= previous[v]);
        previous[v] = *scores[v].short_term;
      }
    }
  }
}

TEST_CASE("cf scores are invariant under id relabeling") {
  Xoshiro256 rng(31);
  ReactionMatrix m;
  for (int u = 0; u < 6; ++u) m.users.push_back("user" + std::to_string(u));
  for (int v = 0; v < 9; ++v) m.videos.push_back("vid" + std::to_string(v));
  for (size_t u = 0; u < 6; ++u)
    for (size_t v = 0; v < 9; ++v)
      if (rng.uniform() < 0.8) m.cells[{u, v}] = rng.uniform(300.0, 1000.0);
  ReactionMatrix renamed = m;
  for (auto& u : renamed.users) u = "X" + u;
  for (auto& v : renamed.videos) v = "Y" + v;
  FactorizationConfig cfg;
  cfg.rank = 2;
  cfg.seed = 17;
  auto s1 = cf_short_term_scores(factorize(m, cfg), MissRule{});
  auto s2 = cf_short_term_scores(factorize(renamed, cfg), MissRule{});
  REQUIRE(s1.size() == s2.size());
  for (size_t i = 0; i < s1.size(); ++i) {
    CHECK("Y" + s1[i].video_id == s2[i].video_id);
    CHECK(*s1[i].short_term == *s2[i].short_term);
  }
}

TEST_CASE("scores.csv round trip preserves values and absences") {
  std::vector<MemorabilityScore> scores(3);
  scores[0] = {"v1", 0.8, 0.5, 10, 4};
  scores[1] = {"v2", std::nullopt, 0.25, 0, 8};
  scores[2] = {"v3", 1.0, std::nullopt, 7, 0};
  write_file("/tmp/gf_scores.csv", write_scores(scores));
  auto back = load_scores("/tmp/gf_scores.csv");
  REQUIRE(back.size() == 3);
  CHECK(back[0].short_term == scores[0].short_term);
  CHECK(back[1].short_term == std::nullopt);
  CHECK(back[1].long_term == scores[1].long_term);
  CHECK(back[2].n_short == 7);
  CHECK(back[2].long_term == std::nullopt);
}
