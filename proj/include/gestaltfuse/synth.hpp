// synth.hpp

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

// Synthetic memorability-experiment generator. It produces annotation logs
// whose latent per-video memorability is known, so the ground-truth
// regeneration path has a real oracle to be checked against.
//
// Reaction-time surface (per lag, with that lag's latent score m):
//   mean_rt(u, v) = rt_base + rt_spread * (1 - m_v) + user_offset_u + L_uv
// where L is a random rank-`latent_rank` interaction. The user population
// mixes fast responders (small jitter) with a slow subpopulation whose
// offsets are spread evenly across the band that brackets the global
// mean + 2 sd line of the completed matrix; those slow users are what makes
// the outlier-based miss counts vary smoothly across videos instead of
// collapsing to all-or-nothing. Memorability values are stratified over
// [0,1] so every part of the range is covered at any n_videos.

#ifndef GESTALTFUSE_SYNTH_HPP_
#define GESTALTFUSE_SYNTH_HPP_

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "gestaltfuse/gt_scoring.hpp"
#include "gestaltfuse/rng.hpp"

namespace gestaltfuse {

/// Non-detection model: a user fails to signal recognition with probability
/// (1 - m) scaled by the response floor; a failure is usually logged as a
/// non-response, or (with slow_outlier_prob) as a late detection whose
/// reaction time carries an exponential excess, exercising the 2-sigma rule
/// on observed data.
struct MissModel {
  double response_floor = 0.35;  // P(respond) = floor + (1 - floor) * m
  double slow_outlier_prob = 0.0;
  double slow_outlier_excess_ms = 300.0;
};

struct SynthSpec {
  size_t n_users = 50;
  size_t n_videos = 100;
  int latent_rank = 2;
  double rt_base_ms = 600.0;
  double rt_spread_ms = 150.0;
  double noise_sd_ms = 20.0;
  double density = 0.3;  // fraction of (user, video) pairs entering the log
  MissModel miss_model;
  bool emit_long_lag = true;  // also emit long-lag exposures (decayed latent)
  std::uint64_t seed = 0;

  void validate() const {
    if (n_users == 0 || n_videos == 0)
      throw Error("ConfigInvalid", "need at least one user and one video");
    if (latent_rank < 1) throw Error("ConfigInvalid", "latent_rank must be >= 1");
    if (density <= 0.0 || density > 1.0)
      throw Error("ConfigInvalid", "density must be in (0, 1]");
    if (rt_base_ms <= 0 || rt_spread_ms <= 0 || noise_sd_ms < 0)
      throw Error("ConfigInvalid", "reaction-time scales must be positive");
    if (miss_model.response_floor < 0 || miss_model.response_floor > 1 ||
        miss_model.slow_outlier_prob < 0 || miss_model.slow_outlier_prob > 1)
      throw Error("ConfigInvalid", "miss-model probabilities must be in [0, 1]");
  }
};

struct SynthOutput {
  std::vector<MemorabilityScore> latent;  // true scores the log was drawn from
  AnnotationLog log;
};

// Geometry of the slow-responder band, relative to rt_spread. See header
// comment; values chosen so the miss boundary cuts through the video range.
namespace synth_detail {
constexpr double kSlowUserFraction = 0.16;
constexpr double kBandCenterFactor = 1.587;
constexpr double kBandHalfFactor = 0.467;
constexpr double kFastJitterFactor = 0.10;
constexpr double kGridJitterFactor = 0.033;
constexpr double kLatentScaleFactor = 0.033;
constexpr double kLongTermDecayExponent = 1.5;

inline std::string pad_id(const char* prefix, size_t i, size_t n) {
  size_t width = std::to_string(n - 1).size();
  std::string digits = std::to_string(i);
  return prefix + std::string(width - digits.size(), '0') + digits;
}
}  // namespace synth_detail

inline SynthOutput generate(const SynthSpec& spec) {
  spec.validate();
  using namespace synth_detail;
  Xoshiro256 rng(derive_seed(spec.seed, "synth"));

  const size_t n_users = spec.n_users, n_videos = spec.n_videos;

  // Stratified latent memorability, shuffled across video ids.
  std::vector<double> m_short(n_videos);
  for (size_t v = 0; v < n_videos; ++v)
    m_short[v] = (static_cast<double>(v) + rng.uniform()) /
                 static_cast<double>(n_videos);
  rng.shuffle(m_short);
  std::vector<double> m_long(n_videos);
  for (size_t v = 0; v < n_videos; ++v)
    m_long[v] = std::pow(m_short[v], kLongTermDecayExponent);

  // User offsets: fast responders plus the slow band on an even grid.
  std::vector<double> user_off(n_users);
  for (size_t u = 0; u < n_users; ++u)
    user_off[u] = rng.normal(0.0, kFastJitterFactor * spec.rt_spread_ms);
  size_t n_slow = std::max<size_t>(1, static_cast<size_t>(std::lround(
                                          kSlowUserFraction * n_users)));
  n_slow = std::min(n_slow, n_users);
  std::vector<size_t> order(n_users);
  for (size_t u = 0; u < n_users; ++u) order[u] = u;
  rng.shuffle(order);
  const double center = kBandCenterFactor * spec.rt_spread_ms;
  const double half = kBandHalfFactor * spec.rt_spread_ms;
  for (size_t i = 0; i < n_slow; ++i) {
    double frac = (n_slow == 1) ? 0.0
                                : -1.0 + 2.0 * static_cast<double>(i) /
                                             static_cast<double>(n_slow - 1);
    user_off[order[i]] = center + half * frac +
                         rng.normal(0.0, kGridJitterFactor * spec.rt_spread_ms);
  }

  // Rank-k interaction surface.
  const double latent_scale = kLatentScaleFactor * spec.rt_spread_ms;
  std::vector<std::vector<double>> a(n_users, std::vector<double>(spec.latent_rank));
  std::vector<std::vector<double>> b(n_videos, std::vector<double>(spec.latent_rank));
  for (auto& row : a)
    for (auto& x : row) x = rng.normal();
  for (auto& row : b)
    for (auto& x : row) x = rng.normal();

  auto mean_rt = [&](size_t u, size_t v, double m) {
    double latent = 0.0;
    for (int k = 0; k < spec.latent_rank; ++k) latent += a[u][k] * b[v][k];
    return spec.rt_base_ms + spec.rt_spread_ms * (1.0 - m) + user_off[u] +
           latent_scale * latent;
  };

  SynthOutput out;
  for (size_t v = 0; v < n_videos; ++v) {
    MemorabilityScore s;
    s.video_id = pad_id("v", v, n_videos);
    s.short_term = m_short[v];
    s.n_short = n_users;
    if (spec.emit_long_lag) {
      s.long_term = m_long[v];
      s.n_long = n_users;
    }
    out.latent.push_back(std::move(s));
  }

  // Observation pattern first: Bernoulli(density) per pair, then every
  // uncovered video gets one observer (each video was shown to someone).
  std::vector<std::vector<bool>> observed(n_users, std::vector<bool>(n_videos));
  std::vector<size_t> observers(n_videos, 0);
  for (size_t u = 0; u < n_users; ++u)
    for (size_t v = 0; v < n_videos; ++v)
      if (rng.uniform() < spec.density) {
        observed[u][v] = true;
        ++observers[v];
      }
  for (size_t v = 0; v < n_videos; ++v)
    if (observers[v] == 0) observed[rng.below(n_users)][v] = true;

  const auto& mm = spec.miss_model;
  for (size_t u = 0; u < n_users; ++u) {
    const std::string user_id = pad_id("u", u, n_users);
    for (size_t v = 0; v < n_videos; ++v) {
      if (!observed[u][v]) continue;
      const std::string video_id = out.latent[v].video_id;
      for (int lag = 0; lag < (spec.emit_long_lag ? 2 : 1); ++lag) {
        const double m = (lag == 0) ? m_short[v] : m_long[v];
        AnnotationRecord rec;
        rec.user_id = user_id;
        rec.video_id = video_id;
        rec.lag = (lag == 0) ? Term::kShortTerm : Term::kLongTerm;
        rec.is_repeat = true;
        double p_respond = mm.response_floor + (1.0 - mm.response_floor) * m;
        if (rng.uniform() < p_respond) {
          rec.responded = true;
          rec.reaction_time_ms =
              std::max(0.0, mean_rt(u, v, m) + rng.normal(0.0, spec.noise_sd_ms));
        } else if (mm.slow_outlier_prob > 0.0 &&
                   rng.uniform() < mm.slow_outlier_prob) {
          // miss recorded as a late detection instead of a non-response
          rec.responded = true;
          rec.reaction_time_ms = std::max(
              0.0, mean_rt(u, v, m) + rng.exponential(mm.slow_outlier_excess_ms));
        } else {
          rec.responded = false;
        }
        out.log.records.push_back(std::move(rec));
      }
    }
  }

  std::set<std::string> su, sv;
  for (const auto& r : out.log.records) {
    if (su.insert(r.user_id).second) out.log.user_ids.push_back(r.user_id);
    if (sv.insert(r.video_id).second) out.log.video_ids.push_back(r.video_id);
  }
  return out;
}

// ---- pipeline fixture ----------------------------------------------------------
// Beyond the annotation log, end-to-end runs need captions, audio tags,
// gestalt sub-score files, and per-model prediction files. These are
// synthesized around the same latent scores: each pseudo-model predicts
// truth plus Gaussian noise at its own accuracy. With audio_boost set, the
// with-audio models (augmented captions, spectrograms) are accurate only on
// high-gestalt videos and badly degraded elsewhere, which is exactly the
// regime where conditional routing should beat unconditional fusion.

struct FixtureSpec {
  SynthSpec synth;
  double subscore_noise = 0.05;
  double caption_noise = 0.15;
  double frame_noise = 0.20;
  double spectrogram_noise = 0.18;
  double aug_caption_noise = 0.12;
  bool audio_boost = false;
  double boost_noise = 0.03;
  double degraded_noise = 0.45;
};

struct FixtureFiles {
  std::string annotations;
  std::string latent_scores;
  std::string captions;
  std::string audio_tags;
  std::map<std::string, std::string> gestalt_subscores;  // subscore name -> path
  std::map<std::string, std::string> predictions;        // scorer id -> path
};

inline const std::vector<std::string>& fixture_model_names() {
  static const std::vector<std::string> names = {"caption", "frame",
                                                 "spectrogram", "aug_caption"};
  return names;
}

inline FixtureFiles write_fixture(const std::string& dir, const FixtureSpec& fx) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  fs::create_directories(dir + "/gestalt");
  fs::create_directories(dir + "/predictions");

  auto out = generate(fx.synth);
  Xoshiro256 rng(derive_seed(fx.synth.seed, "fixture"));

  FixtureFiles files;
  files.annotations = dir + "/annotations.csv";
  write_file(files.annotations, write_annotations(out.log.records));
  files.latent_scores = dir + "/latent_scores.csv";
  write_file(files.latent_scores, write_scores(out.latent));

  // captions and audio tags
  static const char* kNouns[] = {"dog",  "river", "crowd",  "guitar", "train",
                                 "chef", "storm", "market", "child",  "engine"};
  static const char* kVerbs[] = {"runs", "plays", "crashes", "sings", "waits"};
  static const char* kTags[] = {"Music",  "Speech", "Dog",   "Wind",
                                "Engine", "Crowd",  "Water", "Silence"};
  CaptionSet captions;
  AudioTagSet tags;
  std::vector<double> gestalt_level(out.latent.size());
  for (size_t v = 0; v < out.latent.size(); ++v) {
    const auto& id = out.latent[v].video_id;
    captions[id] = std::string("a ") + kNouns[rng.below(10)] + " " +
                   kVerbs[rng.below(5)] + " near a " + kNouns[rng.below(10)];
    gestalt_level[v] = rng.uniform();
    size_t n_tags = 2 + rng.below(3);
    std::vector<AudioTag> ts;
    for (size_t t = 0; t < n_tags; ++t)
      ts.push_back({kTags[rng.below(8)], rng.uniform(0.05, 0.95)});
    std::stable_sort(ts.begin(), ts.end(), [](const AudioTag& x, const AudioTag& y) {
      return x.confidence > y.confidence;
    });
    tags[id] = std::move(ts);
  }
  files.captions = dir + "/captions.csv";
  write_file(files.captions, write_captions(captions));
  files.audio_tags = dir + "/audio_tags.csv";
  write_file(files.audio_tags, write_audio_tags(tags));

  // gestalt sub-score files: the latent gestalt level plus noise
  for (const char* name : {"imageability", "hcu", "arousal", "familiarity"}) {
    std::map<std::string, double> scores;
    for (size_t v = 0; v < out.latent.size(); ++v)
      scores[out.latent[v].video_id] = std::clamp(
          gestalt_level[v] + rng.normal(0.0, fx.subscore_noise), 0.0, 1.0);
    std::string path = dir + "/gestalt/" + name + ".csv";
    write_file(path, write_predictions(scores));
    files.gestalt_subscores[name] = path;
  }

  // per-model prediction files, both terms
  auto model_noise = [&](const std::string& model, double level) {
    bool with_audio_member = (model == "aug_caption" || model == "spectrogram");
    if (fx.audio_boost && with_audio_member)
      return level >= 0.5 ? fx.boost_noise : fx.degraded_noise;
    if (model == "caption") return fx.caption_noise;
    if (model == "frame") return fx.frame_noise;
    if (model == "spectrogram") return fx.spectrogram_noise;
    return fx.aug_caption_noise;
  };
  for (const auto& model : fixture_model_names()) {
    for (Term term : {Term::kShortTerm, Term::kLongTerm}) {
      if (term == Term::kLongTerm && !fx.synth.emit_long_lag) continue;
      std::map<std::string, double> scores;
      for (size_t v = 0; v < out.latent.size(); ++v) {
        double truth = (term == Term::kShortTerm)
                           ? *out.latent[v].short_term
                           : *out.latent[v].long_term;
        double sd = model_noise(model, gestalt_level[v]);
        scores[out.latent[v].video_id] =
            std::clamp(truth + rng.normal(0.0, sd), 0.0, 1.0);
      }
      std::string scorer_id = model + "_" + (term == Term::kShortTerm ? "short" : "long");
      std::string path = dir + "/predictions/" + scorer_id + ".csv";
      write_file(path, write_predictions(scores));
      files.predictions[scorer_id] = path;
    }
  }
  return files;
}

}  // namespace gestaltfuse

#endif  // GESTALTFUSE_SYNTH_HPP_
