// fusion.hpp

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

// Weighted late fusion. A pathway is a convex combination of member scorer
// predictions; a run is either a single fixed pathway (runs 0-3) or the
// gestalt-conditional pair (run 4), where each video uses exactly one
// pathway, never a blend. Calibration is an exhaustive grid search over the
// member-weight simplex and the gestalt threshold, maximizing Spearman on a
// validation set, with a deterministic lexicographic tie-break.

#ifndef GESTALTFUSE_FUSION_HPP_
#define GESTALTFUSE_FUSION_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gestaltfuse/eval.hpp"
#include "gestaltfuse/gestalt.hpp"

namespace gestaltfuse {

class MissingPrediction : public Error {
 public:
  MissingPrediction(const std::string& scorer_id, const std::string& video_id)
      : Error("MissingPrediction", scorer_id + " has no prediction for " + video_id) {}
};

class MissingGestalt : public Error {
 public:
  explicit MissingGestalt(const std::string& video_id)
      : Error("MissingGestalt", video_id) {}
};

class DegenerateValidation : public Error {
 public:
  explicit DegenerateValidation(size_t n)
      : Error("DegenerateValidation",
              "need at least 3 validation videos, got " + std::to_string(n)) {}
};

// ---- configs -----------------------------------------------------------------

struct PathwayMember {
  std::string scorer_id;
  double weight = 0.0;
};

/// Non-empty member list; weights non-negative and summing to 1 (within
/// 1e-9).
struct PathwayConfig {
  std::vector<PathwayMember> members;

  void validate() const {
    if (members.empty()) throw Error("ConfigInvalid", "pathway has no members");
    double sum = 0.0;
    std::set<std::string> ids;
    for (const auto& m : members) {
      if (m.weight < 0.0)
        throw Error("ConfigInvalid", "negative fusion weight for " + m.scorer_id);
      if (!ids.insert(m.scorer_id).second)
        throw Error("ConfigInvalid", "duplicate member " + m.scorer_id);
      sum += m.weight;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw Error("ConfigInvalid",
                  "pathway weights sum to " + format_double(sum) + ", expected 1");
  }
};

enum class RunId {
  kRun1AudioOnly,
  kRun2NoAudio,
  kRun3Everything,
  kRun4Gestalt,
  kRun0FrameOnly,
};

inline std::string run_id_name(RunId id) {
  switch (id) {
    case RunId::kRun1AudioOnly: return "run1_audio_only";
    case RunId::kRun2NoAudio: return "run2_no_audio";
    case RunId::kRun3Everything: return "run3_everything";
    case RunId::kRun4Gestalt: return "run4_gestalt";
    case RunId::kRun0FrameOnly: return "run0_frame_only";
  }
  return "?";
}

inline RunId parse_run_id(const std::string& s) {
  for (RunId id : {RunId::kRun1AudioOnly, RunId::kRun2NoAudio, RunId::kRun3Everything,
                   RunId::kRun4Gestalt, RunId::kRun0FrameOnly})
    if (run_id_name(id) == s) return id;
  throw Error("ConfigInvalid", "unknown run_id '" + s + "'");
}

/// Runs 1 and 3 fuse their with_audio pathway for every video; runs 0 and 2
/// their without_audio pathway; run 4 routes per video by the gestalt
/// combined score against its own threshold.
struct RunConfig {
  RunId run_id = RunId::kRun3Everything;
  Term target = Term::kShortTerm;
  std::optional<PathwayConfig> with_audio;
  std::optional<PathwayConfig> without_audio;
  std::optional<GestaltWeights> gestalt;  // run 4 only

  bool uses_with_audio() const {
    return run_id == RunId::kRun1AudioOnly || run_id == RunId::kRun3Everything ||
           run_id == RunId::kRun4Gestalt;
  }
  bool uses_without_audio() const {
    return run_id == RunId::kRun0FrameOnly || run_id == RunId::kRun2NoAudio ||
           run_id == RunId::kRun4Gestalt;
  }

  void validate() const {
    if (uses_with_audio()) {
      if (!with_audio)
        throw Error("ConfigInvalid", run_id_name(run_id) + " needs a with_audio pathway");
      with_audio->validate();
    }
    if (uses_without_audio()) {
      if (!without_audio)
        throw Error("ConfigInvalid",
                    run_id_name(run_id) + " needs a without_audio pathway");
      without_audio->validate();
    }
    if (run_id == RunId::kRun4Gestalt) {
      if (!gestalt)
        throw Error("ConfigInvalid", "run4 needs gestalt weights and a threshold");
      gestalt->validate();
    }
  }
};

// ---- fusion --------------------------------------------------------------------

/// Convex combination of the member predictions for one video. Members are
/// summed in scorer-id order, so the result is bitwise invariant under
/// member permutation.
inline double pathway_fuse(const PathwayConfig& config,
                           const std::map<std::string, ScoreVector>& predictions,
                           const std::string& video_id) {
  std::vector<const PathwayMember*> order;
  order.reserve(config.members.size());
  for (const auto& m : config.members) order.push_back(&m);
  std::sort(order.begin(), order.end(),
            [](const PathwayMember* a, const PathwayMember* b) {
              return a->scorer_id < b->scorer_id;
            });
  double fused = 0.0;
  for (const auto* m : order) {
    auto scorer = predictions.find(m->scorer_id);
    if (scorer == predictions.end()) throw MissingPrediction(m->scorer_id, video_id);
    auto value = scorer->second.values.find(video_id);
    if (value == scorer->second.values.end())
      throw MissingPrediction(m->scorer_id, video_id);
    fused += m->weight * value->second;
  }
  return fused;
}

/// Fuse every requested video. Run 4 recomputes the combined gestalt score
/// from the stored sub-scores with its own weights, then routes: combined >=
/// threshold selects the with_audio fusion, anything else the without_audio
/// fusion. The output always equals exactly one pathway's fusion.
inline PredictionSet run_predict(const RunConfig& run,
                                 const std::vector<std::string>& videos,
                                 const std::map<std::string, GestaltScore>& gestalt,
                                 const std::map<std::string, ScoreVector>& predictions) {
  run.validate();
  PredictionSet out;
  out.model_id = run_id_name(run.run_id);
  out.target = run.target;
  for (const auto& id : videos) {
    double fused;
    if (run.run_id == RunId::kRun4Gestalt) {
      auto g = gestalt.find(id);
      if (g == gestalt.end()) throw MissingGestalt(id);
      double combined = gestalt_score(g->second.subscores, *run.gestalt);
      fused = (route(combined, run.gestalt->threshold) == Pathway::kWithAudio)
                  ? pathway_fuse(*run.with_audio, predictions, id)
                  : pathway_fuse(*run.without_audio, predictions, id);
    } else if (run.uses_with_audio()) {
      fused = pathway_fuse(*run.with_audio, predictions, id);
    } else {
      fused = pathway_fuse(*run.without_audio, predictions, id);
    }
    out.scores[id] = fused;
  }
  return out;
}

// ---- calibration ------------------------------------------------------------------

struct CalibrationGrid {
  double weight_step = 0.1;
  double theta_step = 0.05;
};

namespace detail {

/// All non-negative integer compositions of `steps` into `parts`, in
/// lexicographic order, as weight vectors i/steps.
inline std::vector<std::vector<double>> simplex_grid(size_t parts, int steps) {
  std::vector<std::vector<double>> out;
  std::vector<int> current(parts, 0);
  auto rec = [&](auto&& self, size_t index, int remaining) -> void {
    if (index + 1 == parts) {
      current[index] = remaining;
      std::vector<double> w(parts);
      for (size_t i = 0; i < parts; ++i)
        w[i] = static_cast<double>(current[i]) / static_cast<double>(steps);
      out.push_back(std::move(w));
      return;
    }
    for (int take = 0; take <= remaining; ++take) {
      current[index] = take;
      self(self, index + 1, remaining - take);
    }
  };
  rec(rec, 0, steps);
  return out;
}

inline void apply_weights(PathwayConfig& p, const std::vector<double>& w) {
  for (size_t i = 0; i < p.members.size(); ++i) p.members[i].weight = w[i];
}

}  // namespace detail

/// Exhaustive grid search over member weights (simplex grid) and, for run 4,
/// the gestalt threshold, maximizing Spearman against ground truth on the
/// validation videos. Grid points are enumerated in lexicographic parameter
/// order (with_audio weights, without_audio weights, theta) and only a
/// strictly better score replaces the incumbent, so ties resolve to the
/// lexicographically smallest parameter vector. Grid points whose fused
/// output is constant (undefined Spearman) are skipped.
inline RunConfig calibrate(const RunConfig& run,
                           const std::vector<std::string>& validation_videos,
                           const std::map<std::string, GestaltScore>& gestalt,
                           const std::map<std::string, ScoreVector>& predictions,
                           const std::vector<MemorabilityScore>& gt,
                           const CalibrationGrid& grid = {}) {
  run.validate();
  if (grid.weight_step <= 0 || grid.weight_step > 1 || grid.theta_step <= 0 ||
      grid.theta_step > 1)
    throw Error("ConfigInvalid", "grid steps must divide [0,1]");

  std::map<std::string, double> gt_map;
  for (const auto& s : gt) {
    const auto& v = (run.target == Term::kShortTerm) ? s.short_term : s.long_term;
    if (v) gt_map[s.video_id] = *v;
  }
  std::vector<std::string> usable;
  for (const auto& id : validation_videos)
    if (gt_map.count(id)) usable.push_back(id);
  if (usable.size() < 3) throw DegenerateValidation(usable.size());
  std::vector<double> y;
  y.reserve(usable.size());
  for (const auto& id : usable) y.push_back(gt_map[id]);

  const int weight_steps = static_cast<int>(std::lround(1.0 / grid.weight_step));
  const bool is_run4 = run.run_id == RunId::kRun4Gestalt;

  auto with_grid = run.uses_with_audio()
                       ? detail::simplex_grid(run.with_audio->members.size(), weight_steps)
                       : std::vector<std::vector<double>>{{}};
  auto without_grid = run.uses_without_audio()
                          ? detail::simplex_grid(run.without_audio->members.size(),
                                                 weight_steps)
                          : std::vector<std::vector<double>>{{}};
  std::vector<double> thetas;
  if (is_run4) {
    const int theta_steps = static_cast<int>(std::lround(1.0 / grid.theta_step));
    for (int i = 0; i <= theta_steps; ++i)
      thetas.push_back(static_cast<double>(i) / theta_steps);
  } else {
    thetas.push_back(0.0);  // unused placeholder
  }

  double best_score = -std::numeric_limits<double>::infinity();
  RunConfig best = run;
  bool any_valid = false;

  RunConfig candidate = run;
  std::vector<double> x(usable.size());
  for (const auto& ww : with_grid) {
    if (run.uses_with_audio()) detail::apply_weights(*candidate.with_audio, ww);
    for (const auto& wo : without_grid) {
      if (run.uses_without_audio())
        detail::apply_weights(*candidate.without_audio, wo);
      for (double theta : thetas) {
        if (is_run4) candidate.gestalt->threshold = theta;
        auto preds = run_predict(candidate, usable, gestalt, predictions);
        for (size_t i = 0; i < usable.size(); ++i) x[i] = preds.scores[usable[i]];
        double score;
        try {
          score = spearman(x, y);
        } catch (const ConstantInput&) {
          continue;
        }
        any_valid = true;
        if (score > best_score) {
          best_score = score;
          best = candidate;
        }
      }
    }
  }
  if (!any_valid)
    throw ConstantInput();  // every grid point was degenerate
  return best;
}

// ---- run_config.json ---------------------------------------------------------------

inline nlohmann::json pathway_to_json(const PathwayConfig& p) {
  nlohmann::json members = nlohmann::json::array();
  for (const auto& m : p.members)
    members.push_back({{"scorer_id", m.scorer_id}, {"weight", m.weight}});
  return {{"members", members}};
}

inline PathwayConfig pathway_from_json(const nlohmann::json& j) {
  PathwayConfig p;
  for (const auto& m : j.at("members"))
    p.members.push_back({m.at("scorer_id").get<std::string>(),
                         m.at("weight").get<double>()});
  return p;
}

inline nlohmann::json run_config_to_json(const RunConfig& run) {
  nlohmann::json j;
  j["run_id"] = run_id_name(run.run_id);
  j["target"] = term_name(run.target);
  if (run.with_audio) j["with_audio"] = pathway_to_json(*run.with_audio);
  if (run.without_audio) j["without_audio"] = pathway_to_json(*run.without_audio);
  if (run.gestalt)
    j["gestalt"] = {{"w_imageability", run.gestalt->w_imageability},
                    {"w_hcu", run.gestalt->w_hcu},
                    {"w_arousal", run.gestalt->w_arousal},
                    {"w_familiarity", run.gestalt->w_familiarity},
                    {"threshold", run.gestalt->threshold}};
  return j;
}

inline RunConfig run_config_from_json(const nlohmann::json& j) {
  RunConfig run;
  run.run_id = parse_run_id(j.at("run_id").get<std::string>());
  std::string target = j.at("target").get<std::string>();
  if (target == "short_term") run.target = Term::kShortTerm;
  else if (target == "long_term") run.target = Term::kLongTerm;
  else throw Error("ConfigInvalid", "unknown target '" + target + "'");
  if (j.contains("with_audio")) run.with_audio = pathway_from_json(j["with_audio"]);
  if (j.contains("without_audio"))
    run.without_audio = pathway_from_json(j["without_audio"]);
  if (j.contains("gestalt")) {
    GestaltWeights g;
    const auto& gj = j["gestalt"];
    g.w_imageability = gj.at("w_imageability").get<double>();
    g.w_hcu = gj.at("w_hcu").get<double>();
    g.w_arousal = gj.at("w_arousal").get<double>();
    g.w_familiarity = gj.at("w_familiarity").get<double>();
    g.threshold = gj.at("threshold").get<double>();
    run.gestalt = g;
  }
  run.validate();
  return run;
}

}  // namespace gestaltfuse

#endif  // GESTALTFUSE_FUSION_HPP_
