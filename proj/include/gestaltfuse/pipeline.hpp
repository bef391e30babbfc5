// pipeline.hpp

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

// Configuration-driven batch pipeline. One JSON config drives every
// command; flags may override the seed and output directory, and the hash
// of the effective config plus the seed is embedded next to every output
// file as a .meta.json sidecar, so any output can be traced to the exact
// run that produced it. Commands are idempotent: rerunning with the same
// config and inputs rewrites byte-identical outputs.

#ifndef GESTALTFUSE_PIPELINE_HPP_
#define GESTALTFUSE_PIPELINE_HPP_

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gestaltfuse/fusion.hpp"
#include "gestaltfuse/synth.hpp"

namespace gestaltfuse {

class ConfigInvalid : public Error {
 public:
  ConfigInvalid(const std::string& field, const std::string& reason)
      : Error("ConfigInvalid", field + ": " + reason) {}
};

// ---- config ------------------------------------------------------------------

struct GtModes {
  enum class Mode { kCollaborative, kHitRate };
  Mode short_mode = Mode::kCollaborative;
  Mode long_mode = Mode::kHitRate;
};

struct CalibrationSettings {
  bool enabled = false;
  CalibrationGrid grid;
};

struct PipelinePaths {
  std::string annotations;
  std::string captions;      // optional
  std::string audio_tags;    // optional
  std::string audio_dir;     // optional
  std::string predictions_dir;  // optional, informational
  std::string output_dir;
};

struct PipelineConfig {
  std::uint64_t seed = 0;
  PipelinePaths paths;
  DspConfig dsp;
  FactorizationConfig factorization;
  MissRule miss_rule;
  GtModes gt;
  GestaltWeights gestalt_weights;
  std::vector<ScorerSpec> scorers;
  std::vector<RunConfig> runs;
  SplitSpec split_spec;
  CalibrationSettings calibration;
  std::string config_hash;  // fnv1a64 of the effective config json
};

namespace detail {

inline std::string resolve_path(const std::string& base_dir, const std::string& p) {
  if (p.empty()) return p;
  std::filesystem::path path(p);
  if (path.is_absolute()) return p;
  return (std::filesystem::path(base_dir) / path).lexically_normal().string();
}

inline ScorerTarget target_from_name(const std::string& name) {
  if (name == "short_term") return ScorerTarget::term(Term::kShortTerm);
  if (name == "long_term") return ScorerTarget::term(Term::kLongTerm);
  for (Subscore s : {Subscore::kImageability, Subscore::kHcu, Subscore::kArousal,
                     Subscore::kFamiliarity})
    if (name == "gestalt:" + subscore_name(s)) return ScorerTarget::gestalt(s);
  throw ConfigInvalid("scorers.target", "unknown target '" + name + "'");
}

}  // namespace detail

inline nlohmann::json pipeline_config_to_json(const PipelineConfig& cfg) {
  nlohmann::json j;
  j["seed"] = cfg.seed;
  j["paths"] = {{"annotations", cfg.paths.annotations},
                {"captions", cfg.paths.captions},
                {"audio_tags", cfg.paths.audio_tags},
                {"audio_dir", cfg.paths.audio_dir},
                {"predictions_dir", cfg.paths.predictions_dir},
                {"output_dir", cfg.paths.output_dir}};
  j["dsp"] = {{"frame_ms", cfg.dsp.frame_ms},     {"hop_ms", cfg.dsp.hop_ms},
              {"n_mels", cfg.dsp.n_mels},         {"n_mfcc", cfg.dsp.n_mfcc},
              {"fmin_hz", cfg.dsp.fmin_hz},       {"fmax_hz", cfg.dsp.fmax_hz},
              {"log_floor", cfg.dsp.log_floor},   {"delta_window", cfg.dsp.delta_window}};
  j["factorization"] = {{"rank", cfg.factorization.rank},
                        {"regularization", cfg.factorization.regularization},
                        {"iterations", cfg.factorization.iterations},
                        {"convergence_tol", cfg.factorization.convergence_tol}};
  j["miss_rule"] = {{"k_sigma", cfg.miss_rule.k_sigma}, {"statistic_scope", "global"}};
  j["gt"] = {{"short_mode",
              cfg.gt.short_mode == GtModes::Mode::kCollaborative ? "cf" : "hit_rate"},
             {"long_mode",
              cfg.gt.long_mode == GtModes::Mode::kCollaborative ? "cf" : "hit_rate"}};
  j["gestalt_weights"] = {{"w_imageability", cfg.gestalt_weights.w_imageability},
                          {"w_hcu", cfg.gestalt_weights.w_hcu},
                          {"w_arousal", cfg.gestalt_weights.w_arousal},
                          {"w_familiarity", cfg.gestalt_weights.w_familiarity},
                          {"threshold", cfg.gestalt_weights.threshold}};
  j["scorers"] = nlohmann::json::array();
  for (const auto& s : cfg.scorers) {
    nlohmann::json sj;
    sj["scorer_id"] = s.scorer_id;
    sj["kind"] = s.kind == ScorerKind::kFileBacked   ? "file"
                 : s.kind == ScorerKind::kHeuristic ? "heuristic"
                                                     : "remote";
    sj["target"] = s.target.name();
    sj["source"] = s.source;
    if (s.augment_captions) {
      sj["augment_captions"] = true;
      sj["augment_top_k"] = s.augment_top_k;
    }
    if (s.kind == ScorerKind::kRemote) {
      sj["batch_size"] = s.batch_size;
      sj["max_concurrency"] = s.max_concurrency;
    }
    j["scorers"].push_back(std::move(sj));
  }
  j["runs"] = nlohmann::json::array();
  for (const auto& r : cfg.runs) j["runs"].push_back(run_config_to_json(r));
  j["split"] = {{"n_train", cfg.split_spec.n_train}, {"n_test", cfg.split_spec.n_test}};
  j["calibration"] = {{"enabled", cfg.calibration.enabled},
                      {"weight_step", cfg.calibration.grid.weight_step},
                      {"theta_step", cfg.calibration.grid.theta_step}};
  return j;
}

/// Parse a config. Relative paths (including scorer file sources) resolve
/// against the config file's directory. Overrides are applied before the
/// config hash is computed, so the hash always describes the effective run.
inline PipelineConfig pipeline_config_from_json(nlohmann::json j,
                                                const std::string& base_dir,
                                                std::optional<std::uint64_t> seed_override = {},
                                                std::optional<std::string> out_override = {}) {
  PipelineConfig cfg;
  try {
    if (seed_override) j["seed"] = *seed_override;
    if (out_override) j["paths"]["output_dir"] = *out_override;

    cfg.seed = j.value("seed", 0ull);
    const auto& paths = j.at("paths");
    cfg.paths.annotations =
        detail::resolve_path(base_dir, paths.value("annotations", ""));
    cfg.paths.captions = detail::resolve_path(base_dir, paths.value("captions", ""));
    cfg.paths.audio_tags =
        detail::resolve_path(base_dir, paths.value("audio_tags", ""));
    cfg.paths.audio_dir = detail::resolve_path(base_dir, paths.value("audio_dir", ""));
    cfg.paths.predictions_dir =
        detail::resolve_path(base_dir, paths.value("predictions_dir", ""));
    cfg.paths.output_dir =
        detail::resolve_path(base_dir, paths.value("output_dir", "out"));

    if (j.contains("dsp")) {
      const auto& d = j["dsp"];
      cfg.dsp.frame_ms = d.value("frame_ms", cfg.dsp.frame_ms);
      cfg.dsp.hop_ms = d.value("hop_ms", cfg.dsp.hop_ms);
      cfg.dsp.n_mels = d.value("n_mels", cfg.dsp.n_mels);
      cfg.dsp.n_mfcc = d.value("n_mfcc", cfg.dsp.n_mfcc);
      cfg.dsp.fmin_hz = d.value("fmin_hz", cfg.dsp.fmin_hz);
      cfg.dsp.fmax_hz = d.value("fmax_hz", cfg.dsp.fmax_hz);
      cfg.dsp.log_floor = d.value("log_floor", cfg.dsp.log_floor);
      cfg.dsp.delta_window = d.value("delta_window", cfg.dsp.delta_window);
    }
    if (j.contains("factorization")) {
      const auto& f = j["factorization"];
      cfg.factorization.rank = f.value("rank", cfg.factorization.rank);
      cfg.factorization.regularization =
          f.value("regularization", cfg.factorization.regularization);
      cfg.factorization.iterations = f.value("iterations", cfg.factorization.iterations);
      cfg.factorization.convergence_tol =
          f.value("convergence_tol", cfg.factorization.convergence_tol);
    }
    cfg.factorization.seed = derive_seed(cfg.seed, "factorization");
    if (j.contains("miss_rule"))
      cfg.miss_rule.k_sigma = j["miss_rule"].value("k_sigma", cfg.miss_rule.k_sigma);
    if (j.contains("gt")) {
      auto parse_mode = [](const std::string& m, const char* field) {
        if (m == "cf") return GtModes::Mode::kCollaborative;
        if (m == "hit_rate") return GtModes::Mode::kHitRate;
        throw ConfigInvalid(field, "must be cf|hit_rate");
      };
      cfg.gt.short_mode =
          parse_mode(j["gt"].value("short_mode", "cf"), "gt.short_mode");
      cfg.gt.long_mode =
          parse_mode(j["gt"].value("long_mode", "hit_rate"), "gt.long_mode");
    }
    if (j.contains("gestalt_weights")) {
      const auto& g = j["gestalt_weights"];
      cfg.gestalt_weights.w_imageability =
          g.value("w_imageability", cfg.gestalt_weights.w_imageability);
      cfg.gestalt_weights.w_hcu = g.value("w_hcu", cfg.gestalt_weights.w_hcu);
      cfg.gestalt_weights.w_arousal =
          g.value("w_arousal", cfg.gestalt_weights.w_arousal);
      cfg.gestalt_weights.w_familiarity =
          g.value("w_familiarity", cfg.gestalt_weights.w_familiarity);
      cfg.gestalt_weights.threshold =
          g.value("threshold", cfg.gestalt_weights.threshold);
      cfg.gestalt_weights.validate();
    }
    for (const auto& sj : j.value("scorers", nlohmann::json::array())) {
      ScorerSpec s;
      s.scorer_id = sj.at("scorer_id").get<std::string>();
      std::string kind = sj.at("kind").get<std::string>();
      if (kind == "file") s.kind = ScorerKind::kFileBacked;
      else if (kind == "heuristic") s.kind = ScorerKind::kHeuristic;
      else if (kind == "remote") s.kind = ScorerKind::kRemote;
      else throw ConfigInvalid("scorers.kind", "unknown kind '" + kind + "'");
      s.target = detail::target_from_name(sj.at("target").get<std::string>());
      s.source = sj.value("source", "");
      if (s.kind == ScorerKind::kFileBacked)
        s.source = detail::resolve_path(base_dir, s.source);
      s.augment_captions = sj.value("augment_captions", false);
      s.augment_top_k = sj.value("augment_top_k", s.augment_top_k);
      s.batch_size = sj.value("batch_size", s.batch_size);
      s.max_concurrency = sj.value("max_concurrency", s.max_concurrency);
      cfg.scorers.push_back(std::move(s));
    }
    for (const auto& rj : j.value("runs", nlohmann::json::array()))
      cfg.runs.push_back(run_config_from_json(rj));
    if (j.contains("split")) {
      cfg.split_spec.n_train = j["split"].value("n_train", cfg.split_spec.n_train);
      cfg.split_spec.n_test = j["split"].value("n_test", cfg.split_spec.n_test);
    }
    cfg.split_spec.seed = derive_seed(cfg.seed, "split");
    if (j.contains("calibration")) {
      cfg.calibration.enabled = j["calibration"].value("enabled", false);
      cfg.calibration.grid.weight_step =
          j["calibration"].value("weight_step", cfg.calibration.grid.weight_step);
      cfg.calibration.grid.theta_step =
          j["calibration"].value("theta_step", cfg.calibration.grid.theta_step);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigInvalid("config", e.what());
  }

  // cross-field validation
  std::set<std::string> scorer_ids;
  for (const auto& s : cfg.scorers)
    if (!scorer_ids.insert(s.scorer_id).second)
      throw ConfigInvalid("scorers", "duplicate scorer_id " + s.scorer_id);
  std::set<std::pair<RunId, Term>> run_keys;
  for (const auto& r : cfg.runs) {
    if (!run_keys.insert({r.run_id, r.target}).second)
      throw ConfigInvalid("runs", "duplicate run " + run_id_name(r.run_id) + "/" +
                                      term_name(r.target));
    for (const auto* p : {&r.with_audio, &r.without_audio}) {
      if (!p->has_value()) continue;
      for (const auto& m : (*p)->members)
        if (!scorer_ids.count(m.scorer_id))
          throw ConfigInvalid("runs", "member " + m.scorer_id +
                                          " is not a declared scorer");
    }
  }
  if (cfg.paths.annotations.empty())
    throw ConfigInvalid("paths.annotations", "required");
  auto must_exist = [](const std::string& p, const std::string& field) {
    if (!p.empty() && !std::filesystem::exists(p))
      throw ConfigInvalid(field, "path does not exist: " + p);
  };
  must_exist(cfg.paths.annotations, "paths.annotations");
  must_exist(cfg.paths.captions, "paths.captions");
  must_exist(cfg.paths.audio_tags, "paths.audio_tags");
  must_exist(cfg.paths.audio_dir, "paths.audio_dir");
  must_exist(cfg.paths.predictions_dir, "paths.predictions_dir");
  for (const auto& s : cfg.scorers)
    if (s.kind == ScorerKind::kFileBacked)
      must_exist(s.source, "scorers[" + s.scorer_id + "].source");

  // The hash identifies the logical run: everything but where outputs land,
  // so the same pipeline into two directories writes identical trees.
  auto hashed = pipeline_config_to_json(cfg);
  hashed["paths"]["output_dir"] = "";
  cfg.config_hash = to_hex(fnv1a64(hashed.dump()));
  return cfg;
}

inline PipelineConfig load_pipeline_config(const std::string& path,
                                           std::optional<std::uint64_t> seed_override = {},
                                           std::optional<std::string> out_override = {}) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigInvalid(path, e.what());
  }
  return pipeline_config_from_json(
      std::move(j), std::filesystem::path(path).parent_path().string(),
      seed_override, out_override);
}

// ---- sidecars -----------------------------------------------------------------

/// <output>.meta.json with the config hash and seed that produced it. No
/// timestamps: reruns must be byte-identical.
inline void write_sidecar(const std::string& output_path, const PipelineConfig& cfg,
                          const std::string& command) {
  nlohmann::json meta = {{"tool", "gestaltfuse"},
                         {"version", kVersion},
                         {"command", command},
                         {"config_hash", cfg.config_hash},
                         {"seed", cfg.seed}};
  write_file(output_path + ".meta.json", meta.dump(2) + "\n");
}

// ---- commands -----------------------------------------------------------------

namespace detail {

inline std::string out_path(const PipelineConfig& cfg, const std::string& name) {
  std::filesystem::create_directories(cfg.paths.output_dir);
  return (std::filesystem::path(cfg.paths.output_dir) / name).string();
}

inline std::string run_file_stem(const RunConfig& r) {
  return run_id_name(r.run_id) + "_" + term_name(r.target);
}

/// Ids of videos carrying a ground-truth score at `term`.
inline std::vector<std::string> scored_ids(const std::vector<MemorabilityScore>& scores,
                                           Term term) {
  std::vector<std::string> out;
  for (const auto& s : scores)
    if ((term == Term::kShortTerm && s.short_term) ||
        (term == Term::kLongTerm && s.long_term))
      out.push_back(s.video_id);
  return out;
}

inline std::vector<std::string> all_scored_ids(
    const std::vector<MemorabilityScore>& scores) {
  std::vector<std::string> out;
  for (const auto& s : scores)
    if (s.short_term || s.long_term) out.push_back(s.video_id);
  return out;
}

/// Artifacts (caption, tags, audio path) for the given videos, honoring the
/// optional caption augmentation for one scorer.
inline ArtifactMap build_artifacts(const PipelineConfig& cfg,
                                   const std::vector<std::string>& videos,
                                   bool augment_captions = false,
                                   size_t augment_top_k = 3) {
  CaptionSet captions;
  if (!cfg.paths.captions.empty()) captions = load_captions(cfg.paths.captions);
  AudioTagSet tags;
  if (!cfg.paths.audio_tags.empty()) tags = load_audio_tags(cfg.paths.audio_tags);
  ArtifactMap map;
  for (const auto& id : videos) {
    VideoArtifacts a;
    auto c = captions.find(id);
    auto t = tags.find(id);
    if (t != tags.end()) a.tags = t->second;
    if (c != captions.end()) {
      a.caption = (augment_captions && t != tags.end())
                      ? augment_caption(c->second, t->second, augment_top_k)
                      : c->second;
    }
    if (!cfg.paths.audio_dir.empty()) {
      auto wav = std::filesystem::path(cfg.paths.audio_dir) / (id + ".wav");
      if (std::filesystem::exists(wav)) a.audio_path = wav.string();
    }
    map[id] = std::move(a);
  }
  return map;
}

inline const ScorerSpec& find_scorer(const PipelineConfig& cfg, const std::string& id) {
  for (const auto& s : cfg.scorers)
    if (s.scorer_id == id) return s;
  throw ConfigInvalid("scorers", "no scorer named " + id);
}

/// Evaluate every member scorer a run needs, keyed by scorer id.
inline std::map<std::string, ScoreVector> member_predictions(
    const PipelineConfig& cfg, const RunConfig& run,
    const std::vector<std::string>& videos) {
  std::map<std::string, ScoreVector> out;
  for (const auto* p : {&run.with_audio, &run.without_audio}) {
    if (!p->has_value()) continue;
    for (const auto& m : (*p)->members) {
      if (out.count(m.scorer_id)) continue;
      const auto& spec = find_scorer(cfg, m.scorer_id);
      ArtifactMap artifacts;
      if (spec.kind != ScorerKind::kFileBacked)
        artifacts =
            build_artifacts(cfg, videos, spec.augment_captions, spec.augment_top_k);
      out[m.scorer_id] = evaluate_scorer(spec, videos, artifacts);
    }
  }
  return out;
}

inline std::map<std::string, GestaltScore> gestalt_by_video(
    const std::vector<GestaltScore>& scores) {
  std::map<std::string, GestaltScore> out;
  for (const auto& g : scores) out[g.video_id] = g;
  return out;
}

/// The calibrated run config file, when cmd_calibrate has produced one;
/// otherwise the configured run.
inline RunConfig effective_run(const PipelineConfig& cfg, const RunConfig& run) {
  auto path = std::filesystem::path(cfg.paths.output_dir) /
              ("run_config_" + run_file_stem(run) + ".json");
  if (std::filesystem::exists(path)) {
    auto loaded = run_config_from_json(nlohmann::json::parse(read_file(path.string())));
    if (loaded.run_id == run.run_id && loaded.target == run.target) {
      log_info("using calibrated run config " + path.string());
      return loaded;
    }
  }
  return run;
}

}  // namespace detail

/// Ground-truth scores: short-term from collaborative-filtering
/// regeneration (or direct hit rate, per config), long-term from hit rate.
/// Writes scores.csv.
inline std::string cmd_score_gt(const PipelineConfig& cfg) {
  auto log = parse_annotations(cfg.paths.annotations);
  auto hits = hit_rate_scores(log);

  std::map<std::string, MemorabilityScore> merged;
  for (const auto& s : hits) merged[s.video_id] = s;  // carries both hit rates

  if (cfg.gt.short_mode == GtModes::Mode::kCollaborative) {
    auto matrix = build_rt_matrix(log);
    auto done = factorize(matrix, cfg.factorization);
    for (const auto& w : done.warnings) log_warn(w);
    for (const auto& s : cf_short_term_scores(done, cfg.miss_rule)) {
      auto& m = merged[s.video_id];
      m.video_id = s.video_id;
      m.short_term = s.short_term;
      m.n_short = s.n_short;
    }
  }
  if (cfg.gt.long_mode == GtModes::Mode::kCollaborative)
    throw ConfigInvalid("gt.long_mode",
                        "collaborative regeneration is short-term only");

  std::vector<MemorabilityScore> scores;
  for (auto& [id, s] : merged) scores.push_back(s);
  auto path = detail::out_path(cfg, "scores.csv");
  write_file(path, write_scores(scores));
  write_sidecar(path, cfg, "score-gt");
  return path;
}

/// MFCC feature images for every .wav in audio_dir: three .npy channels and
/// one JSON sidecar per clip, recording the DSP config and per-row
/// normalization parameters.
inline std::vector<std::string> cmd_extract_audio(const PipelineConfig& cfg) {
  if (cfg.paths.audio_dir.empty())
    throw ConfigInvalid("paths.audio_dir", "required for extract-audio");
  std::vector<std::string> wavs;
  for (const auto& entry : std::filesystem::directory_iterator(cfg.paths.audio_dir))
    if (entry.path().extension() == ".wav") wavs.push_back(entry.path().string());
  std::sort(wavs.begin(), wavs.end());
  if (wavs.empty())
    throw ConfigInvalid("paths.audio_dir", "no .wav files in " + cfg.paths.audio_dir);

  std::filesystem::path feat_dir =
      std::filesystem::path(cfg.paths.output_dir) / "features";
  std::filesystem::create_directories(feat_dir);

  std::vector<std::string> outputs;
  for (const auto& wav : wavs) {
    auto clip = read_wav(wav);
    auto img = feature_image(clip, cfg.dsp);
    std::string stem = std::filesystem::path(wav).stem().string();
    nlohmann::json meta;
    meta["video_id"] = stem;
    meta["sample_rate_hz"] = clip.sample_rate_hz;
    meta["config_hash"] = cfg.config_hash;
    meta["seed"] = cfg.seed;
    meta["dsp"] = {{"frame_ms", cfg.dsp.frame_ms},   {"hop_ms", cfg.dsp.hop_ms},
                   {"n_mels", cfg.dsp.n_mels},       {"n_mfcc", cfg.dsp.n_mfcc},
                   {"fmin_hz", cfg.dsp.fmin_hz},     {"fmax_hz", cfg.dsp.fmax_hz},
                   {"log_floor", cfg.dsp.log_floor}, {"delta_window", cfg.dsp.delta_window}};
    meta["shape"] = {img.channels[0].rows(), img.channels[0].cols()};
    for (int c = 0; c < 3; ++c) {
      std::string name = stem + ".c" + std::to_string(c) + ".npy";
      write_npy_f32((feat_dir / name).string(), img.channels[c]);
      outputs.push_back((feat_dir / name).string());
      nlohmann::json rows = nlohmann::json::array();
      for (const auto& n : img.normalization[c])
        rows.push_back({{"min", n.min}, {"max", n.max}});
      meta["normalization"]["c" + std::to_string(c)] = rows;
    }
    auto meta_path = (feat_dir / (stem + ".features.json")).string();
    write_file(meta_path, meta.dump(2) + "\n");
    outputs.push_back(meta_path);
  }
  return outputs;
}

/// Combine the four configured sub-score sources into gestalt.csv for every
/// ground-truth video.
inline std::string cmd_gestalt(const PipelineConfig& cfg) {
  auto scores_path = detail::out_path(cfg, "scores.csv");
  if (!std::filesystem::exists(scores_path))
    throw ConfigInvalid("gestalt", "scores.csv not found; run score-gt first");
  auto gt = load_scores(scores_path);
  auto videos = detail::all_scored_ids(gt);

  const ScorerSpec* sub_specs[4] = {nullptr, nullptr, nullptr, nullptr};
  for (const auto& s : cfg.scorers)
    if (s.target.kind == ScorerTarget::Kind::kSubscore)
      sub_specs[static_cast<int>(s.target.subscore)] = &s;
  for (Subscore sub : {Subscore::kImageability, Subscore::kHcu, Subscore::kArousal,
                       Subscore::kFamiliarity})
    if (!sub_specs[static_cast<int>(sub)])
      throw ConfigInvalid("scorers",
                          "no scorer for sub-score " + subscore_name(sub));

  ScoreVector vectors[4];
  for (int i = 0; i < 4; ++i) {
    ArtifactMap artifacts;
    if (sub_specs[i]->kind != ScorerKind::kFileBacked)
      artifacts = detail::build_artifacts(cfg, videos, sub_specs[i]->augment_captions,
                                          sub_specs[i]->augment_top_k);
    vectors[i] = evaluate_scorer(*sub_specs[i], videos, artifacts);
  }

  std::vector<GestaltScore> out;
  for (const auto& id : videos) {
    GestaltSubscores subs;
    subs.imageability = vectors[static_cast<int>(Subscore::kImageability)].values.at(id);
    subs.hcu = vectors[static_cast<int>(Subscore::kHcu)].values.at(id);
    subs.arousal = vectors[static_cast<int>(Subscore::kArousal)].values.at(id);
    subs.familiarity = vectors[static_cast<int>(Subscore::kFamiliarity)].values.at(id);
    out.push_back(make_gestalt_score(id, subs, cfg.gestalt_weights));
  }
  auto path = detail::out_path(cfg, "gestalt.csv");
  write_file(path, write_gestalt_csv(out));
  write_sidecar(path, cfg, "gestalt");
  return path;
}

/// Calibrate the selected runs (all, when selector is empty) on the
/// training split and write run_config_<run>_<term>.json files that
/// cmd_fuse will pick up.
inline std::vector<std::string> cmd_calibrate(const PipelineConfig& cfg,
                                              const std::string& selector = "") {
  auto gt = load_scores(detail::out_path(cfg, "scores.csv"));
  auto [train, test] = split(detail::all_scored_ids(gt), cfg.split_spec);
  (void)test;

  std::map<std::string, GestaltScore> gestalt;
  auto gestalt_path = detail::out_path(cfg, "gestalt.csv");
  if (std::filesystem::exists(gestalt_path))
    gestalt = detail::gestalt_by_video(load_gestalt_csv(gestalt_path));

  std::set<std::string> train_set(train.begin(), train.end());
  std::vector<std::string> written;
  for (const auto& run : cfg.runs) {
    if (!selector.empty() && run_id_name(run.run_id) != selector) continue;
    std::vector<std::string> usable;
    for (const auto& id : detail::scored_ids(gt, run.target))
      if (train_set.count(id)) usable.push_back(id);
    auto preds = detail::member_predictions(cfg, run, usable);
    auto best = calibrate(run, usable, gestalt, preds, gt, cfg.calibration.grid);
    auto path = detail::out_path(cfg, "run_config_" + detail::run_file_stem(run) + ".json");
    write_file(path, run_config_to_json(best).dump(2) + "\n");
    write_sidecar(path, cfg, "calibrate");
    written.push_back(path);
  }
  if (written.empty())
    throw ConfigInvalid("calibrate", "no run matches selector '" + selector + "'");
  return written;
}

/// Fuse the selected runs (all, when selector is empty) over every video
/// with ground truth at the run's target, and write one predictions file
/// per run in the predictions.csv schema.
inline std::vector<std::string> cmd_fuse(const PipelineConfig& cfg,
                                         const std::string& selector = "") {
  auto gt = load_scores(detail::out_path(cfg, "scores.csv"));
  std::map<std::string, GestaltScore> gestalt;
  auto gestalt_path = detail::out_path(cfg, "gestalt.csv");
  if (std::filesystem::exists(gestalt_path))
    gestalt = detail::gestalt_by_video(load_gestalt_csv(gestalt_path));

  std::vector<std::string> written;
  for (const auto& run_cfg : cfg.runs) {
    if (!selector.empty() && run_id_name(run_cfg.run_id) != selector) continue;
    auto run = detail::effective_run(cfg, run_cfg);
    auto videos = detail::scored_ids(gt, run.target);
    auto preds = detail::member_predictions(cfg, run, videos);
    auto fused = run_predict(run, videos, gestalt, preds);
    auto path = detail::out_path(
        cfg, "predictions_" + detail::run_file_stem(run) + ".csv");
    write_file(path, write_predictions(fused.scores));
    write_sidecar(path, cfg, "fuse");
    written.push_back(path);
  }
  if (written.empty())
    throw ConfigInvalid("fuse", "no run matches selector '" + selector + "'");
  return written;
}

struct EvaluateOutputs {
  std::string results_csv;
  std::string report_md;
  std::vector<EvalResult> results;
};

/// Evaluate every run's fused predictions on the held-out test split and
/// emit results.csv plus the Markdown report.
inline EvaluateOutputs cmd_evaluate(const PipelineConfig& cfg) {
  auto gt = load_scores(detail::out_path(cfg, "scores.csv"));
  auto [train, test] = split(detail::all_scored_ids(gt), cfg.split_spec);
  (void)train;
  std::set<std::string> test_set(test.begin(), test.end());

  std::vector<EvalResult> results;
  for (const auto& run : cfg.runs) {
    auto path = detail::out_path(
        cfg, "predictions_" + detail::run_file_stem(run) + ".csv");
    auto fused = load_predictions(path, run_id_name(run.run_id), run.target);
    PredictionSet on_test;
    on_test.model_id = fused.model_id;
    on_test.target = fused.target;
    for (const auto& [id, score] : fused.scores)
      if (test_set.count(id)) on_test.scores[id] = score;
    results.push_back(evaluate(on_test, gt, run.target));
  }

  // canonical table order: run1..run4, then the frame-only reference row
  std::stable_sort(results.begin(), results.end(),
                   [](const EvalResult& a, const EvalResult& b) {
                     auto key = [](const std::string& id) {
                       return parse_run_id(id) == RunId::kRun0FrameOnly
                                  ? 99
                                  : static_cast<int>(parse_run_id(id));
                     };
                     return key(a.run_id) < key(b.run_id);
                   });

  EvaluateOutputs out;
  out.results = results;
  out.results_csv = detail::out_path(cfg, "results.csv");
  write_file(out.results_csv, results_csv(results));
  write_sidecar(out.results_csv, cfg, "evaluate");
  out.report_md = detail::out_path(cfg, "report.md");
  write_file(out.report_md, report(results, ReportFormat::kMarkdown));
  write_sidecar(out.report_md, cfg, "evaluate");
  return out;
}

/// All stages in dependency order: score-gt, extract-audio (when an audio
/// directory is configured), gestalt, calibrate (when enabled), fuse,
/// evaluate.
inline EvaluateOutputs cmd_pipeline(const PipelineConfig& cfg) {
  cmd_score_gt(cfg);
  if (!cfg.paths.audio_dir.empty()) cmd_extract_audio(cfg);
  bool has_run4 = false;
  for (const auto& r : cfg.runs)
    if (r.run_id == RunId::kRun4Gestalt) has_run4 = true;
  int subscore_sources = 0;
  for (const auto& s : cfg.scorers)
    if (s.target.kind == ScorerTarget::Kind::kSubscore) ++subscore_sources;
  if (has_run4 || subscore_sources == 4) cmd_gestalt(cfg);
  if (cfg.calibration.enabled) cmd_calibrate(cfg);
  cmd_fuse(cfg);
  return cmd_evaluate(cfg);
}

// ---- synth command -------------------------------------------------------------

/// Generate a full synthetic dataset plus a ready-to-run pipeline config.
/// Optionally emits one small WAV per video whose loudness tracks the
/// latent gestalt level, so the audio stages have something real to chew
/// on.
inline std::string cmd_synth(const std::string& dir, const FixtureSpec& fx,
                             bool emit_audio = true) {
  auto files = write_fixture(dir, fx);

  if (emit_audio) {
    namespace fs = std::filesystem;
    fs::create_directories(dir + "/audio");
    Xoshiro256 rng(derive_seed(fx.synth.seed, "audio"));
    auto level_file = load_predictions(files.gestalt_subscores.at("arousal"),
                                       "arousal", Term::kShortTerm);
    for (const auto& [video_id, level] : level_file.scores) {
      const int rate = 16000;
      const double freq = 200.0 + 600.0 * level;
      const double amp = std::min(0.95, level * 0.3 * std::sqrt(2.0));
      std::vector<double> samples(rate / 2);
      for (size_t i = 0; i < samples.size(); ++i)
        samples[i] = amp * std::sin(2.0 * M_PI * freq * i / rate);
      write_wav(dir + "/audio/" + video_id + ".wav", {samples}, rate);
    }
  }

  // the generated config references everything by relative path
  PipelineConfig cfg;
  cfg.seed = fx.synth.seed;
  cfg.paths.annotations = "annotations.csv";
  cfg.paths.captions = "captions.csv";
  cfg.paths.audio_tags = "audio_tags.csv";
  cfg.paths.audio_dir = emit_audio ? "audio" : "";
  cfg.paths.predictions_dir = "predictions";
  cfg.paths.output_dir = "out";
  cfg.factorization.rank = 1;  // bias-dominant completion; see gt docs
  cfg.split_spec.n_train = fx.synth.n_videos * 6 / 10;
  cfg.split_spec.n_test = fx.synth.n_videos - cfg.split_spec.n_train;
  cfg.calibration.enabled = true;

  for (const auto& model : fixture_model_names()) {
    for (const char* term : {"short", "long"}) {
      if (std::string(term) == "long" && !fx.synth.emit_long_lag) continue;
      ScorerSpec s;
      s.scorer_id = model + std::string("_") + term;
      s.kind = ScorerKind::kFileBacked;
      s.target = ScorerTarget::term(std::string(term) == "short" ? Term::kShortTerm
                                                                 : Term::kLongTerm);
      s.source = "predictions/" + s.scorer_id + ".csv";
      cfg.scorers.push_back(std::move(s));
    }
  }
  for (Subscore sub : {Subscore::kImageability, Subscore::kHcu, Subscore::kArousal,
                       Subscore::kFamiliarity}) {
    ScorerSpec s;
    s.scorer_id = subscore_name(sub);
    s.kind = ScorerKind::kFileBacked;
    s.target = ScorerTarget::gestalt(sub);
    s.source = "gestalt/" + subscore_name(sub) + ".csv";
    cfg.scorers.push_back(std::move(s));
  }

  auto member = [](const std::string& id, double w) { return PathwayMember{id, w}; };
  auto add_run = [&](RunId id, Term t) {
    const char* suffix = (t == Term::kShortTerm) ? "_short" : "_long";
    RunConfig r;
    r.run_id = id;
    r.target = t;
    PathwayConfig with_audio{{member("aug_caption" + std::string(suffix), 1.0 / 3),
                              member("frame" + std::string(suffix), 1.0 / 3),
                              member("spectrogram" + std::string(suffix), 1.0 / 3)}};
    PathwayConfig audio_only{{member("aug_caption" + std::string(suffix), 0.5),
                              member("spectrogram" + std::string(suffix), 0.5)}};
    PathwayConfig no_audio{{member("caption" + std::string(suffix), 0.5),
                            member("frame" + std::string(suffix), 0.5)}};
    PathwayConfig frame_only{{member("frame" + std::string(suffix), 1.0)}};
    switch (id) {
      case RunId::kRun1AudioOnly: r.with_audio = audio_only; break;
      case RunId::kRun2NoAudio: r.without_audio = no_audio; break;
      case RunId::kRun3Everything: r.with_audio = with_audio; break;
      case RunId::kRun4Gestalt:
        r.with_audio = with_audio;
        r.without_audio = no_audio;
        r.gestalt = GestaltWeights{};
        break;
      case RunId::kRun0FrameOnly: r.without_audio = frame_only; break;
    }
    cfg.runs.push_back(std::move(r));
  };
  for (Term t : {Term::kShortTerm, Term::kLongTerm}) {
    if (t == Term::kLongTerm && !fx.synth.emit_long_lag) continue;
    add_run(RunId::kRun1AudioOnly, t);
    add_run(RunId::kRun2NoAudio, t);
    add_run(RunId::kRun3Everything, t);
    add_run(RunId::kRun4Gestalt, t);
  }
  add_run(RunId::kRun0FrameOnly, Term::kShortTerm);  // reference row, short only

  auto config_path = (std::filesystem::path(dir) / "pipeline_config.json").string();
  write_file(config_path, pipeline_config_to_json(cfg).dump(2) + "\n");

  // trace every emitted table (and the audio directory as a whole) back to
  // the generator parameters
  nlohmann::json params = {{"seed", fx.synth.seed},
                           {"n_users", fx.synth.n_users},
                           {"n_videos", fx.synth.n_videos},
                           {"latent_rank", fx.synth.latent_rank},
                           {"density", fx.synth.density},
                           {"noise_sd_ms", fx.synth.noise_sd_ms},
                           {"response_floor", fx.synth.miss_model.response_floor},
                           {"audio_boost", fx.audio_boost}};
  nlohmann::json meta = {{"tool", "gestaltfuse"},
                         {"version", kVersion},
                         {"command", "synth"},
                         {"config_hash", to_hex(fnv1a64(params.dump()))},
                         {"seed", fx.synth.seed},
                         {"params", params}};
  std::vector<std::string> traced = {files.annotations, files.latent_scores,
                                     files.captions, files.audio_tags, config_path};
  for (const auto& [name, path] : files.gestalt_subscores) traced.push_back(path);
  for (const auto& [name, path] : files.predictions) traced.push_back(path);
  if (emit_audio) traced.push_back(dir + "/audio");
  for (const auto& path : traced)
    write_file(path + ".meta.json", meta.dump(2) + "\n");
  return config_path;
}

}  // namespace gestaltfuse

#endif  // GESTALTFUSE_PIPELINE_HPP_
