// scorers.hpp

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

// Uniform interface over per-video prediction sources. Trained models never
// live in this codebase; they appear either as prediction files, as cheap
// deterministic heuristics (so the pipeline runs end to end without any
// model), or behind a JSON-over-HTTP endpoint:
//
//   POST {endpoint}/score
//   request  {"scorer_id": s, "target": t, "videos": [{"video_id": id,
//             "caption"?: str, "tags"?: [[tag, conf], ...],
//             "features_uri"?: str}]}
//   reply    {"scores": [{"video_id": id, "score": x}]}
//
// The heuristics are stand-ins, not reproductions of any trained predictor,
// and reports label them as such.

#ifndef GESTALTFUSE_SCORERS_HPP_
#define GESTALTFUSE_SCORERS_HPP_

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <future>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

// audio_dsp.hpp (Eigen) must precede httplib.h: httplib's system includes
// leak a macro that corrupts Eigen's product kernels when seen first.
#include "gestaltfuse/audio_dsp.hpp"
#include "gestaltfuse/data_model.hpp"

#include <httplib.h>
#include <json.hpp>

namespace gestaltfuse {

class MissingVideo : public Error {
 public:
  MissingVideo(const std::string& video_id, const std::string& what_is_missing)
      : Error("MissingVideo", video_id + " (" + what_is_missing + ")") {}
};

class RemoteUnavailable : public Error {
 public:
  RemoteUnavailable(const std::string& endpoint, const std::string& cause)
      : Error("RemoteUnavailable", endpoint + ": " + cause) {}
};

class ProtocolViolation : public Error {
 public:
  explicit ProtocolViolation(const std::string& detail)
      : Error("ProtocolViolation", detail) {}
};

// ---- specs -------------------------------------------------------------------

enum class ScorerKind { kFileBacked, kHeuristic, kRemote };
enum class Subscore { kImageability, kHcu, kArousal, kFamiliarity };

inline std::string subscore_name(Subscore s) {
  switch (s) {
    case Subscore::kImageability: return "imageability";
    case Subscore::kHcu: return "hcu";
    case Subscore::kArousal: return "arousal";
    case Subscore::kFamiliarity: return "familiarity";
  }
  return "?";
}

/// What a scorer predicts: a memorability term or one gestalt sub-score.
struct ScorerTarget {
  enum class Kind { kShortTerm, kLongTerm, kSubscore } kind = Kind::kShortTerm;
  Subscore subscore = Subscore::kImageability;

  static ScorerTarget term(Term t) {
    ScorerTarget out;
    out.kind = (t == Term::kShortTerm) ? Kind::kShortTerm : Kind::kLongTerm;
    return out;
  }
  static ScorerTarget gestalt(Subscore s) {
    ScorerTarget out;
    out.kind = Kind::kSubscore;
    out.subscore = s;
    return out;
  }
  std::string name() const {
    switch (kind) {
      case Kind::kShortTerm: return "short_term";
      case Kind::kLongTerm: return "long_term";
      case Kind::kSubscore: return "gestalt:" + subscore_name(subscore);
    }
    return "?";
  }
};

struct ScorerSpec {
  std::string scorer_id;
  ScorerKind kind = ScorerKind::kFileBacked;
  ScorerTarget target;
  std::string source;  // csv path, audio dir, or endpoint URL, by kind
  // captions handed to this scorer get the top audio tags appended
  bool augment_captions = false;
  size_t augment_top_k = 3;
  // remote tuning
  size_t batch_size = 64;
  int max_concurrency = 1;
  int retry_base_ms = 100;  // transport retries back off base, base*2, base*4
};

enum class Provenance { kLoaded, kComputed, kFetched };

struct ScoreVector {
  std::string scorer_id;
  std::map<std::string, double> values;  // video_id -> [0,1]
  Provenance provenance = Provenance::kLoaded;
};

/// Per-video artifacts a scorer may consume.
struct VideoArtifacts {
  std::optional<std::string> caption;
  std::vector<AudioTag> tags;  // descending confidence; empty = none
  std::optional<std::string> audio_path;
  std::optional<std::string> features_uri;
};

using ArtifactMap = std::map<std::string, VideoArtifacts>;

// ---- caption augmentation -------------------------------------------------------

/// caption + " " + the top_k tag names, lowercased, space-joined, in
/// descending-confidence order. Appending twice duplicates tags: no
/// deduplication is attempted.
inline std::string augment_caption(const std::string& caption,
                                   const std::vector<AudioTag>& tags,
                                   size_t top_k = 3) {
  if (trim(caption).empty()) throw EmptyCaption("(augment_caption input)");
  std::string out = caption;
  size_t n = std::min(top_k, tags.size());
  for (size_t i = 0; i < n; ++i) out += " " + to_lower(tags[i].tag);
  return out;
}

// ---- heuristic sub-scores --------------------------------------------------------

struct HeuristicSubscores {
  double imageability = 0.5;
  double hcu = 0.5;
  double arousal = 0.0;
  double familiarity = 0.5;
  bool tag_defaults_used = false;  // set when no usable tags were available
};

/// Deterministic stand-ins for the four gestalt sub-scores:
///   arousal      - RMS energy mapped linearly from [0, 0.3] onto [0, 1]
///   familiarity  - top audio-tag confidence
///   imageability - confidence mass of tags whose name contains "music",
///                  clamped to 1
///   hcu          - stored as the certainty complement: 1 minus the
///                  normalized Shannon entropy of the tag-confidence
///                  distribution (a single dominant tag means low causal
///                  uncertainty, value 1)
/// With no usable tags the three tag-based scores fall back to 0.5 and the
/// result is flagged.
inline HeuristicSubscores heuristic_subscores(const AudioClip& clip,
                                              const std::vector<AudioTag>& tags) {
  HeuristicSubscores out;
  out.arousal = std::clamp(rms(clip) / 0.3, 0.0, 1.0);

  double total = 0.0;
  for (const auto& t : tags) total += t.confidence;
  if (tags.empty() || total <= 0.0) {
    out.tag_defaults_used = true;
    log_warn("no usable tags; familiarity/imageability/hcu default to 0.5");
    return out;
  }

  double top = 0.0, music = 0.0;
  for (const auto& t : tags) {
    top = std::max(top, t.confidence);
    if (to_lower(t.tag).find("music") != std::string::npos) music += t.confidence;
  }
  out.familiarity = top;
  out.imageability = std::clamp(music, 0.0, 1.0);

  if (tags.size() == 1) {
    out.hcu = 1.0;  // a point mass has zero entropy
  } else {
    double entropy = 0.0;
    for (const auto& t : tags) {
      double p = t.confidence / total;
      if (p > 0.0) entropy -= p * std::log(p);
    }
    out.hcu = 1.0 - entropy / std::log(static_cast<double>(tags.size()));
    out.hcu = std::clamp(out.hcu, 0.0, 1.0);
  }
  return out;
}

// ---- remote client ----------------------------------------------------------------

namespace detail {

inline nlohmann::json remote_request_body(const ScorerSpec& spec,
                                          const std::vector<std::string>& videos,
                                          const ArtifactMap& inputs) {
  nlohmann::json body;
  body["scorer_id"] = spec.scorer_id;
  body["target"] = spec.target.name();
  body["videos"] = nlohmann::json::array();
  for (const auto& id : videos) {
    nlohmann::json v;
    v["video_id"] = id;
    auto it = inputs.find(id);
    if (it != inputs.end()) {
      if (it->second.caption) v["caption"] = *it->second.caption;
      if (!it->second.tags.empty()) {
        nlohmann::json tags = nlohmann::json::array();
        for (const auto& t : it->second.tags)
          tags.push_back({t.tag, t.confidence});
        v["tags"] = tags;
      }
      if (it->second.features_uri) v["features_uri"] = *it->second.features_uri;
    }
    body["videos"].push_back(std::move(v));
  }
  return body;
}

/// Parse and validate one reply; scores outside [0,1] or malformed JSON are
/// protocol violations, never retried.
inline void merge_remote_reply(const std::string& payload,
                               const std::vector<std::string>& requested,
                               std::map<std::string, double>& out) {
  nlohmann::json reply;
  try {
    reply = nlohmann::json::parse(payload);
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolViolation(std::string("reply is not JSON: ") + e.what());
  }
  if (!reply.contains("scores") || !reply["scores"].is_array())
    throw ProtocolViolation("reply missing 'scores' array");
  std::map<std::string, double> got;
  for (const auto& item : reply["scores"]) {
    if (!item.contains("video_id") || !item.contains("score") ||
        !item["score"].is_number())
      throw ProtocolViolation("malformed score entry");
    double s = item["score"].get<double>();
    if (s < 0.0 || s > 1.0)
      throw ProtocolViolation("score " + format_double(s) + " outside [0,1]");
    got[item["video_id"].get<std::string>()] = s;
  }
  for (const auto& id : requested) {
    auto it = got.find(id);
    if (it == got.end()) throw MissingVideo(id, "absent from remote reply");
    out[id] = it->second;
  }
}

}  // namespace detail

// The HTTP transport lives behind this signature so tests can exercise the
// batching/retry logic without sockets when they want to. A nullopt return
// is a transport failure (retryable); any HTTP response is returned as
// (status, body).
using HttpPostFn = std::function<std::optional<std::pair<int, std::string>>(
    const std::string& endpoint, const std::string& path, const std::string& body)>;

inline std::optional<std::pair<int, std::string>> default_http_post(
    const std::string& endpoint, const std::string& path, const std::string& body) {
  httplib::Client client(endpoint);
  client.set_connection_timeout(5, 0);
  client.set_read_timeout(30, 0);
  auto res = client.Post(path, body, "application/json");
  if (!res) return std::nullopt;
  return std::make_pair(res->status, res->body);
}

/// One POST per batch of videos. Transport failures are retried 3 times
/// with exponential backoff; protocol violations and HTTP error statuses
/// are not retried. Batches may run concurrently up to
/// spec.max_concurrency; results merge by video id, so the outcome is
/// order-independent.
inline std::map<std::string, double> fetch_remote_scores(
    const ScorerSpec& spec, const std::vector<std::string>& videos,
    const ArtifactMap& inputs, const HttpPostFn& post_fn = default_http_post) {
  std::vector<std::vector<std::string>> batches;
  for (size_t i = 0; i < videos.size(); i += spec.batch_size)
    batches.emplace_back(videos.begin() + i,
                         videos.begin() + std::min(videos.size(), i + spec.batch_size));

  auto fetch_batch = [&](const std::vector<std::string>& batch) {
    const std::string body = detail::remote_request_body(spec, batch, inputs).dump();
    std::optional<std::pair<int, std::string>> res;
    for (int attempt = 0; attempt < 3; ++attempt) {
      if (attempt > 0)
        std::this_thread::sleep_for(std::chrono::milliseconds(
            spec.retry_base_ms * (1 << (attempt - 1))));
      res = post_fn(spec.source, "/score", body);
      if (res) break;  // transport succeeded (any HTTP status)
    }
    if (!res) throw RemoteUnavailable(spec.source, "transport failure after 3 attempts");
    if (res->first < 200 || res->first >= 300)
      throw RemoteUnavailable(spec.source, "HTTP " + std::to_string(res->first));
    std::map<std::string, double> out;
    detail::merge_remote_reply(res->second, batch, out);
    return out;
  };

  std::map<std::string, double> all;
  const int cap = std::max(1, spec.max_concurrency);
  for (size_t i = 0; i < batches.size(); i += cap) {
    std::vector<std::future<std::map<std::string, double>>> inflight;
    for (size_t j = i; j < std::min(batches.size(), i + cap); ++j)
      inflight.push_back(std::async(std::launch::async, fetch_batch,
                                    std::cref(batches[j])));
    for (auto& f : inflight)
      for (const auto& [id, score] : f.get()) all[id] = score;
  }
  return all;
}

// ---- evaluate ---------------------------------------------------------------------

/// Resolve one scorer over a video list.
///   FileBacked -> exact lookup in a predictions.csv
///   Heuristic  -> deterministic sub-score computation from audio + tags
///   Remote     -> batched HTTP, values validated to [0,1]
inline ScoreVector evaluate_scorer(const ScorerSpec& spec,
                                   const std::vector<std::string>& videos,
                                   const ArtifactMap& inputs,
                                   const HttpPostFn& post_fn = default_http_post) {
  ScoreVector out;
  out.scorer_id = spec.scorer_id;
  switch (spec.kind) {
    case ScorerKind::kFileBacked: {
      out.provenance = Provenance::kLoaded;
      Term t = (spec.target.kind == ScorerTarget::Kind::kLongTerm)
                   ? Term::kLongTerm
                   : Term::kShortTerm;
      auto set = load_predictions(spec.source, spec.scorer_id, t);
      for (const auto& id : videos) {
        auto it = set.scores.find(id);
        if (it == set.scores.end()) throw MissingVideo(id, spec.source);
        out.values[id] = it->second;
      }
      return out;
    }
    case ScorerKind::kHeuristic: {
      out.provenance = Provenance::kComputed;
      if (spec.target.kind != ScorerTarget::Kind::kSubscore)
        throw Error("ConfigInvalid",
                    "heuristic scorers only produce gestalt sub-scores");
      for (const auto& id : videos) {
        auto it = inputs.find(id);
        if (it == inputs.end() || !it->second.audio_path)
          throw MissingVideo(id, "no audio for heuristic scorer");
        auto clip = read_wav(*it->second.audio_path);
        auto subs = heuristic_subscores(clip, it->second.tags);
        switch (spec.target.subscore) {
          case Subscore::kImageability: out.values[id] = subs.imageability; break;
          case Subscore::kHcu: out.values[id] = subs.hcu; break;
          case Subscore::kArousal: out.values[id] = subs.arousal; break;
          case Subscore::kFamiliarity: out.values[id] = subs.familiarity; break;
        }
      }
      return out;
    }
    case ScorerKind::kRemote: {
      out.provenance = Provenance::kFetched;
      out.values = fetch_remote_scores(spec, videos, inputs, post_fn);
      return out;
    }
  }
  throw Error("ConfigInvalid", "unknown scorer kind");
}

}  // namespace gestaltfuse

#endif  // GESTALTFUSE_SCORERS_HPP_
