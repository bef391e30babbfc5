// data_model.hpp

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

// Canonical domain types, plus ingestion and validation of annotation logs,
// captions, audio-tag files, and per-model prediction files.
//
// All tabular interchange is CSV with a fixed header:
//   annotations.csv: user_id,video_id,lag,is_repeat,responded,reaction_time_ms
//   predictions.csv: video_id,score
//   captions.csv:    video_id,caption             (caption RFC-4180 quoted)
//   audio_tags.csv:  video_id,tag,confidence
//
// user_id / video_id are opaque strings and are never parsed for meaning.
// Parsing is total: every row either yields a record or a positioned error.

#ifndef GESTALTFUSE_DATA_MODEL_HPP_
#define GESTALTFUSE_DATA_MODEL_HPP_

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "gestaltfuse/csv.hpp"

namespace gestaltfuse {

enum class Term { kShortTerm, kLongTerm };

inline std::string term_name(Term t) {
  return t == Term::kShortTerm ? "short_term" : "long_term";
}

// ---- errors ----------------------------------------------------------------

class InconsistentRecord : public Error {
 public:
  InconsistentRecord(size_t line, const std::string& reason)
      : Error("InconsistentRecord",
              "line " + std::to_string(line) + ": " + reason) {}
};

class OutOfRangeScore : public Error {
 public:
  OutOfRangeScore(const std::string& video_id, double value)
      : Error("OutOfRangeScore",
              video_id + ": " + format_double(value) + " outside [0,1]") {}
};

class DuplicateVideo : public Error {
 public:
  explicit DuplicateVideo(const std::string& video_id)
      : Error("DuplicateVideo", video_id) {}
};

class EmptyCaption : public Error {
 public:
  explicit EmptyCaption(const std::string& video_id)
      : Error("EmptyCaption", video_id) {}
};

// ---- types -----------------------------------------------------------------

/// One exposure of one video to one user. reaction_time_ms is present iff
/// the user signaled recognition (responded).
struct AnnotationRecord {
  std::string user_id;
  std::string video_id;
  Term lag = Term::kShortTerm;
  bool is_repeat = false;
  bool responded = false;
  std::optional<double> reaction_time_ms;

  bool operator==(const AnnotationRecord&) const = default;
};

/// Ordered annotation log plus the distinct user/video index sets (in order
/// of first appearance). Videos with zero repeat exposures are flagged, not
/// rejected: they simply receive no score downstream.
struct AnnotationLog {
  std::vector<AnnotationRecord> records;
  std::vector<std::string> video_ids;
  std::vector<std::string> user_ids;
  std::vector<std::string> videos_without_repeats;

  bool operator==(const AnnotationLog& o) const {
    return records == o.records && video_ids == o.video_ids &&
           user_ids == o.user_ids;
  }
};

using CaptionSet = std::map<std::string, std::string>;

struct AudioTag {
  std::string tag;
  double confidence = 0.0;
  bool operator==(const AudioTag&) const = default;
};

/// Per-video tag lists, sorted by descending confidence (ties keep file
/// order).
using AudioTagSet = std::map<std::string, std::vector<AudioTag>>;

struct PredictionSet {
  std::string model_id;
  Term target = Term::kShortTerm;
  std::map<std::string, double> scores;  // video_id -> score in [0,1]
};

// ---- field parsers ----------------------------------------------------------

namespace detail {

inline bool parse_bool(const std::string& s, size_t line, const char* col) {
  if (s == "true") return true;
  if (s == "false") return false;
  throw MalformedRow(line, std::string(col) + " must be true|false, got '" + s + "'");
}

inline double parse_double(const std::string& s, size_t line, const char* col) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw MalformedRow(line, std::string(col) + ": bad number '" + s + "'");
  if (!std::isfinite(v))
    throw MalformedRow(line, std::string(col) + ": non-finite value");
  return v;
}

inline Term parse_lag(const std::string& s, size_t line) {
  if (s == "short") return Term::kShortTerm;
  if (s == "long") return Term::kLongTerm;
  throw MalformedRow(line, "lag must be short|long, got '" + s + "'");
}

/// Push id into an ordered distinct list (first-appearance order).
inline void note_id(std::vector<std::string>& order, std::set<std::string>& seen,
                    const std::string& id) {
  if (seen.insert(id).second) order.push_back(id);
}

}  // namespace detail

// ---- annotations -------------------------------------------------------------

inline const std::vector<std::string>& annotations_schema() {
  static const std::vector<std::string> s = {"user_id", "video_id", "lag",
                                             "is_repeat", "responded",
                                             "reaction_time_ms"};
  return s;
}

inline AnnotationLog parse_annotations(const std::string& path) {
  auto rows = load_csv(path, annotations_schema());
  if (rows.empty()) throw EmptyFile(path);

  AnnotationLog log;
  std::set<std::string> users_seen, videos_seen, with_repeats;
  for (const auto& row : rows) {
    const auto& f = row.fields;
    AnnotationRecord rec;
    rec.user_id = f[0];
    rec.video_id = f[1];
    if (rec.user_id.empty() || rec.video_id.empty())
      throw MalformedRow(row.line, "empty user_id or video_id");
    rec.lag = detail::parse_lag(f[2], row.line);
    rec.is_repeat = detail::parse_bool(f[3], row.line, "is_repeat");
    rec.responded = detail::parse_bool(f[4], row.line, "responded");
    if (!f[5].empty()) {
      double rt = detail::parse_double(f[5], row.line, "reaction_time_ms");
      if (rt < 0.0)
        throw MalformedRow(row.line, "negative reaction_time_ms");
      if (!rec.responded)
        throw InconsistentRecord(row.line,
                                 "reaction time present without responded=true");
      rec.reaction_time_ms = rt;
    } else if (rec.responded) {
      throw InconsistentRecord(row.line,
                               "responded=true but reaction_time_ms missing");
    }
    detail::note_id(log.user_ids, users_seen, rec.user_id);
    detail::note_id(log.video_ids, videos_seen, rec.video_id);
    if (rec.is_repeat) with_repeats.insert(rec.video_id);
    log.records.push_back(std::move(rec));
  }
  for (const auto& v : log.video_ids)
    if (!with_repeats.count(v)) log.videos_without_repeats.push_back(v);
  if (!log.videos_without_repeats.empty())
    log_warn(std::to_string(log.videos_without_repeats.size()) +
             " video(s) have no repeat exposure and will not be scored");
  return log;
}

inline std::string write_annotations(const std::vector<AnnotationRecord>& records) {
  CsvWriter w(annotations_schema());
  for (const auto& r : records) {
    w.append_row({r.user_id, r.video_id,
                  r.lag == Term::kShortTerm ? "short" : "long",
                  r.is_repeat ? "true" : "false",
                  r.responded ? "true" : "false",
                  r.reaction_time_ms ? format_double(*r.reaction_time_ms) : ""});
  }
  return w.str();
}

// ---- predictions --------------------------------------------------------------

inline const std::vector<std::string>& predictions_schema() {
  static const std::vector<std::string> s = {"video_id", "score"};
  return s;
}

/// Scores are validated, not clamped: an out-of-range value is a data error.
inline PredictionSet load_predictions(const std::string& path,
                                      const std::string& model_id, Term target) {
  PredictionSet set;
  set.model_id = model_id;
  set.target = target;
  for (const auto& row : load_csv(path, predictions_schema())) {
    const auto& video = row.fields[0];
    if (video.empty()) throw MalformedRow(row.line, "empty video_id");
    double score = detail::parse_double(row.fields[1], row.line, "score");
    if (score < 0.0 || score > 1.0) throw OutOfRangeScore(video, score);
    if (!set.scores.emplace(video, score).second) throw DuplicateVideo(video);
  }
  return set;
}

inline std::string write_predictions(const std::map<std::string, double>& scores) {
  CsvWriter w(predictions_schema());
  for (const auto& [video, score] : scores)
    w.append_row({video, format_double(score)});
  return w.str();
}

// ---- captions ------------------------------------------------------------------

inline const std::vector<std::string>& captions_schema() {
  static const std::vector<std::string> s = {"video_id", "caption"};
  return s;
}

inline CaptionSet load_captions(const std::string& path) {
  CaptionSet set;
  for (const auto& row : load_csv(path, captions_schema())) {
    const auto& video = row.fields[0];
    if (video.empty()) throw MalformedRow(row.line, "empty video_id");
    if (trim(row.fields[1]).empty()) throw EmptyCaption(video);
    if (!set.emplace(video, row.fields[1]).second) throw DuplicateVideo(video);
  }
  return set;
}

inline std::string write_captions(const CaptionSet& captions) {
  std::string out = "video_id,caption\n";
  for (const auto& [video, caption] : captions)
    out += csv_escape(video) + "," + csv_escape(caption, /*always_quote=*/true) + "\n";
  return out;
}

// ---- audio tags -----------------------------------------------------------------

inline const std::vector<std::string>& audio_tags_schema() {
  static const std::vector<std::string> s = {"video_id", "tag", "confidence"};
  return s;
}

/// Tags are re-sorted by descending confidence on load; file order only
/// breaks ties.
inline AudioTagSet load_audio_tags(const std::string& path) {
  AudioTagSet set;
  for (const auto& row : load_csv(path, audio_tags_schema())) {
    const auto& video = row.fields[0];
    if (video.empty()) throw MalformedRow(row.line, "empty video_id");
    if (trim(row.fields[1]).empty())
      throw MalformedRow(row.line, "empty tag name");
    double conf = detail::parse_double(row.fields[2], row.line, "confidence");
    if (conf < 0.0 || conf > 1.0) throw OutOfRangeScore(video, conf);
    set[video].push_back({row.fields[1], conf});
  }
  for (auto& [video, tags] : set)
    std::stable_sort(tags.begin(), tags.end(),
                     [](const AudioTag& a, const AudioTag& b) {
                       return a.confidence > b.confidence;
                     });
  return set;
}

inline std::string write_audio_tags(const AudioTagSet& set) {
  CsvWriter w(audio_tags_schema());
  for (const auto& [video, tags] : set)
    for (const auto& t : tags)
      w.append_row({video, t.tag, format_double(t.confidence)});
  return w.str();
}

}  // namespace gestaltfuse

#endif  // GESTALTFUSE_DATA_MODEL_HPP_
