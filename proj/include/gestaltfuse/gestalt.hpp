// gestalt.hpp

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

// The audio-gestalt score: a weighted sum of the four sub-scores
// (imageability, hcu, arousal, familiarity) and the threshold that routes a
// video to the with-audio or without-audio pathway. Weights may be signed
// (the hcu orientation is ambiguous); a tie on the threshold routes
// with-audio.

#ifndef GESTALTFUSE_GESTALT_HPP_
#define GESTALTFUSE_GESTALT_HPP_

#include <cmath>
#include <string>
#include <vector>

#include "gestaltfuse/scorers.hpp"

namespace gestaltfuse {

struct GestaltWeights {
  double w_imageability = 0.25;
  double w_hcu = 0.25;
  double w_arousal = 0.25;
  double w_familiarity = 0.25;
  double threshold = 0.5;

  void validate() const {
    double mass = std::abs(w_imageability) + std::abs(w_hcu) +
                  std::abs(w_arousal) + std::abs(w_familiarity);
    if (mass <= 0.0)
      throw Error("ConfigInvalid", "gestalt weights are all zero");
    if (threshold < 0.0 || threshold > 1.0)
      throw Error("ConfigInvalid", "gestalt threshold outside [0,1]");
  }
};

struct GestaltSubscores {
  double imageability = 0.0;
  double hcu = 0.0;
  double arousal = 0.0;
  double familiarity = 0.0;
};

enum class Pathway { kWithAudio, kWithoutAudio };

inline std::string pathway_name(Pathway p) {
  return p == Pathway::kWithAudio ? "with_audio" : "without_audio";
}

/// Plain dot product; no clamping, since weights may be signed.
inline double gestalt_score(const GestaltSubscores& s, const GestaltWeights& w) {
  return w.w_imageability * s.imageability + w.w_hcu * s.hcu +
         w.w_arousal * s.arousal + w.w_familiarity * s.familiarity;
}

/// WithAudio iff combined >= threshold (ties go with audio).
inline Pathway route(double combined, double threshold) {
  return combined >= threshold ? Pathway::kWithAudio : Pathway::kWithoutAudio;
}

struct GestaltScore {
  std::string video_id;
  GestaltSubscores subscores;
  double combined = 0.0;
  Pathway pathway = Pathway::kWithoutAudio;
};

inline GestaltScore make_gestalt_score(const std::string& video_id,
                                       const GestaltSubscores& subscores,
                                       const GestaltWeights& weights) {
  GestaltScore g;
  g.video_id = video_id;
  g.subscores = subscores;
  g.combined = gestalt_score(subscores, weights);
  g.pathway = route(g.combined, weights.threshold);
  return g;
}

// ---- gestalt.csv -------------------------------------------------------------

inline const std::vector<std::string>& gestalt_schema() {
  static const std::vector<std::string> s = {
      "video_id", "imageability", "hcu", "arousal", "familiarity",
      "combined", "pathway"};
  return s;
}

inline std::string write_gestalt_csv(const std::vector<GestaltScore>& scores) {
  CsvWriter w(gestalt_schema());
  for (const auto& g : scores)
    w.append_row({g.video_id, format_double(g.subscores.imageability),
                  format_double(g.subscores.hcu), format_double(g.subscores.arousal),
                  format_double(g.subscores.familiarity), format_double(g.combined),
                  pathway_name(g.pathway)});
  return w.str();
}

inline std::vector<GestaltScore> load_gestalt_csv(const std::string& path) {
  std::vector<GestaltScore> out;
  std::set<std::string> seen;
  for (const auto& row : load_csv(path, gestalt_schema())) {
    GestaltScore g;
    g.video_id = row.fields[0];
    if (!seen.insert(g.video_id).second) throw DuplicateVideo(g.video_id);
    g.subscores.imageability =
        detail::parse_double(row.fields[1], row.line, "imageability");
    g.subscores.hcu = detail::parse_double(row.fields[2], row.line, "hcu");
    g.subscores.arousal = detail::parse_double(row.fields[3], row.line, "arousal");
    g.subscores.familiarity =
        detail::parse_double(row.fields[4], row.line, "familiarity");
    g.combined = detail::parse_double(row.fields[5], row.line, "combined");
    if (row.fields[6] == "with_audio") g.pathway = Pathway::kWithAudio;
    else if (row.fields[6] == "without_audio") g.pathway = Pathway::kWithoutAudio;
    else throw MalformedRow(row.line, "bad pathway '" + row.fields[6] + "'");
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace gestaltfuse

#endif  // GESTALTFUSE_GESTALT_HPP_
