// eval.hpp

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

// Dataset splitting, rank/linear correlation metrics, and report emission.
//
// Spearman is implemented as Pearson over mid-ranks (ties get average
// ranks), which stays correct under ties; the classic 1 - 6*sum(d^2)/...
// formula is then only valid (and used in tests) for tie-free data.

#ifndef GESTALTFUSE_EVAL_HPP_
#define GESTALTFUSE_EVAL_HPP_

#include <algorithm>
#include <cfenv>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "gestaltfuse/gt_scoring.hpp"
#include "gestaltfuse/rng.hpp"

namespace gestaltfuse {

class LengthMismatch : public Error {
 public:
  LengthMismatch(size_t a, size_t b)
      : Error("LengthMismatch",
              std::to_string(a) + " vs " + std::to_string(b)) {}
};

class TooFewSamples : public Error {
 public:
  explicit TooFewSamples(size_t n)
      : Error("TooFewSamples",
              "need at least 3 samples, got " + std::to_string(n)) {}
};

class ConstantInput : public Error {
 public:
  ConstantInput() : Error("ConstantInput", "correlation undefined for a constant vector") {}
};

class InsufficientOverlap : public Error {
 public:
  explicit InsufficientOverlap(size_t n)
      : Error("InsufficientOverlap",
              "need at least 3 overlapping videos, got " + std::to_string(n)) {}
};

class NotEnoughVideos : public Error {
 public:
  NotEnoughVideos(size_t have, size_t need)
      : Error("NotEnoughVideos", "have " + std::to_string(have) + ", need " +
                                     std::to_string(need)) {}
};

// ---- split ----------------------------------------------------------------------

struct SplitSpec {
  std::uint64_t seed = 0;
  size_t n_train = 800;
  size_t n_test = 200;
};

/// Deterministic train/test split. Ids are sorted, then shuffled by a
/// xoshiro256** generator seeded from spec.seed (via the documented
/// SplitMix64 expansion in rng.hpp), so the split depends only on the id
/// set and the seed, not on input order.
inline std::pair<std::vector<std::string>, std::vector<std::string>> split(
    std::vector<std::string> video_ids, const SplitSpec& spec) {
  if (video_ids.size() < spec.n_train + spec.n_test)
    throw NotEnoughVideos(video_ids.size(), spec.n_train + spec.n_test);
  std::sort(video_ids.begin(), video_ids.end());
  Xoshiro256 rng(derive_seed(spec.seed, "split"));
  rng.shuffle(video_ids);
  std::vector<std::string> train(video_ids.begin(),
                                 video_ids.begin() + spec.n_train);
  std::vector<std::string> test(video_ids.begin() + spec.n_train,
                                video_ids.begin() + spec.n_train + spec.n_test);
  return {std::move(train), std::move(test)};
}

// ---- correlation ------------------------------------------------------------------

/// Mid-ranks (1-based); tied values receive the average of their ranks.
inline std::vector<double> midranks(std::span<const double> x) {
  const size_t n = x.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(n);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
    double avg = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
    for (size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
    i = j + 1;
  }
  return ranks;
}

inline double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw LengthMismatch(x.size(), y.size());
  const size_t n = x.size();
  if (n < 3) throw TooFewSamples(n);
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw ConstantInput();
  double r = sxy / std::sqrt(sxx * syy);
  return std::clamp(r, -1.0, 1.0);
}

/// Pearson correlation of mid-ranks.
inline double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw LengthMismatch(x.size(), y.size());
  if (x.size() < 3) throw TooFewSamples(x.size());
  auto rx = midranks(x);
  auto ry = midranks(y);
  return pearson(rx, ry);
}

// ---- evaluate ---------------------------------------------------------------------

struct EvalResult {
  std::string run_id;
  Term target = Term::kShortTerm;
  double spearman = 0.0;
  double pearson = 0.0;
  size_t n = 0;
};

/// Metrics over the intersection of prediction keys and ground-truth videos
/// carrying a score at `target`. Inputs may come in any order; the
/// intersection is iterated in sorted video-id order.
inline EvalResult evaluate(const PredictionSet& preds,
                           const std::vector<MemorabilityScore>& gt,
                           Term target) {
  std::map<std::string, double> gt_by_video;
  for (const auto& s : gt) {
    const auto& val = (target == Term::kShortTerm) ? s.short_term : s.long_term;
    if (val) gt_by_video[s.video_id] = *val;
  }
  std::vector<double> x, y;
  for (const auto& [video, score] : preds.scores) {
    auto it = gt_by_video.find(video);
    if (it == gt_by_video.end()) continue;
    x.push_back(score);
    y.push_back(it->second);
  }
  if (x.size() < 3) throw InsufficientOverlap(x.size());
  EvalResult r;
  r.run_id = preds.model_id;
  r.target = target;
  r.spearman = spearman(x, y);
  r.pearson = pearson(x, y);
  r.n = x.size();
  return r;
}

// ---- reports ----------------------------------------------------------------------

enum class ReportFormat { kMarkdown, kCsv };

/// Round to 3 decimals, ties half-to-even, then format with fixed width.
inline std::string format_3dp(double v) {
  // std::nearbyint honors the default FE_TONEAREST mode = ties to even.
  double scaled = std::nearbyint(v * 1000.0);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", scaled / 1000.0);
  return std::string(buf);
}

inline std::string results_csv(const std::vector<EvalResult>& results) {
  CsvWriter w({"run_id", "target", "spearman", "pearson", "n"});
  for (const auto& r : results)
    w.append_row({r.run_id, term_name(r.target), format_double(r.spearman),
                  format_double(r.pearson), std::to_string(r.n)});
  return w.str();
}

/// Markdown table: one row per run, columns Short-term/Long-term x
/// Spearman/Pearson. Per-column maxima are bold; absent cells are "-".
/// Rows appear in first-seen order of run_id.
inline std::string report(const std::vector<EvalResult>& results,
                          ReportFormat format = ReportFormat::kMarkdown) {
  if (results.empty()) throw Error("EmptyReport", "no results to report");
  if (format == ReportFormat::kCsv) return results_csv(results);

  struct Row {
    std::optional<double> cell[4];  // st spearman, st pearson, lt spearman, lt pearson
  };
  std::vector<std::string> order;
  std::map<std::string, Row> rows;
  for (const auto& r : results) {
    if (!rows.count(r.run_id)) order.push_back(r.run_id);
    auto& row = rows[r.run_id];
    size_t base = (r.target == Term::kShortTerm) ? 0 : 2;
    row.cell[base] = r.spearman;
    row.cell[base + 1] = r.pearson;
  }
  std::optional<double> col_max[4];
  for (const auto& id : order)
    for (size_t c = 0; c < 4; ++c) {
      const auto& v = rows[id].cell[c];
      if (v && (!col_max[c] || *v > *col_max[c])) col_max[c] = *v;
    }

  std::string out;
  out += "| Run | Short-term Spearman | Short-term Pearson | Long-term Spearman | Long-term Pearson |\n";
  out += "| --- | --- | --- | --- | --- |\n";
  for (const auto& id : order) {
    out += "| " + id + " |";
    for (size_t c = 0; c < 4; ++c) {
      const auto& v = rows[id].cell[c];
      if (!v) {
        out += " - |";
      } else if (col_max[c] && *v == *col_max[c]) {
        out += " **" + format_3dp(*v) + "** |";
      } else {
        out += " " + format_3dp(*v) + " |";
      }
    }
    out += "\n";
  }
  return out;
}

}  // namespace gestaltfuse

#endif  // GESTALTFUSE_EVAL_HPP_
