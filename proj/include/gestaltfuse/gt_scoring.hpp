// gt_scoring.hpp

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

// Per-video memorability ground truth, two ways:
//   * hit_rate_scores: direct hit rate over repeat exposures, per lag.
//   * cf_short_term_scores: regenerated short-term scores. Complete the
//     user x video reaction-time matrix by regularized ALS, then count a
//     predicted reaction time as a miss when it exceeds the mean by more
//     than k standard deviations.

#ifndef GESTALTFUSE_GT_SCORING_HPP_
#define GESTALTFUSE_GT_SCORING_HPP_

#include <Eigen/Dense>
#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gestaltfuse/data_model.hpp"
#include "gestaltfuse/rng.hpp"

namespace gestaltfuse {

// ---- errors -----------------------------------------------------------------

class EmptyMatrix : public Error {
 public:
  EmptyMatrix() : Error("EmptyMatrix", "no responded repeat exposures") {}
};

// ---- types ------------------------------------------------------------------

/// Per-video memorability ground truth. A score is present only when at
/// least one annotation contributed to it.
struct MemorabilityScore {
  std::string video_id;
  std::optional<double> short_term;
  std::optional<double> long_term;
  size_t n_short = 0;
  size_t n_long = 0;
};

/// Sparse user x video reaction-time matrix. Multiple reaction times for
/// one (user, video) pair are averaged into a single cell.
struct ReactionMatrix {
  std::vector<std::string> users;
  std::vector<std::string> videos;
  std::map<std::pair<size_t, size_t>, double> cells;  // (user idx, video idx) -> ms
};

struct FactorizationConfig {
  int rank = 8;
  double regularization = 0.1;
  int iterations = 50;
  std::uint64_t seed = 0;
  double convergence_tol = 1e-6;  // on relative RMSE change between iterations
};

/// The miss rule: a predicted reaction time strictly greater than
/// mean + k_sigma * sd counts as a miss. Statistics are taken globally over
/// every predicted cell; sd uses the population formula.
struct MissRule {
  double k_sigma = 2.0;
  enum class Scope { kGlobal } statistic_scope = Scope::kGlobal;
};

/// Dense completion of a ReactionMatrix plus fit diagnostics.
struct CompletedMatrix {
  std::vector<std::string> users;
  std::vector<std::string> videos;
  Eigen::MatrixXd predicted;  // users x videos, every cell predicted
  std::vector<double> objective_trace;  // objective after every half-step
  std::vector<std::string> warnings;    // bias-only rows/columns etc.
};

// ---- operations ----------------------------------------------------------------

/// score(video, lag) = responded repeat exposures / repeat exposures.
/// Videos with zero repeat exposures at a lag have that score absent.
inline std::vector<MemorabilityScore> hit_rate_scores(const AnnotationLog& log) {
  struct Counts {
    size_t repeats_short = 0, hits_short = 0;
    size_t repeats_long = 0, hits_long = 0;
  };
  std::map<std::string, Counts> by_video;
  for (const auto& r : log.records) {
    if (!r.is_repeat) continue;
    auto& c = by_video[r.video_id];
    if (r.lag == Term::kShortTerm) {
      ++c.repeats_short;
      if (r.responded) ++c.hits_short;
    } else {
      ++c.repeats_long;
      if (r.responded) ++c.hits_long;
    }
  }
  std::vector<MemorabilityScore> out;
  for (const auto& video : log.video_ids) {
    auto it = by_video.find(video);
    MemorabilityScore s;
    s.video_id = video;
    if (it != by_video.end()) {
      const auto& c = it->second;
      if (c.repeats_short > 0) {
        s.short_term = static_cast<double>(c.hits_short) /
                       static_cast<double>(c.repeats_short);
        s.n_short = c.repeats_short;
      }
      if (c.repeats_long > 0) {
        s.long_term = static_cast<double>(c.hits_long) /
                      static_cast<double>(c.repeats_long);
        s.n_long = c.repeats_long;
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

/// One cell per (user, video) pair with at least one responded repeat
/// exposure; several reaction times for the same pair are averaged.
inline ReactionMatrix build_rt_matrix(const AnnotationLog& log) {
  ReactionMatrix m;
  std::map<std::string, size_t> user_idx, video_idx;
  std::map<std::pair<size_t, size_t>, std::pair<double, size_t>> acc;  // sum, count
  for (const auto& r : log.records) {
    if (!r.is_repeat || !r.responded || !r.reaction_time_ms) continue;
    auto ui = user_idx.emplace(r.user_id, user_idx.size());
    if (ui.second) m.users.push_back(r.user_id);
    auto vi = video_idx.emplace(r.video_id, video_idx.size());
    if (vi.second) m.videos.push_back(r.video_id);
    auto& a = acc[{ui.first->second, vi.first->second}];
    a.first += *r.reaction_time_ms;
    a.second += 1;
  }
  if (acc.empty()) throw EmptyMatrix();
  for (const auto& [key, sum_count] : acc)
    m.cells[key] = sum_count.first / static_cast<double>(sum_count.second);
  return m;
}

/// Regularized alternating least squares with biases:
///   rt(u,v) ~ mu + b_u + c_v + U_u . V_v
/// mu is the mean of the observed cells. Each half-step jointly re-solves
/// one side's (bias, factors) by ridge regression, which minimizes the
/// objective
///   sum_observed (rt - prediction)^2
///     + lambda (||b||^2 + ||c||^2 + ||U||^2 + ||V||^2)
/// exactly over that block, so the objective never increases. Users or
/// videos with zero observations keep zero bias and factors (bias-only
/// predictions) and are reported in `warnings`. Deterministic given
/// cfg.seed: factors are initialized from a seeded generator and all loops
/// run in a fixed sequential order.
inline CompletedMatrix factorize(const ReactionMatrix& matrix,
                                 const FactorizationConfig& cfg) {
  const size_t n_users = matrix.users.size();
  const size_t n_videos = matrix.videos.size();
  if (matrix.cells.empty()) throw EmptyMatrix();
  if (cfg.rank < 1 || cfg.rank > static_cast<int>(std::min(n_users, n_videos)))
    throw Error("ConfigInvalid",
                "factorization rank must be in [1, min(users, videos)]");
  if (cfg.regularization <= 0 || cfg.iterations < 1 || cfg.convergence_tol <= 0)
    throw Error("ConfigInvalid", "factorization parameters must be positive");

  const int k = cfg.rank;
  const double lambda = cfg.regularization;

  // Observation lists per user and per video.
  std::vector<std::vector<std::pair<size_t, double>>> by_user(n_users), by_video(n_videos);
  double mu = 0.0;
  for (const auto& [key, value] : matrix.cells) {
    if (key.first >= n_users || key.second >= n_videos)
      throw Error("ConfigInvalid", "matrix cell index out of bounds");
    if (!std::isfinite(value) || value < 0.0)
      throw Error("ConfigInvalid", "matrix cell value must be finite and >= 0");
    by_user[key.first].push_back({key.second, value});
    by_video[key.second].push_back({key.first, value});
    mu += value;
  }
  mu /= static_cast<double>(matrix.cells.size());

  CompletedMatrix out;
  out.users = matrix.users;
  out.videos = matrix.videos;

  Eigen::VectorXd b = Eigen::VectorXd::Zero(n_users);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(n_videos);
  Eigen::MatrixXd U(n_users, k), V(n_videos, k);
  Xoshiro256 rng(derive_seed(cfg.seed, "als-init"));
  for (size_t u = 0; u < n_users; ++u)
    for (int j = 0; j < k; ++j) U(u, j) = rng.normal(0.0, 0.1);
  for (size_t v = 0; v < n_videos; ++v)
    for (int j = 0; j < k; ++j) V(v, j) = rng.normal(0.0, 0.1);

  for (size_t u = 0; u < n_users; ++u)
    if (by_user[u].empty()) {
      U.row(u).setZero();
      out.warnings.push_back("user " + matrix.users[u] +
                             " has no observations; bias-only prediction");
    }
  for (size_t v = 0; v < n_videos; ++v)
    if (by_video[v].empty()) {
      V.row(v).setZero();
      out.warnings.push_back("video " + matrix.videos[v] +
                             " has no observations; bias-only prediction");
    }

  auto objective = [&]() {
    double obj = 0.0;
    for (const auto& [key, value] : matrix.cells) {
      double resid = value - mu - b(key.first) - c(key.second) -
                     U.row(key.first).dot(V.row(key.second));
      obj += resid * resid;
    }
    obj += lambda * (b.squaredNorm() + c.squaredNorm() + U.squaredNorm() +
                     V.squaredNorm());
    return obj;
  };

  // Joint ridge solve for one row's (bias, factors) given the other side.
  auto solve_side = [&](const std::vector<std::pair<size_t, double>>& obs,
                        const Eigen::VectorXd& other_bias,
                        const Eigen::MatrixXd& other_factors, double& bias_out,
                        Eigen::MatrixXd& factors, size_t row) {
    if (obs.empty()) return;  // bias-only: stays at zero
    Eigen::MatrixXd gram = lambda * Eigen::MatrixXd::Identity(k + 1, k + 1);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k + 1);
    Eigen::VectorXd x(k + 1);
    for (const auto& [other_idx, value] : obs) {
      x(0) = 1.0;
      x.tail(k) = other_factors.row(other_idx);
      gram.noalias() += x * x.transpose();
      rhs.noalias() += x * (value - mu - other_bias(other_idx));
    }
    Eigen::VectorXd beta = gram.llt().solve(rhs);
    bias_out = beta(0);
    factors.row(row) = beta.tail(k);
  };

  double prev_rmse = -1.0;
  for (int it = 0; it < cfg.iterations; ++it) {
    for (size_t u = 0; u < n_users; ++u)
      solve_side(by_user[u], c, V, b(u), U, u);
    out.objective_trace.push_back(objective());
    for (size_t v = 0; v < n_videos; ++v)
      solve_side(by_video[v], b, U, c(v), V, v);
    out.objective_trace.push_back(objective());

    double sse = 0.0;
    for (const auto& [key, value] : matrix.cells) {
      double resid = value - mu - b(key.first) - c(key.second) -
                     U.row(key.first).dot(V.row(key.second));
      sse += resid * resid;
    }
    double rmse = std::sqrt(sse / static_cast<double>(matrix.cells.size()));
    if (prev_rmse >= 0.0 &&
        std::abs(prev_rmse - rmse) <= cfg.convergence_tol * std::max(prev_rmse, 1e-12))
      break;
    prev_rmse = rmse;
  }

  out.predicted.resize(n_users, n_videos);
  for (size_t u = 0; u < n_users; ++u)
    for (size_t v = 0; v < n_videos; ++v)
      out.predicted(u, v) = mu + b(u) + c(v) + U.row(u).dot(V.row(v));
  return out;
}

/// Short-term scores from a completed matrix: mean and population sd over
/// all predicted cells; a cell is a miss iff it exceeds mean + k_sigma * sd
/// strictly; score(video) = non-miss cells in that column / number of users.
/// sd == 0 means no cell can strictly exceed the threshold, so every video
/// scores 1.
inline std::vector<MemorabilityScore> cf_short_term_scores(
    const CompletedMatrix& completed, const MissRule& rule) {
  if (rule.k_sigma <= 0.0)
    throw Error("ConfigInvalid", "k_sigma must be positive");
  const auto& p = completed.predicted;
  const auto n_users = static_cast<size_t>(p.rows());
  const auto n_videos = static_cast<size_t>(p.cols());
  double mean = 0.0;
  for (size_t v = 0; v < n_videos; ++v)
    for (size_t u = 0; u < n_users; ++u) mean += p(u, v);
  const double n_cells = static_cast<double>(n_users * n_videos);
  mean /= n_cells;
  double var = 0.0;
  for (size_t v = 0; v < n_videos; ++v)
    for (size_t u = 0; u < n_users; ++u) {
      double d = p(u, v) - mean;
      var += d * d;
    }
  var /= n_cells;
  const double threshold = mean + rule.k_sigma * std::sqrt(var);

  std::vector<MemorabilityScore> out;
  for (size_t v = 0; v < n_videos; ++v) {
    size_t misses = 0;
    for (size_t u = 0; u < n_users; ++u)
      if (p(u, v) > threshold) ++misses;
    MemorabilityScore s;
    s.video_id = completed.videos[v];
    s.short_term = static_cast<double>(n_users - misses) /
                   static_cast<double>(n_users);
    s.n_short = n_users;
    out.push_back(std::move(s));
  }
  return out;
}

// ---- scores.csv -----------------------------------------------------------------

inline const std::vector<std::string>& scores_schema() {
  static const std::vector<std::string> s = {"video_id", "short_term",
                                             "long_term", "n_short", "n_long"};
  return s;
}

inline std::string write_scores(const std::vector<MemorabilityScore>& scores) {
  CsvWriter w(scores_schema());
  for (const auto& s : scores)
    w.append_row({s.video_id,
                  s.short_term ? format_double(*s.short_term) : "",
                  s.long_term ? format_double(*s.long_term) : "",
                  s.short_term ? std::to_string(s.n_short) : "",
                  s.long_term ? std::to_string(s.n_long) : ""});
  return w.str();
}

inline std::vector<MemorabilityScore> load_scores(const std::string& path) {
  std::vector<MemorabilityScore> out;
  std::set<std::string> seen;
  for (const auto& row : load_csv(path, scores_schema())) {
    MemorabilityScore s;
    s.video_id = row.fields[0];
    if (s.video_id.empty()) throw MalformedRow(row.line, "empty video_id");
    if (!seen.insert(s.video_id).second) throw DuplicateVideo(s.video_id);
    if (!row.fields[1].empty()) {
      double v = detail::parse_double(row.fields[1], row.line, "short_term");
      if (v < 0.0 || v > 1.0) throw OutOfRangeScore(s.video_id, v);
      s.short_term = v;
      s.n_short = static_cast<size_t>(
          detail::parse_double(row.fields[3], row.line, "n_short"));
      if (s.n_short < 1)
        throw InconsistentRecord(row.line, "short_term present with n_short=0");
    }
    if (!row.fields[2].empty()) {
      double v = detail::parse_double(row.fields[2], row.line, "long_term");
      if (v < 0.0 || v > 1.0) throw OutOfRangeScore(s.video_id, v);
      s.long_term = v;
      s.n_long = static_cast<size_t>(
          detail::parse_double(row.fields[4], row.line, "n_long"));
      if (s.n_long < 1)
        throw InconsistentRecord(row.line, "long_term present with n_long=0");
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace gestaltfuse

#endif  // GESTALTFUSE_GT_SCORING_HPP_
