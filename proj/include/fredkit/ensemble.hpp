#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "fredkit/core.hpp"

namespace fredkit {

struct ModelRun {
  std::string model_id;
  std::string scores_dir;
  std::optional<double> psds1;
  std::optional<double> mpauc;
};

// Unweighted elementwise mean. Summation runs in a canonical order (sorted
// per element) so the result does not depend on the order of the runs.
inline ScoreMatrix average_scores(const std::vector<ScoreMatrix>& runs) {
  if (runs.empty()) throw ValidationError("cannot average an empty list of score matrices");
  const ScoreMatrix& first = runs.front();
  for (const auto& r : runs) {
    if (r.clip_id() != first.clip_id())
      throw ValidationError("averaging scores of different clips: " + first.clip_id() + " vs " + r.clip_id());
    if (!r.same_shape(first)) throw ValidationError("averaging differently shaped scores for " + first.clip_id());
    if (r.frame_period() != first.frame_period())
      throw ValidationError("averaging scores with different frame periods for " + first.clip_id());
  }
  const std::size_t n = first.values().size();
  std::vector<double> out(n);
  std::vector<double> column(runs.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t r = 0; r < runs.size(); ++r) column[r] = runs[r].values()[i];
    std::sort(column.begin(), column.end());
    if (column.front() == column.back()) {
      out[i] = column.front();
      continue;
    }
    double s = 0.0;
    for (double v : column) s += v;
    out[i] = std::clamp(s / static_cast<double>(runs.size()), 0.0, 1.0);
  }
  return ScoreMatrix(first.clip_id(), first.frame_period(), first.frames(), first.classes(), std::move(out));
}

// Highest psds1 + mpauc; ties go to the lexicographically smaller model_id.
inline ModelRun select_best(const std::vector<ModelRun>& candidates) {
  if (candidates.empty()) throw ValidationError("no candidate runs to select from");
  const ModelRun* best = nullptr;
  double best_sum = 0.0;
  for (const auto& c : candidates) {
    if (!c.psds1 || !c.mpauc) throw ValidationError("run " + c.model_id + " is missing a metric");
    const double s = *c.psds1 + *c.mpauc;
    if (!best || s > best_sum || (s == best_sum && c.model_id < best->model_id)) {
      best = &c;
      best_sum = s;
    }
  }
  return *best;
}

// `model_id<TAB>psds1<TAB>mpauc`, optional header.
inline std::vector<ModelRun> parse_runs_tsv(std::string_view text) {
  std::vector<ModelRun> runs;
  auto lines = detail::lines_of(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto cols = detail::split(lines[i], '\t');
    if (i == 0 && !cols.empty() && cols[0] == "model_id") continue;
    double p = 0.0, m = 0.0;
    if (cols.size() != 3 || !detail::parse_double(cols[1], p) || !detail::parse_double(cols[2], m))
      throw ValidationError("malformed run row" + detail::at_line(i + 1));
    if (p < 0.0 || p > 1.0 || m < 0.0 || m > 1.0)
      throw ValidationError("metric outside [0,1]" + detail::at_line(i + 1));
    runs.push_back({std::string(cols[0]), "", p, m});
  }
  return runs;
}

}  // namespace fredkit
