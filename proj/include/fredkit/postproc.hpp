#pragma once

// Frame-score post-processing: class-independent median filtering and
// change-detection-based sound event bounding boxes (cSEBBs).

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "fredkit/core.hpp"

namespace fredkit {

struct MedianSpec {
  int window = 7;

  void validate() const {
    if (window < 1 || window % 2 == 0) throw ValidationError("median window must be odd and >= 1");
  }
};

// Centered running median per class; edges replicate the first/last frame.
inline ScoreMatrix median_filter(const ScoreMatrix& m, const MedianSpec& spec) {
  spec.validate();
  const auto T = static_cast<long long>(m.frames());
  const long long half = spec.window / 2;
  std::vector<double> out(m.values().size());
  std::vector<double> buf(static_cast<std::size_t>(spec.window));
  for (std::size_t c = 0; c < m.classes(); ++c) {
    for (long long t = 0; t < T; ++t) {
      for (long long k = -half; k <= half; ++k) {
        const long long s = std::clamp(t + k, 0LL, T - 1);
        buf[static_cast<std::size_t>(k + half)] = m.at(static_cast<std::size_t>(s), c);
      }
      auto mid = buf.begin() + half;
      std::nth_element(buf.begin(), mid, buf.end());
      out[static_cast<std::size_t>(t) * m.classes() + c] = *mid;
    }
  }
  return ScoreMatrix(m.clip_id(), m.frame_period(), m.frames(), m.classes(), std::move(out));
}

enum class SegmentScore { Mean, Max };

struct CSebbSpec {
  int avg_window = 3;
  int step_window = 7;
  double onset_threshold = 0.1;
  double offset_threshold = 0.1;
  double merge_ratio = 0.75;
  double score_floor = 0.01;
  SegmentScore score_mode = SegmentScore::Mean;

  void validate() const {
    if (avg_window < 1) throw ValidationError("cSEBB avg_window must be >= 1");
    if (step_window < 1) throw ValidationError("cSEBB step_window must be >= 1");
    if (onset_threshold < 0.0 || offset_threshold < 0.0)
      throw ValidationError("cSEBB thresholds must be >= 0");
    if (!(merge_ratio >= 0.0 && merge_ratio <= 1.0))
      throw ValidationError("cSEBB merge_ratio must lie in [0,1]");
  }
};

// Half-open frame range [begin, end) with its representative confidence.
struct Segment {
  std::size_t begin = 0;
  std::size_t end = 0;
  double score = 0.0;
};

namespace csebb {

// Centered moving average, truncated at the clip edges.
inline std::vector<double> smooth(const std::vector<double>& x, int window) {
  const auto T = static_cast<long long>(x.size());
  const long long before = (window - 1) / 2, after = window / 2;
  std::vector<double> y(x.size());
  for (long long t = 0; t < T; ++t) {
    const long long lo = std::max(0LL, t - before), hi = std::min(T - 1, t + after);
    double s = 0.0;
    for (long long i = lo; i <= hi; ++i) s += x[static_cast<std::size_t>(i)];
    y[static_cast<std::size_t>(t)] = s / static_cast<double>(hi - lo + 1);
  }
  return y;
}

// d[t] for boundary t in [0, T]: mean of the next L frames minus mean of the
// previous L frames, windows truncated at the edges; d[0] = d[T] = 0.
inline std::vector<double> step_response(const std::vector<double>& y, int step_window) {
  const std::size_t T = y.size();
  const auto L = static_cast<std::size_t>(step_window);
  std::vector<double> prefix(T + 1, 0.0);
  for (std::size_t t = 0; t < T; ++t) prefix[t + 1] = prefix[t] + y[t];
  std::vector<double> d(T + 1, 0.0);
  for (std::size_t t = 1; t < T; ++t) {
    const std::size_t hi = std::min(T, t + L), lo = t >= L ? t - L : 0;
    const double right = (prefix[hi] - prefix[t]) / static_cast<double>(hi - t);
    const double left = (prefix[t] - prefix[lo]) / static_cast<double>(t - lo);
    d[t] = right - left;
  }
  return d;
}

// Interior indices of strict local extrema; plateaus report their middle.
inline std::vector<std::size_t> peaks(const std::vector<double>& d, double threshold, bool maxima) {
  std::vector<std::size_t> out;
  const std::size_t n = d.size();
  std::size_t s = 1;
  while (s + 1 < n) {
    std::size_t e = s;
    while (e + 2 < n && d[e + 1] == d[s]) ++e;
    const double v = d[s];
    const bool extreme = maxima ? (d[s - 1] < v && d[e + 1] < v && v > threshold)
                                : (d[s - 1] > v && d[e + 1] > v && v < -threshold);
    if (extreme) out.push_back((s + e) / 2);
    s = e + 1;
  }
  return out;
}

inline double segment_score(const std::vector<double>& raw, std::size_t begin, std::size_t end,
                            SegmentScore mode) {
  if (mode == SegmentScore::Max) return *std::max_element(raw.begin() + begin, raw.begin() + end);
  double s = 0.0;
  for (std::size_t t = begin; t < end; ++t) s += raw[t];
  return s / static_cast<double>(end - begin);
}

// Segments partitioning [0, T) at the detected change points.
inline std::vector<Segment> segments(const std::vector<double>& raw, const CSebbSpec& spec) {
  const std::size_t T = raw.size();
  auto y = smooth(raw, spec.avg_window);
  auto d = step_response(y, spec.step_window);
  std::vector<std::size_t> cuts = peaks(d, spec.onset_threshold, true);
  auto falls = peaks(d, spec.offset_threshold, false);
  cuts.insert(cuts.end(), falls.begin(), falls.end());
  cuts.push_back(0);
  cuts.push_back(T);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  std::vector<Segment> segs;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
    segs.push_back({cuts[i], cuts[i + 1], segment_score(raw, cuts[i], cuts[i + 1], spec.score_mode)});
  return segs;
}

// A dip g between neighbours a and b is absorbed when
// score(g) >= ratio * min(score(a), score(b)). Leftmost eligible dip first.
inline std::vector<Segment> merge(std::vector<Segment> segs, const std::vector<double>& raw,
                                  const CSebbSpec& spec) {
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 1; i + 1 < segs.size(); ++i) {
      const Segment& a = segs[i - 1];
      const Segment& g = segs[i];
      const Segment& b = segs[i + 1];
      if (!(g.score < a.score && g.score < b.score)) continue;
      if (g.score < spec.merge_ratio * std::min(a.score, b.score)) continue;
      Segment merged{a.begin, b.end, segment_score(raw, a.begin, b.end, spec.score_mode)};
      segs.erase(segs.begin() + static_cast<std::ptrdiff_t>(i - 1),
                 segs.begin() + static_cast<std::ptrdiff_t>(i + 2));
      segs.insert(segs.begin() + static_cast<std::ptrdiff_t>(i - 1), merged);
      changed = true;
      break;
    }
  }
  return segs;
}

// Boxes for one confidence curve, as frame ranges.
inline std::vector<Segment> extract(const std::vector<double>& raw, const CSebbSpec& spec) {
  std::vector<Segment> out;
  if (raw.empty()) return out;
  for (const Segment& s : merge(segments(raw, spec), raw, spec))
    if (s.score > spec.score_floor) out.push_back(s);
  return out;
}

}  // namespace csebb

// Per class, time-sorted, non-overlapping boxes; classes in vocabulary order.
inline std::vector<EventBox> csebb_extract(const ScoreMatrix& m, const CSebbSpec& spec,
                                           const ClassVocabulary& vocab) {
  spec.validate();
  if (vocab.size() != m.classes())
    throw ValidationError("score matrix class count does not match vocabulary");
  std::vector<EventBox> out;
  for (std::size_t c = 0; c < m.classes(); ++c) {
    for (const Segment& s : csebb::extract(m.column(c), spec)) {
      out.push_back({m.clip_id(), vocab.name(c), static_cast<double>(s.begin) * m.frame_period(),
                     static_cast<double>(s.end) * m.frame_period(), s.score});
    }
  }
  return out;
}

}  // namespace fredkit
