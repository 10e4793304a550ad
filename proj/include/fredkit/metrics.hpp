#pragma once

// Threshold-independent evaluation: PSDS1 over event detections with
// intersection-based matching, segment-based macro partial AUC (MPAUC) over
// coarse scores, and their sum used for model selection.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "fredkit/core.hpp"

namespace fredkit {

struct PsdsSpec {
  double rho_dtc = 0.7;
  double rho_gtc = 0.7;
  double alpha_st = 1.0;
  double alpha_ct = 0.0;  // cross-trigger cost; must stay 0
  double e_max = 100.0;   // false positives per hour

  void validate() const {
    if (!(rho_dtc > 0.0 && rho_dtc <= 1.0) || !(rho_gtc > 0.0 && rho_gtc <= 1.0))
      throw ValidationError("PSDS intersection criteria must lie in (0,1]");
    if (!(e_max > 0.0)) throw ValidationError("PSDS e_max must be positive");
    if (alpha_st < 0.0) throw ValidationError("PSDS alpha_st must be >= 0");
    if (alpha_ct != 0.0) throw ValidationError("cross-trigger cost is not supported (alpha_ct must be 0)");
  }
};

struct MatchCounts {
  std::size_t tp = 0;    // ground-truth events detected
  std::size_t fp = 0;    // detections failing the DTC
  std::size_t n_gt = 0;  // ground-truth events
};

namespace psds_detail {

inline double overlap(const EventBox& a, const EventBox& b) {
  return std::max(0.0, std::min(a.offset, b.offset) - std::max(a.onset, b.onset));
}

using Key = std::pair<std::string, std::string>;  // (class, clip)

inline std::map<Key, std::vector<const EventBox*>> group(const std::vector<EventBox>& events) {
  std::map<Key, std::vector<const EventBox*>> out;
  for (const auto& e : events) out[{e.class_name, e.clip_id}].push_back(&e);
  return out;
}

}  // namespace psds_detail

// Per class: a detection is DTC-valid when its summed overlap with same-clip
// same-class ground truth covers >= rho_dtc of its duration, otherwise it is
// a false positive. A ground-truth event is a true positive when its summed
// overlap with DTC-valid detections covers >= rho_gtc of its duration.
inline std::map<std::string, MatchCounts> match_detections(const std::vector<EventBox>& dets,
                                                           const std::vector<EventBox>& gts,
                                                           const PsdsSpec& spec) {
  using namespace psds_detail;
  std::map<std::string, MatchCounts> out;
  auto det_groups = group(dets);
  auto gt_groups = group(gts);
  static const std::vector<const EventBox*> none;
  for (const auto& [key, gs] : gt_groups) out[key.first].n_gt += gs.size();
  for (const auto& [key, ds] : det_groups) {
    auto it = gt_groups.find(key);
    const auto& gs = it == gt_groups.end() ? none : it->second;
    std::vector<const EventBox*> valid;
    for (const EventBox* d : ds) {
      double inter = 0.0;
      for (const EventBox* g : gs) inter += overlap(*d, *g);
      if (inter / d->duration() >= spec.rho_dtc)
        valid.push_back(d);
      else
        ++out[key.first].fp;
    }
    for (const EventBox* g : gs) {
      double inter = 0.0;
      for (const EventBox* d : valid) inter += overlap(*d, *g);
      if (inter / g->duration() >= spec.rho_gtc) ++out[key.first].tp;
    }
  }
  return out;
}

struct OperatingPoint {
  double threshold = 0.0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  double tpr = 0.0;
  double efpr = 0.0;  // false positives per hour
};

// Per-class operating points, one per threshold, thresholds descending
// (sentinel first). Classes are those present in detections or ground truth.
struct PsdRoc {
  std::map<std::string, std::vector<OperatingPoint>> curves;
  std::map<std::string, std::size_t> n_gt;
};

inline double sentinel_threshold() { return std::nextafter(1.0, 2.0); }

inline PsdRoc psd_roc(const std::vector<EventBox>& dets, const std::vector<EventBox>& gts,
                      double dataset_hours, const PsdsSpec& spec) {
  spec.validate();
  if (!(dataset_hours > 0.0)) throw ValidationError("dataset duration must be positive");
  std::set<double> distinct;
  for (const auto& d : dets) distinct.insert(d.score);
  std::vector<double> thresholds(distinct.rbegin(), distinct.rend());
  thresholds.insert(thresholds.begin(), sentinel_threshold());

  std::set<std::string> classes;
  for (const auto& e : dets) classes.insert(e.class_name);
  for (const auto& e : gts) classes.insert(e.class_name);

  std::vector<EventBox> sorted = dets;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const EventBox& a, const EventBox& b) { return a.score > b.score; });

  PsdRoc roc;
  for (const auto& e : gts) ++roc.n_gt[e.class_name];
  for (const auto& c : classes) roc.n_gt.try_emplace(c, 0);

  std::vector<EventBox> active;
  std::size_t next = 0;
  for (double th : thresholds) {
    while (next < sorted.size() && sorted[next].score >= th) active.push_back(sorted[next++]);
    auto counts = match_detections(active, gts, spec);
    for (const auto& c : classes) {
      const MatchCounts mc = counts.count(c) ? counts.at(c) : MatchCounts{};
      OperatingPoint op;
      op.threshold = th;
      op.tp = mc.tp;
      op.fp = mc.fp;
      op.tpr = static_cast<double>(mc.tp) / static_cast<double>(std::max<std::size_t>(1, roc.n_gt[c]));
      op.efpr = static_cast<double>(mc.fp) / dataset_hours;
      roc.curves[c].push_back(op);
    }
  }
  return roc;
}

// Monotone upper staircase: best TPR among points with eFPR <= e.
inline double staircase_tpr(const std::vector<OperatingPoint>& ops, double efpr) {
  double best = 0.0;
  for (const auto& op : ops)
    if (op.efpr <= efpr) best = std::max(best, op.tpr);
  return best;
}

struct PsdsResult {
  double value = 0.0;
  PsdRoc roc;
  std::vector<std::string> classes;  // classes entering the average
};

// Normalized area under max(0, mean - alpha_st * std) of the per-class
// staircases over [0, e_max], integrated exactly on the merged breakpoints.
inline PsdsResult psds1_detailed(const std::vector<EventBox>& dets, const std::vector<EventBox>& gts,
                                 double dataset_hours, const PsdsSpec& spec) {
  PsdsResult res;
  res.roc = psd_roc(dets, gts, dataset_hours, spec);
  for (const auto& [c, n] : res.roc.n_gt)
    if (n > 0) res.classes.push_back(c);
  if (res.classes.empty()) throw ValidationError("no ground-truth events: PSDS is undefined");

  std::vector<double> breaks{0.0};
  for (const auto& c : res.classes)
    for (const auto& op : res.roc.curves.at(c))
      if (op.efpr < spec.e_max) breaks.push_back(op.efpr);
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  breaks.push_back(spec.e_max);

  const double n = static_cast<double>(res.classes.size());
  double area = 0.0;
  std::vector<double> rates(res.classes.size());
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    double mean = 0.0;
    for (std::size_t k = 0; k < rates.size(); ++k) {
      rates[k] = staircase_tpr(res.roc.curves.at(res.classes[k]), breaks[i]);
      mean += rates[k];
    }
    mean /= n;
    double var = 0.0;
    for (double r : rates) var += (r - mean) * (r - mean);
    var /= n;
    const double eff = std::max(0.0, mean - spec.alpha_st * std::sqrt(var));
    area += eff * (breaks[i + 1] - breaks[i]);
  }
  res.value = std::clamp(area / spec.e_max, 0.0, 1.0);
  return res;
}

inline double psds1(const std::vector<EventBox>& dets, const std::vector<EventBox>& gts,
                    double dataset_hours, const PsdsSpec& spec) {
  return psds1_detailed(dets, gts, dataset_hours, spec).value;
}

struct MpaucSpec {
  double max_fpr = 0.1;
  double segment_length = 1.0;  // seconds
  double gt_binarize = 0.5;
  bool standardized = true;

  void validate() const {
    if (!(max_fpr > 0.0 && max_fpr <= 1.0)) throw ValidationError("max_fpr must lie in (0,1]");
    if (!(segment_length > 0.0)) throw ValidationError("segment_length must be positive");
    if (!(gt_binarize >= 0.0 && gt_binarize <= 1.0)) throw ValidationError("gt_binarize outside [0,1]");
  }
};

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};

// ROC points from (0,0) to (1,1), one per distinct score (ties form one step).
inline std::vector<RocPoint> roc_curve(std::vector<std::pair<double, bool>> pairs) {
  std::sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  double pos = 0, neg = 0;
  for (const auto& p : pairs) (p.second ? pos : neg) += 1.0;
  std::vector<RocPoint> pts{{0.0, 0.0}};
  double tp = 0, fp = 0;
  for (std::size_t i = 0; i < pairs.size();) {
    std::size_t j = i;
    while (j < pairs.size() && pairs[j].first == pairs[i].first) {
      (pairs[j].second ? tp : fp) += 1.0;
      ++j;
    }
    pts.push_back({fp / neg, tp / pos});
    i = j;
  }
  return pts;
}

// Trapezoidal area under the ROC for fpr in [0, max_fpr].
inline double partial_auc(const std::vector<RocPoint>& pts, double max_fpr) {
  double area = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const RocPoint a = pts[i], b = pts[i + 1];
    if (a.fpr >= max_fpr) break;
    if (b.fpr <= max_fpr) {
      area += (b.fpr - a.fpr) * (a.tpr + b.tpr) / 2.0;
    } else {
      const double tpr_cut = a.tpr + (b.tpr - a.tpr) * (max_fpr - a.fpr) / (b.fpr - a.fpr);
      area += (max_fpr - a.fpr) * (a.tpr + tpr_cut) / 2.0;
    }
  }
  return area;
}

// McClish correction: chance maps to 0.5, perfect to 1.
inline double standardize_partial_auc(double area, double max_fpr) {
  const double min_area = max_fpr * max_fpr / 2.0;
  return 0.5 * (1.0 + (area - min_area) / (max_fpr - min_area));
}

struct MpaucResult {
  double value = 0.0;
  std::map<std::string, double> per_class;
  std::vector<std::string> skipped;  // classes lacking positives or negatives
};

// Pools (segment score, binarized soft label) pairs across clips per class.
// Ground truth is matched to scores by clip id; frame counts must agree.
inline MpaucResult mpauc_detailed(const std::vector<ScoreMatrix>& scores,
                                  const std::vector<ScoreMatrix>& soft_gts, const MpaucSpec& spec,
                                  const std::vector<bool>& class_subset,
                                  const ClassVocabulary& vocab) {
  spec.validate();
  if (class_subset.size() != vocab.size()) throw ValidationError("class subset does not match vocabulary");
  std::map<std::string, const ScoreMatrix*> gt_by_clip;
  for (const auto& g : soft_gts) {
    if (g.classes() != vocab.size()) throw ValidationError("ground truth for " + g.clip_id() + " has wrong class count");
    if (!gt_by_clip.emplace(g.clip_id(), &g).second)
      throw ValidationError("duplicate ground truth for clip " + g.clip_id());
  }
  std::vector<std::vector<std::pair<double, bool>>> pairs(vocab.size());
  for (const auto& s : scores) {
    if (s.classes() != vocab.size()) throw ValidationError("scores for " + s.clip_id() + " have wrong class count");
    auto it = gt_by_clip.find(s.clip_id());
    if (it == gt_by_clip.end()) throw ValidationError("no ground truth for clip " + s.clip_id());
    const ScoreMatrix& g = *it->second;
    if (g.frames() != s.frames())
      throw ValidationError("segment count mismatch for clip " + s.clip_id() + ": scores " +
                            std::to_string(s.frames()) + ", ground truth " + std::to_string(g.frames()));
    if (std::abs(s.frame_period() - spec.segment_length) > 0.05 * spec.segment_length)
      throw ValidationError("score resolution of clip " + s.clip_id() + " does not match segment length");
    for (std::size_t c = 0; c < vocab.size(); ++c) {
      if (!class_subset[c]) continue;
      for (std::size_t t = 0; t < s.frames(); ++t)
        pairs[c].emplace_back(s.at(t, c), g.at(t, c) >= spec.gt_binarize);
    }
  }
  MpaucResult res;
  double sum = 0.0;
  for (std::size_t c = 0; c < vocab.size(); ++c) {
    if (!class_subset[c]) continue;
    const auto n_pos = std::count_if(pairs[c].begin(), pairs[c].end(), [](const auto& p) { return p.second; });
    if (n_pos == 0 || n_pos == static_cast<std::ptrdiff_t>(pairs[c].size())) {
      res.skipped.push_back(vocab.name(c));
      continue;
    }
    double a = partial_auc(roc_curve(pairs[c]), spec.max_fpr);
    if (spec.standardized) a = standardize_partial_auc(a, spec.max_fpr);
    res.per_class[vocab.name(c)] = a;
    sum += a;
  }
  if (res.per_class.empty())
    throw ValidationError("MPAUC undefined: no class has both positive and negative segments");
  res.value = sum / static_cast<double>(res.per_class.size());
  return res;
}

inline double mpauc(const std::vector<ScoreMatrix>& scores, const std::vector<ScoreMatrix>& soft_gts,
                    const MpaucSpec& spec, const std::vector<bool>& class_subset,
                    const ClassVocabulary& vocab) {
  return mpauc_detailed(scores, soft_gts, spec, class_subset, vocab).value;
}

inline double sum_score(double psds1_value, double mpauc_value) { return psds1_value + mpauc_value; }

}  // namespace fredkit
