#pragma once

// Self-training label plumbing: clip-level confidences, pseudo-label
// filtering for large unlabeled corpora, weak-label masking and hardening.
// All thresholds are inclusive (>=).

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "fredkit/core.hpp"

namespace fredkit {

struct WeakLabel {
  std::string clip_id;
  std::set<std::string> present_classes;
};

struct PseudoFilterSpec {
  double keep_threshold = 0.7;
  double floor_threshold = 0.01;
  double hard_threshold = 0.5;
  std::set<std::string> speech_like = {"Speech", "people talking", "children voices"};

  void validate() const {
    if (!(0.0 <= floor_threshold && floor_threshold <= hard_threshold &&
          hard_threshold <= keep_threshold && keep_threshold <= 1.0))
      throw ValidationError("pseudo-label thresholds must satisfy 0 <= floor <= hard <= keep <= 1");
  }

  void validate(const ClassVocabulary& vocab) const {
    validate();
    for (const auto& name : speech_like)
      if (!vocab.contains(name)) throw ValidationError("unknown speech-like class: " + name);
  }
};

// Frame maximum per class.
inline std::vector<double> clip_confidence(const ScoreMatrix& m) {
  std::vector<double> out(m.classes(), 0.0);
  for (std::size_t t = 0; t < m.frames(); ++t)
    for (std::size_t c = 0; c < m.classes(); ++c) out[c] = std::max(out[c], m.at(t, c));
  return out;
}

struct PseudoFilterResult {
  std::vector<std::string> kept;  // sorted
  // clip -> class -> confidence, entries below the floor removed
  std::map<std::string, std::map<std::string, double>> labels;
};

// Keeps a clip iff some class reaches keep_threshold and the set of such
// classes is not made only of speech-like classes. Decisions use the raw
// confidences; pruning happens afterwards.
inline bool keep_clip(const std::vector<double>& conf, const PseudoFilterSpec& spec,
                      const ClassVocabulary& vocab) {
  bool any = false, non_speech = false;
  for (std::size_t c = 0; c < conf.size(); ++c) {
    if (conf[c] < spec.keep_threshold) continue;
    any = true;
    if (!spec.speech_like.count(vocab.name(c))) non_speech = true;
  }
  return any && non_speech;
}

inline PseudoFilterResult filter_audioset(const std::map<std::string, std::vector<double>>& confidences,
                                          const PseudoFilterSpec& spec,
                                          const ClassVocabulary& vocab) {
  spec.validate(vocab);
  PseudoFilterResult out;
  for (const auto& [clip, conf] : confidences) {
    if (conf.size() != vocab.size())
      throw ValidationError("confidence vector for " + clip + " does not match vocabulary size");
    if (!keep_clip(conf, spec, vocab)) continue;
    out.kept.push_back(clip);
    auto& labels = out.labels[clip];
    for (std::size_t c = 0; c < conf.size(); ++c)
      if (conf[c] >= spec.floor_threshold) labels[vocab.name(c)] = conf[c];
  }
  return out;
}

inline ScoreMatrix mask_weak(const ScoreMatrix& m, const WeakLabel& weak, const ClassVocabulary& vocab) {
  if (vocab.size() != m.classes())
    throw ValidationError("score matrix class count does not match vocabulary");
  std::vector<bool> mask(m.classes(), false);
  for (const auto& name : weak.present_classes) mask[vocab.index_of(name)] = true;
  return apply_dataset_mask(m, mask);
}

inline ScoreMatrix harden(const ScoreMatrix& m, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw ValidationError("hard threshold outside [0,1]");
  std::vector<double> v(m.values().size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = m.values()[i] >= threshold ? 1.0 : 0.0;
  return ScoreMatrix(m.clip_id(), m.frame_period(), m.frames(), m.classes(), std::move(v));
}

// `clip_id<TAB>class1,class2,...`; an empty class list is allowed.
inline std::map<std::string, WeakLabel> parse_weak_labels_tsv(std::string_view text,
                                                              const ClassVocabulary* vocab = nullptr) {
  std::map<std::string, WeakLabel> out;
  auto lines = detail::lines_of(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto cols = detail::split(lines[i], '\t');
    if (i == 0 && !cols.empty() && (cols[0] == "clip_id" || cols[0] == "filename")) continue;
    if (cols.size() > 2 || cols[0].empty())
      throw ValidationError("malformed weak label row" + detail::at_line(i + 1));
    WeakLabel w{std::string(cols[0]), {}};
    if (cols.size() == 2 && !cols[1].empty()) {
      for (auto name : detail::split(cols[1], ',')) {
        std::string n(detail::trim(name));
        if (n.empty()) continue;
        if (vocab && !vocab->contains(n))
          throw ValidationError("unknown class '" + n + "'" + detail::at_line(i + 1));
        w.present_classes.insert(std::move(n));
      }
    }
    if (!out.emplace(w.clip_id, w).second)
      throw ValidationError("duplicate clip in weak labels" + detail::at_line(i + 1));
  }
  return out;
}

}  // namespace fredkit
