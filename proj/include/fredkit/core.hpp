#pragma once

// Shared data model: class vocabulary, frame-level score matrices, event
// boxes and clip manifests, plus the TSV/CSV readers and writers every stage
// uses to exchange them.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

namespace fredkit {

// Bad input data or configuration. Maps to CLI exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unreadable or unwritable files. Maps to CLI exit code 2.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

inline std::string_view strip_cr(std::string_view s) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  return s;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

inline bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

inline bool parse_int(std::string_view s, long long& out) {
  s = trim(s);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return !s.empty() && ec == std::errc() && ptr == s.data() + s.size();
}

// Shortest round-trip decimal representation.
inline std::string format_shortest(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

inline std::string format_fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  std::string s(buf);
  if (s.starts_with("-") && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

inline std::vector<std::string_view> lines_of(std::string_view text) {
  auto lines = split(text, '\n');
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  for (auto& l : lines) l = strip_cr(l);
  return lines;
}

inline std::string at_line(std::size_t line) { return " at line " + std::to_string(line); }

}  // namespace detail

// Ordered class labels with per-dataset membership masks.
class ClassVocabulary {
 public:
  ClassVocabulary() = default;

  ClassVocabulary(std::vector<std::string> names, std::vector<bool> desed_mask,
                  std::vector<bool> maestro_mask)
      : names_(std::move(names)),
        desed_mask_(std::move(desed_mask)),
        maestro_mask_(std::move(maestro_mask)) {
    if (desed_mask_.size() != names_.size() || maestro_mask_.size() != names_.size())
      throw ValidationError("vocabulary mask length does not match class count");
    for (std::size_t i = 0; i < names_.size(); ++i) {
      if (names_[i].empty()) throw ValidationError("empty class name in vocabulary");
      if (!index_.emplace(names_[i], i).second)
        throw ValidationError("duplicate class name in vocabulary: " + names_[i]);
    }
  }

  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<bool>& desed_mask() const { return desed_mask_; }
  const std::vector<bool>& maestro_mask() const { return maestro_mask_; }
  const std::string& name(std::size_t i) const { return names_.at(i); }

  bool contains(std::string_view name) const { return index_.count(std::string(name)) > 0; }

  std::size_t index_of(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) throw ValidationError("unknown class: " + std::string(name));
    return it->second;
  }

  std::vector<bool> all_mask() const { return std::vector<bool>(names_.size(), true); }

 private:
  std::vector<std::string> names_;
  std::vector<bool> desed_mask_;
  std::vector<bool> maestro_mask_;
  std::unordered_map<std::string, std::size_t> index_;
};

// 10 DESED + 17 MAESTRO classes, named as in the public challenge metadata.
// Mirrors data/vocabulary.tsv.
inline ClassVocabulary default_vocabulary() {
  static const char* desed[] = {"Alarm_bell_ringing", "Blender", "Cat", "Dishes", "Dog",
                                "Electric_shaver_toothbrush", "Frying", "Running_water",
                                "Speech", "Vacuum_cleaner"};
  static const char* maestro[] = {
      "cutlery and dishes", "furniture dragging", "people talking", "children voices",
      "coffee machine", "footsteps", "large_vehicle", "car", "brakes_squeaking",
      "cash register beeping", "announcement", "shopping cart", "metro leaving",
      "metro approaching", "door opens/closes", "wind_blowing", "birds_singing"};
  std::vector<std::string> names;
  std::vector<bool> d, m;
  for (const char* n : desed) {
    names.emplace_back(n);
    d.push_back(true);
    m.push_back(false);
  }
  for (const char* n : maestro) {
    names.emplace_back(n);
    d.push_back(false);
    m.push_back(true);
  }
  return ClassVocabulary(std::move(names), std::move(d), std::move(m));
}

// TSV `class_name<TAB>in_desed(0/1)<TAB>in_maestro(0/1)`, optional header line.
inline ClassVocabulary parse_vocabulary_tsv(std::string_view text) {
  std::vector<std::string> names;
  std::vector<bool> d, m;
  auto lines = detail::lines_of(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto cols = detail::split(lines[i], '\t');
    if (i == 0 && cols.size() == 3 && cols[0] == "class_name") continue;
    auto flag = [&](std::string_view s) {
      if (s == "0") return false;
      if (s == "1") return true;
      throw ValidationError("vocabulary mask must be 0 or 1" + detail::at_line(i + 1));
    };
    if (cols.size() != 3) throw ValidationError("vocabulary row needs 3 columns" + detail::at_line(i + 1));
    names.emplace_back(cols[0]);
    d.push_back(flag(cols[1]));
    m.push_back(flag(cols[2]));
  }
  if (names.empty()) throw ValidationError("vocabulary is empty");
  return ClassVocabulary(std::move(names), std::move(d), std::move(m));
}

inline ClassVocabulary load_vocabulary(const std::filesystem::path& path) {
  return parse_vocabulary_tsv(detail::read_file(path));
}

inline std::string format_vocabulary_tsv(const ClassVocabulary& vocab) {
  std::string out = "class_name\tin_desed\tin_maestro\n";
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    out += vocab.name(i);
    out += vocab.desed_mask()[i] ? "\t1" : "\t0";
    out += vocab.maestro_mask()[i] ? "\t1\n" : "\t0\n";
  }
  return out;
}

// Frame x class confidences for one clip, row-major, every entry in [0,1].
class ScoreMatrix {
 public:
  ScoreMatrix() = default;

  ScoreMatrix(std::string clip_id, double frame_period, std::size_t frames, std::size_t classes,
              std::vector<double> values)
      : clip_id_(std::move(clip_id)),
        frame_period_(frame_period),
        frames_(frames),
        classes_(classes),
        values_(std::move(values)) {
    if (!(frame_period_ > 0.0) || !std::isfinite(frame_period_))
      throw ValidationError("frame period must be positive");
    if (frames_ == 0) throw ValidationError("no frames");
    if (values_.size() != frames_ * classes_)
      throw ValidationError("score matrix size does not match frames x classes");
    for (std::size_t i = 0; i < values_.size(); ++i) {
      double v = values_[i];
      if (!(v >= 0.0 && v <= 1.0))
        throw ValidationError("score outside [0,1] at frame " + std::to_string(i / classes_) +
                              ", class " + std::to_string(i % classes_) + " of " + clip_id_);
    }
  }

  static ScoreMatrix zeros(std::string clip_id, double frame_period, std::size_t frames,
                           std::size_t classes) {
    return ScoreMatrix(std::move(clip_id), frame_period, frames, classes,
                       std::vector<double>(frames * classes, 0.0));
  }

  const std::string& clip_id() const { return clip_id_; }
  double frame_period() const { return frame_period_; }
  std::size_t frames() const { return frames_; }
  std::size_t classes() const { return classes_; }
  double duration() const { return static_cast<double>(frames_) * frame_period_; }
  const std::vector<double>& values() const { return values_; }

  double at(std::size_t frame, std::size_t cls) const { return values_[frame * classes_ + cls]; }

  std::vector<double> column(std::size_t cls) const {
    std::vector<double> out(frames_);
    for (std::size_t t = 0; t < frames_; ++t) out[t] = at(t, cls);
    return out;
  }

  bool same_shape(const ScoreMatrix& o) const {
    return frames_ == o.frames_ && classes_ == o.classes_;
  }

  friend bool operator==(const ScoreMatrix& a, const ScoreMatrix& b) {
    return a.clip_id_ == b.clip_id_ && a.frame_period_ == b.frame_period_ && a.same_shape(b) &&
           a.values_ == b.values_;
  }

 private:
  std::string clip_id_;
  double frame_period_ = 1.0;
  std::size_t frames_ = 0;
  std::size_t classes_ = 0;
  std::vector<double> values_;
};

// Detection or ground-truth interval; ground truth carries score 1.
struct EventBox {
  std::string clip_id;
  std::string class_name;
  double onset = 0.0;
  double offset = 0.0;
  double score = 1.0;

  double duration() const { return offset - onset; }

  friend bool operator==(const EventBox&, const EventBox&) = default;
};

inline void validate_event(const EventBox& e) {
  if (!(e.onset >= 0.0)) throw ValidationError("negative onset for " + e.clip_id);
  if (!(e.onset < e.offset)) throw ValidationError("onset >= offset for " + e.clip_id);
  if (!(e.score >= 0.0 && e.score <= 1.0)) throw ValidationError("score outside [0,1]");
}

inline bool event_less(const EventBox& a, const EventBox& b) {
  return std::tie(a.clip_id, a.onset, a.class_name, a.offset, a.score) <
         std::tie(b.clip_id, b.onset, b.class_name, b.offset, b.score);
}

// Header `filename onset offset event_label [score]`, tab separated.
inline std::vector<EventBox> parse_events_tsv_text(std::string_view text,
                                                   const ClassVocabulary* vocab = nullptr) {
  auto lines = detail::lines_of(text);
  if (lines.empty()) throw ValidationError("events file is empty (missing header)");
  auto header = detail::split(lines[0], '\t');
  bool has_score = false;
  if (header.size() == 5 && header[4] == "score") {
    has_score = true;
  } else if (header.size() != 4) {
    throw ValidationError("bad events header" + detail::at_line(1));
  }
  if (header[0] != "filename" || header[1] != "onset" || header[2] != "offset" ||
      header[3] != "event_label")
    throw ValidationError("bad events header" + detail::at_line(1));

  std::vector<EventBox> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto cols = detail::split(lines[i], '\t');
    const std::size_t line_no = i + 1;
    if (cols.size() != (has_score ? 5u : 4u))
      throw ValidationError("malformed row" + detail::at_line(line_no));
    EventBox e;
    e.clip_id = std::string(cols[0]);
    e.class_name = std::string(cols[3]);
    if (e.clip_id.empty() || e.class_name.empty())
      throw ValidationError("malformed row" + detail::at_line(line_no));
    if (!detail::parse_double(cols[1], e.onset) || !detail::parse_double(cols[2], e.offset))
      throw ValidationError("malformed time" + detail::at_line(line_no));
    if (has_score && !detail::parse_double(cols[4], e.score))
      throw ValidationError("malformed score" + detail::at_line(line_no));
    if (e.onset < 0.0) throw ValidationError("negative onset" + detail::at_line(line_no));
    if (e.onset >= e.offset) throw ValidationError("onset ≥ offset" + detail::at_line(line_no));
    if (e.score < 0.0 || e.score > 1.0)
      throw ValidationError("score outside [0,1]" + detail::at_line(line_no));
    if (vocab && !vocab->contains(e.class_name))
      throw ValidationError("unknown class '" + e.class_name + "'" + detail::at_line(line_no));
    out.push_back(std::move(e));
  }
  return out;
}

inline std::vector<EventBox> parse_events_tsv(const std::filesystem::path& path,
                                              const ClassVocabulary* vocab = nullptr) {
  return parse_events_tsv_text(detail::read_file(path), vocab);
}

// Rows sorted by (clip, onset, class); times with 3 decimals, scores with 6.
inline std::string format_events_tsv(std::vector<EventBox> events, bool with_scores) {
  for (const auto& e : events) validate_event(e);
  std::sort(events.begin(), events.end(), event_less);
  std::string out = with_scores ? "filename\tonset\toffset\tevent_label\tscore\n"
                                : "filename\tonset\toffset\tevent_label\n";
  for (const auto& e : events) {
    out += e.clip_id;
    out += '\t';
    out += detail::format_fixed(e.onset, 3);
    out += '\t';
    out += detail::format_fixed(e.offset, 3);
    out += '\t';
    out += e.class_name;
    if (with_scores) {
      out += '\t';
      out += detail::format_fixed(e.score, 6);
    }
    out += '\n';
  }
  return out;
}

// Comma separated, header = class names in vocabulary order, one row per frame.
inline ScoreMatrix parse_score_csv_text(std::string_view text, std::string clip_id,
                                        double frame_period, const ClassVocabulary& vocab) {
  auto lines = detail::lines_of(text);
  if (lines.empty()) throw ValidationError("score file is empty (missing header)");
  auto header = detail::split(lines[0], ',');
  if (header.size() != vocab.size())
    throw ValidationError("score header has " + std::to_string(header.size()) +
                          " columns, vocabulary has " + std::to_string(vocab.size()));
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (detail::trim(header[c]) != vocab.name(c))
      throw ValidationError("score header column " + std::to_string(c + 1) + " is '" +
                            std::string(header[c]) + "', expected '" + vocab.name(c) + "'");
  }
  std::vector<double> values;
  std::size_t frames = 0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto cells = detail::split(lines[i], ',');
    if (cells.size() != vocab.size())
      throw ValidationError("wrong column count in score row" + detail::at_line(i + 1));
    for (std::size_t c = 0; c < cells.size(); ++c) {
      double v = 0.0;
      if (!detail::parse_double(cells[c], v))
        throw ValidationError("non-numeric cell at row " + std::to_string(i + 1) + ", column " +
                              std::to_string(c + 1));
      if (v < 0.0 || v > 1.0)
        throw ValidationError("value outside [0,1] at row " + std::to_string(i + 1) +
                              ", column " + std::to_string(c + 1));
      values.push_back(v);
    }
    ++frames;
  }
  if (frames == 0) throw ValidationError("no frames");
  return ScoreMatrix(std::move(clip_id), frame_period, frames, vocab.size(), std::move(values));
}

// Clip id is the file name without the trailing ".csv".
inline std::string clip_id_from_path(const std::filesystem::path& path) {
  std::string name = path.filename().string();
  if (name.ends_with(".csv")) name.resize(name.size() - 4);
  return name;
}

inline ScoreMatrix parse_score_csv(const std::filesystem::path& path, double frame_period,
                                   const ClassVocabulary& vocab) {
  try {
    return parse_score_csv_text(detail::read_file(path), clip_id_from_path(path), frame_period,
                                vocab);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

inline std::string format_score_csv(const ScoreMatrix& m, const ClassVocabulary& vocab) {
  if (m.classes() != vocab.size())
    throw ValidationError("score matrix class count does not match vocabulary");
  std::string out;
  for (std::size_t c = 0; c < vocab.size(); ++c) {
    if (c) out += ',';
    out += vocab.name(c);
  }
  out += '\n';
  for (std::size_t t = 0; t < m.frames(); ++t) {
    for (std::size_t c = 0; c < m.classes(); ++c) {
      if (c) out += ',';
      out += detail::format_shortest(m.at(t, c));
    }
    out += '\n';
  }
  return out;
}

// Columns with mask=false are zeroed.
inline ScoreMatrix apply_dataset_mask(const ScoreMatrix& m, const std::vector<bool>& mask) {
  if (mask.size() != m.classes())
    throw ValidationError("mask length " + std::to_string(mask.size()) +
                          " does not match class count " + std::to_string(m.classes()));
  std::vector<double> v = m.values();
  for (std::size_t t = 0; t < m.frames(); ++t)
    for (std::size_t c = 0; c < m.classes(); ++c)
      if (!mask[c]) v[t * m.classes() + c] = 0.0;
  return ScoreMatrix(m.clip_id(), m.frame_period(), m.frames(), m.classes(), std::move(v));
}

struct ClipManifest {
  std::vector<std::pair<std::string, double>> entries;

  void validate() const {
    std::set<std::string> seen;
    for (const auto& [id, dur] : entries) {
      if (!seen.insert(id).second) throw ValidationError("duplicate clip id in manifest: " + id);
      if (!(dur > 0.0)) throw ValidationError("non-positive duration for clip " + id);
    }
  }

  std::map<std::string, double> as_map() const {
    return std::map<std::string, double>(entries.begin(), entries.end());
  }
};

// `clip_id<TAB>duration_seconds`, optional header.
inline ClipManifest parse_manifest_tsv(std::string_view text) {
  ClipManifest m;
  auto lines = detail::lines_of(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto cols = detail::split(lines[i], '\t');
    if (i == 0 && cols.size() == 2 && cols[0] == "clip_id") continue;
    double dur = 0.0;
    if (cols.size() != 2 || !detail::parse_double(cols[1], dur))
      throw ValidationError("malformed manifest row" + detail::at_line(i + 1));
    m.entries.emplace_back(std::string(cols[0]), dur);
  }
  m.validate();
  return m;
}

inline std::string format_manifest_tsv(const ClipManifest& m) {
  m.validate();
  auto entries = m.entries;
  std::sort(entries.begin(), entries.end());
  std::string out = "clip_id\tduration_seconds\n";
  for (const auto& [id, dur] : entries) out += id + '\t' + detail::format_shortest(dur) + '\n';
  return out;
}

}  // namespace fredkit
