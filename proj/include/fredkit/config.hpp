#pragma once

// Whole-pipeline configuration with JSON round-trip. Unknown keys are
// rejected; omitted keys keep their defaults.

#include <cstdint>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "fredkit/augment.hpp"
#include "fredkit/core.hpp"
#include "fredkit/metrics.hpp"
#include "fredkit/pooling.hpp"
#include "fredkit/postproc.hpp"
#include "fredkit/pseudolabel.hpp"

namespace fredkit {

struct PipelineConfig {
  std::uint64_t seed = 42;
  AugmentConfig augment;
  PoolingSpec pooling;
  MedianSpec median;
  CSebbSpec csebb;
  PseudoFilterSpec pseudo;
  PsdsSpec psds;
  MpaucSpec mpauc;

  void validate() const {
    augment.validate();
    pooling.validate();
    median.validate();
    csebb.validate();
    pseudo.validate();
    psds.validate();
    mpauc.validate();
  }
};

namespace config_detail {

using nlohmann::json;

class Reader {
 public:
  Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ValidationError(where_ + " must be a JSON object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      throw ValidationError(where_ + "." + key + " has the wrong type");
    }
  }

  const json* sub(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!seen_.count(key)) throw ValidationError("unknown config key: " + where_ + "." + key);
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

inline std::string score_mode_name(SegmentScore m) { return m == SegmentScore::Max ? "max" : "mean"; }

inline SegmentScore parse_score_mode(const std::string& s) {
  if (s == "mean") return SegmentScore::Mean;
  if (s == "max") return SegmentScore::Max;
  throw ValidationError("score_mode must be 'mean' or 'max', got '" + s + "'");
}

}  // namespace config_detail

inline nlohmann::json to_json(const PipelineConfig& c) {
  nlohmann::json aug = {
      {"mixup_alpha", c.augment.mixup_alpha},
      {"fixed_lambda", c.augment.fixed_lambda ? nlohmann::json(*c.augment.fixed_lambda) : nlohmann::json()},
      {"warp_ratio_range", {c.augment.warp_ratio_lo, c.augment.warp_ratio_hi}},
      {"filter_db_range", {c.augment.filter_db_lo, c.augment.filter_db_hi}},
      {"filter_bands_range", {c.augment.filter_bands_lo, c.augment.filter_bands_hi}},
  };
  return {
      {"seed", c.seed},
      {"augment", aug},
      {"pooling", {{"pad_frames", c.pooling.pad_frames}, {"window", c.pooling.window}, {"stride", c.pooling.stride}}},
      {"median", {{"window", c.median.window}}},
      {"csebb",
       {{"avg_window", c.csebb.avg_window},
        {"step_window", c.csebb.step_window},
        {"onset_threshold", c.csebb.onset_threshold},
        {"offset_threshold", c.csebb.offset_threshold},
        {"merge_ratio", c.csebb.merge_ratio},
        {"score_floor", c.csebb.score_floor},
        {"score_mode", config_detail::score_mode_name(c.csebb.score_mode)}}},
      {"pseudo",
       {{"keep_threshold", c.pseudo.keep_threshold},
        {"floor_threshold", c.pseudo.floor_threshold},
        {"hard_threshold", c.pseudo.hard_threshold},
        {"speech_like", c.pseudo.speech_like}}},
      {"psds",
       {{"rho_dtc", c.psds.rho_dtc},
        {"rho_gtc", c.psds.rho_gtc},
        {"alpha_st", c.psds.alpha_st},
        {"alpha_ct", c.psds.alpha_ct},
        {"e_max", c.psds.e_max}}},
      {"mpauc",
       {{"max_fpr", c.mpauc.max_fpr},
        {"segment_length", c.mpauc.segment_length},
        {"gt_binarize", c.mpauc.gt_binarize},
        {"standardized", c.mpauc.standardized}}},
  };
}

inline void read_pseudo_spec(const nlohmann::json& j, PseudoFilterSpec& p, const std::string& where) {
  config_detail::Reader r(j, where);
  r.get("keep_threshold", p.keep_threshold);
  r.get("floor_threshold", p.floor_threshold);
  r.get("hard_threshold", p.hard_threshold);
  r.get("speech_like", p.speech_like);
  r.finish();
}

// Overlays the keys present in `j` onto `base`.
inline PipelineConfig config_from_json(const nlohmann::json& j, PipelineConfig base = {}) {
  using config_detail::Reader;
  Reader root(j, "config");
  root.get("seed", base.seed);
  if (auto* a = root.sub("augment")) {
    Reader r(*a, "augment");
    r.get("mixup_alpha", base.augment.mixup_alpha);
    if (auto* fl = r.sub("fixed_lambda")) {
      if (fl->is_null())
        base.augment.fixed_lambda.reset();
      else if (fl->is_number())
        base.augment.fixed_lambda = fl->get<double>();
      else
        throw ValidationError("augment.fixed_lambda must be a number or null");
    }
    std::pair<double, double> warp{base.augment.warp_ratio_lo, base.augment.warp_ratio_hi};
    std::pair<double, double> db{base.augment.filter_db_lo, base.augment.filter_db_hi};
    std::pair<int, int> bands{base.augment.filter_bands_lo, base.augment.filter_bands_hi};
    r.get("warp_ratio_range", warp);
    r.get("filter_db_range", db);
    r.get("filter_bands_range", bands);
    std::tie(base.augment.warp_ratio_lo, base.augment.warp_ratio_hi) = warp;
    std::tie(base.augment.filter_db_lo, base.augment.filter_db_hi) = db;
    std::tie(base.augment.filter_bands_lo, base.augment.filter_bands_hi) = bands;
    r.finish();
  }
  if (auto* p = root.sub("pooling")) {
    Reader r(*p, "pooling");
    r.get("pad_frames", base.pooling.pad_frames);
    r.get("window", base.pooling.window);
    r.get("stride", base.pooling.stride);
    r.finish();
  }
  if (auto* m = root.sub("median")) {
    Reader r(*m, "median");
    r.get("window", base.median.window);
    r.finish();
  }
  if (auto* c = root.sub("csebb")) {
    Reader r(*c, "csebb");
    r.get("avg_window", base.csebb.avg_window);
    r.get("step_window", base.csebb.step_window);
    r.get("onset_threshold", base.csebb.onset_threshold);
    r.get("offset_threshold", base.csebb.offset_threshold);
    r.get("merge_ratio", base.csebb.merge_ratio);
    r.get("score_floor", base.csebb.score_floor);
    std::string mode = config_detail::score_mode_name(base.csebb.score_mode);
    r.get("score_mode", mode);
    base.csebb.score_mode = config_detail::parse_score_mode(mode);
    r.finish();
  }
  if (auto* p = root.sub("pseudo")) read_pseudo_spec(*p, base.pseudo, "pseudo");
  if (auto* p = root.sub("psds")) {
    Reader r(*p, "psds");
    r.get("rho_dtc", base.psds.rho_dtc);
    r.get("rho_gtc", base.psds.rho_gtc);
    r.get("alpha_st", base.psds.alpha_st);
    r.get("alpha_ct", base.psds.alpha_ct);
    r.get("e_max", base.psds.e_max);
    r.finish();
  }
  if (auto* p = root.sub("mpauc")) {
    Reader r(*p, "mpauc");
    r.get("max_fpr", base.mpauc.max_fpr);
    r.get("segment_length", base.mpauc.segment_length);
    r.get("gt_binarize", base.mpauc.gt_binarize);
    r.get("standardized", base.mpauc.standardized);
    r.finish();
  }
  root.finish();
  base.validate();
  return base;
}

inline PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base = {}) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(detail::read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  return config_from_json(j, std::move(base));
}

}  // namespace fredkit
