#include "cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fredkit/fredkit.hpp"

namespace fredkit::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kManifestName = "manifest.tsv";

std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::size_t default_jobs() {
  if (const char* env = std::getenv("FREDKIT_JOBS")) {
    long long n = 0;
    if (detail::parse_int(env, n) && n > 0) return static_cast<std::size_t>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

// ---------------------------------------------------------------- file sets

std::vector<fs::path> list_files(const fs::path& dir, const std::string& suffix) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (name.size() > suffix.size() && name.ends_with(suffix)) out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Per-clip `<clip_id>.csv` files; frame periods come from manifest.tsv when
// present (duration / frames), otherwise from `default_period`.
std::vector<ScoreMatrix> read_score_dir(const fs::path& dir, const ClassVocabulary& vocab,
                                        double default_period, std::size_t jobs) {
  auto files = list_files(dir, ".csv");
  std::optional<std::map<std::string, double>> durations;
  if (fs::exists(dir / kManifestName))
    durations = parse_manifest_tsv(detail::read_file(dir / kManifestName)).as_map();
  std::vector<ScoreMatrix> out(files.size());
  parallel_for(files.size(), jobs, [&](std::size_t i) {
    ScoreMatrix m = parse_score_csv(files[i], 1.0, vocab);
    double period = default_period;
    if (durations) {
      auto it = durations->find(m.clip_id());
      if (it == durations->end())
        throw ValidationError("clip " + m.clip_id() + " missing from " + (dir / kManifestName).string());
      period = it->second / static_cast<double>(m.frames());
    }
    out[i] = ScoreMatrix(m.clip_id(), period, m.frames(), m.classes(), m.values());
  });
  return out;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory " + dir.string());
}

void write_score_dir(const fs::path& dir, const std::vector<ScoreMatrix>& mats,
                     const ClassVocabulary& vocab, std::size_t jobs) {
  ensure_dir(dir);
  parallel_for(mats.size(), jobs, [&](std::size_t i) {
    detail::write_file(dir / (mats[i].clip_id() + ".csv"), format_score_csv(mats[i], vocab));
  });
  ClipManifest manifest;
  for (const auto& m : mats) manifest.entries.emplace_back(m.clip_id(), m.duration());
  detail::write_file(dir / kManifestName, format_manifest_tsv(manifest));
}

template <typename Fn>
std::vector<ScoreMatrix> map_scores(const std::vector<ScoreMatrix>& in, std::size_t jobs, Fn fn) {
  std::vector<ScoreMatrix> out(in.size());
  parallel_for(in.size(), jobs, [&](std::size_t i) { out[i] = fn(in[i]); });
  return out;
}

// Feature files are `<clip_id>_ch<k>.csv`, T rows x F comma-separated values.
std::map<std::string, SpectroFeature> read_feature_dir(const fs::path& dir, std::size_t jobs) {
  static const std::regex pattern(R"((.+)_ch(\d+)\.csv)");
  std::map<std::string, std::map<std::size_t, fs::path>> groups;
  for (const auto& path : list_files(dir, ".csv")) {
    std::smatch m;
    const std::string name = path.filename().string();
    if (!std::regex_match(name, m, pattern)) continue;
    groups[m[1]][std::stoul(m[2])] = path;
  }
  std::vector<std::string> ids;
  for (const auto& [id, _] : groups) ids.push_back(id);
  std::vector<SpectroFeature> feats(ids.size());
  parallel_for(ids.size(), jobs, [&](std::size_t i) {
    const auto& channels = groups.at(ids[i]);
    std::size_t frames = 0, bins = 0;
    std::vector<double> data;
    std::size_t expected = 0;
    for (const auto& [k, path] : channels) {
      if (k != expected++) throw ValidationError("missing channel " + std::to_string(expected - 1) + " for " + ids[i]);
      const std::string text = detail::read_file(path);
      auto lines = detail::lines_of(text);
      std::size_t rows = 0;
      for (std::size_t r = 0; r < lines.size(); ++r) {
        if (lines[r].empty()) continue;
        auto cells = detail::split(lines[r], ',');
        if (bins == 0) bins = cells.size();
        if (cells.size() != bins)
          throw ValidationError(path.string() + ": inconsistent column count" + detail::at_line(r + 1));
        for (auto cell : cells) {
          double v = 0.0;
          if (!detail::parse_double(cell, v))
            throw ValidationError(path.string() + ": non-numeric value" + detail::at_line(r + 1));
          data.push_back(v);
        }
        ++rows;
      }
      if (frames == 0) frames = rows;
      if (rows != frames || rows == 0) throw ValidationError(path.string() + ": inconsistent frame count");
    }
    feats[i] = SpectroFeature{ids[i], Tensor3(channels.size(), frames, bins, std::move(data))};
    validate_feature(feats[i]);
  });
  std::map<std::string, SpectroFeature> out;
  for (auto& f : feats) out.emplace(f.clip_id, std::move(f));
  return out;
}

void write_feature(const fs::path& dir, const SpectroFeature& x) {
  for (std::size_t c = 0; c < x.values.channels(); ++c) {
    std::string text;
    for (std::size_t t = 0; t < x.values.frames(); ++t) {
      for (std::size_t f = 0; f < x.values.bins(); ++f) {
        if (f) text += ',';
        text += detail::format_shortest(x.values(c, t, f));
      }
      text += '\n';
    }
    detail::write_file(dir / (x.clip_id + "_ch" + std::to_string(c) + ".csv"), text);
  }
}

json roc_json(const PsdsResult& res) {
  json classes = json::object();
  for (const auto& [name, ops] : res.roc.curves) {
    json pts = json::array();
    for (const auto& op : ops)
      pts.push_back({{"threshold", op.threshold}, {"tp", op.tp}, {"fp", op.fp}, {"tpr", op.tpr}, {"efpr", op.efpr}});
    classes[name] = {{"n_gt", res.roc.n_gt.at(name)}, {"operating_points", pts}};
  }
  return {{"psds1", res.value}, {"classes", classes}};
}

// ---------------------------------------------------------------- options

struct Common {
  std::string config_path;
  std::string vocab_path;
  std::size_t jobs = default_jobs();
  bool dump_config = false;
};

class Overrides {
 public:
  template <typename T, typename Field>
  CLI::Option* add(CLI::App* sub, const std::string& name, Field field, const std::string& desc) {
    auto holder = std::make_shared<T>();
    CLI::Option* opt = sub->add_option(name, *holder, desc);
    items_.push_back({opt, [holder, field](PipelineConfig& c) { field(c) = *holder; }});
    return opt;
  }

  void apply(PipelineConfig& cfg) const {
    for (const auto& [opt, fn] : items_)
      if (opt->count() > 0) fn(cfg);
  }

 private:
  std::vector<std::pair<CLI::Option*, std::function<void(PipelineConfig&)>>> items_;
};

void add_common(CLI::App* sub, Common& common) {
  sub->add_option("--config", common.config_path, "JSON pipeline configuration (explicit flags override it)");
  sub->add_option("--vocab", common.vocab_path, "Vocabulary TSV: class_name, in_desed, in_maestro");
  sub->add_option("--jobs", common.jobs, "Worker threads (default: FREDKIT_JOBS or hardware threads)")
      ->check(CLI::PositiveNumber);
  sub->add_flag("--dump-config", common.dump_config, "Print the effective configuration as JSON and exit");
}

struct Paths {
  std::string scores_dir, out_dir, out, features_dir, labels, weights, table, spec, pruned_dir,
      weak_labels, masked_dir, hard_dir, detections, groundtruth, gt_dir, report;
  std::vector<std::string> runs;
  double frame_period = 0.064;
  double duration_hours = 0.0;
  std::size_t cases = 100;
  double tol = 1e-6;
  double psds1 = 0.0, mpauc = 0.0;
  std::string classes = "maestro";
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Frequency-dependent sound event detection toolkit", "fredkit"};
  app.require_subcommand(1);

  Common common;
  Paths p;
  Overrides ov;

  auto* augment = app.add_subcommand("augment", "mixup -> frequency warp -> FilterAugment on feature CSVs");
  augment->add_option("--features-dir", p.features_dir, "Directory of <clip>_ch<k>.csv features")->required();
  augment->add_option("--out-dir", p.out_dir, "Output directory")->required();
  augment->add_option("--labels", p.labels, "Weak labels TSV; mixed labels go to <out-dir>/labels.csv");
  ov.add<std::uint64_t>(augment, "--seed", [](PipelineConfig& c) -> auto& { return c.seed; }, "Random seed");

  auto* conv_check = app.add_subcommand("conv-check", "Check frequency dynamic conv against the assembled-kernel oracle");
  conv_check->add_option("--weights", p.weights, "Layer weight JSON sidecar (random layers when omitted)");
  conv_check->add_option("--cases", p.cases, "Number of random cases");
  conv_check->add_option("--tol", p.tol, "Maximum tolerated relative error");
  ov.add<std::uint64_t>(conv_check, "--seed", [](PipelineConfig& c) -> auto& { return c.seed; }, "Random seed");

  auto* pool = app.add_subcommand("pool", "Coarse max pooling of frame scores");
  pool->add_option("--scores-dir", p.scores_dir, "Directory of <clip>.csv score files")->required();
  pool->add_option("--out-dir", p.out_dir, "Output directory")->required();
  pool->add_option("--frame-period", p.frame_period, "Seconds per input frame when no manifest.tsv is present");
  ov.add<int>(pool, "--pad", [](PipelineConfig& c) -> auto& { return c.pooling.pad_frames; }, "Zero frames padded on each side");
  ov.add<int>(pool, "--window", [](PipelineConfig& c) -> auto& { return c.pooling.window; }, "Pooling window");
  ov.add<int>(pool, "--stride", [](PipelineConfig& c) -> auto& { return c.pooling.stride; }, "Pooling stride");

  auto* median = app.add_subcommand("median", "Class-independent median filter");
  median->add_option("--scores-dir", p.scores_dir, "Directory of <clip>.csv score files")->required();
  median->add_option("--out-dir", p.out_dir, "Output directory")->required();
  median->add_option("--frame-period", p.frame_period, "Seconds per frame when no manifest.tsv is present");
  ov.add<int>(median, "--window", [](PipelineConfig& c) -> auto& { return c.median.window; }, "Odd window length");

  auto* csebb = app.add_subcommand("csebb", "Change-detection sound event bounding boxes");
  csebb->add_option("--scores-dir", p.scores_dir, "Directory of <clip>.csv score files")->required();
  csebb->add_option("--out", p.out, "Detections TSV")->required();
  csebb->add_option("--frame-period", p.frame_period, "Seconds per frame when no manifest.tsv is present");
  ov.add<int>(csebb, "--avg-window", [](PipelineConfig& c) -> auto& { return c.csebb.avg_window; }, "Smoothing window");
  ov.add<int>(csebb, "--step-window", [](PipelineConfig& c) -> auto& { return c.csebb.step_window; }, "Step filter half length");
  ov.add<double>(csebb, "--onset-threshold", [](PipelineConfig& c) -> auto& { return c.csebb.onset_threshold; }, "Rise threshold");
  ov.add<double>(csebb, "--offset-threshold", [](PipelineConfig& c) -> auto& { return c.csebb.offset_threshold; }, "Fall threshold");
  ov.add<double>(csebb, "--merge-ratio", [](PipelineConfig& c) -> auto& { return c.csebb.merge_ratio; }, "Gap merge ratio");
  ov.add<double>(csebb, "--score-floor", [](PipelineConfig& c) -> auto& { return c.csebb.score_floor; }, "Minimum box score");
  auto score_mode = std::make_shared<std::string>();
  auto* score_mode_opt = csebb->add_option("--score-mode", *score_mode, "Segment score: mean or max")
                             ->check(CLI::IsMember({"mean", "max"}));

  auto* ensemble = app.add_subcommand("ensemble", "Average score directories of several models");
  ensemble->add_option("--runs", p.runs, "Score directories")->required()->expected(1, -1);
  ensemble->add_option("--out-dir", p.out_dir, "Output directory")->required();
  ensemble->add_option("--frame-period", p.frame_period, "Seconds per frame when no manifest.tsv is present");

  auto* select = app.add_subcommand("select-best", "Pick the run with the best PSDS1 + MPAUC");
  select->add_option("--table", p.table, "TSV model_id, psds1, mpauc")->required();

  auto* filter = app.add_subcommand("filter-pseudo", "Filter pseudo-labelled clips by confidence");
  filter->add_option("--scores-dir", p.scores_dir, "Directory of <clip>.csv score files")->required();
  filter->add_option("--spec", p.spec, "Pseudo-label filter JSON (keep/floor/hard thresholds, speech_like)");
  filter->add_option("--out", p.out, "Kept clip list TSV")->required();
  filter->add_option("--pruned-labels", p.pruned_dir, "Directory for per-clip pruned label TSVs")->required();
  filter->add_option("--weak-labels", p.weak_labels, "Weak labels TSV clip_id<TAB>class1,class2");
  filter->add_option("--masked-dir", p.masked_dir, "Write weak-label-masked scores here (needs --weak-labels)");
  filter->add_option("--hard-dir", p.hard_dir, "Write hardened scores of kept clips here");
  filter->add_option("--frame-period", p.frame_period, "Seconds per frame when no manifest.tsv is present");

  auto* eval = app.add_subcommand("eval", "Evaluation metrics");
  eval->require_subcommand(1);
  auto* eval_psds = eval->add_subcommand("psds1", "PSDS1 of detections against ground truth");
  eval_psds->add_option("--detections", p.detections, "Detections TSV with score column")->required();
  eval_psds->add_option("--groundtruth", p.groundtruth, "Ground-truth events TSV")->required();
  eval_psds->add_option("--duration-hours", p.duration_hours, "Total audio duration in hours")->required();
  eval_psds->add_option("--report", p.report, "Write a JSON report with per-class operating points");
  ov.add<double>(eval_psds, "--rho-dtc", [](PipelineConfig& c) -> auto& { return c.psds.rho_dtc; }, "Detection tolerance criterion");
  ov.add<double>(eval_psds, "--rho-gtc", [](PipelineConfig& c) -> auto& { return c.psds.rho_gtc; }, "Ground-truth intersection criterion");
  ov.add<double>(eval_psds, "--alpha-st", [](PipelineConfig& c) -> auto& { return c.psds.alpha_st; }, "Cross-class variability weight");
  ov.add<double>(eval_psds, "--e-max", [](PipelineConfig& c) -> auto& { return c.psds.e_max; }, "Maximum eFPR per hour");

  auto* eval_mpauc = eval->add_subcommand("mpauc", "Segment-based macro partial AUC");
  eval_mpauc->add_option("--scores-dir", p.scores_dir, "Directory of coarse <clip>.csv scores")->required();
  eval_mpauc->add_option("--gt-dir", p.gt_dir, "Directory of soft-label <clip>.csv files")->required();
  eval_mpauc->add_option("--classes", p.classes, "Class subset: maestro, desed or all")
      ->check(CLI::IsMember({"maestro", "desed", "all"}));
  eval_mpauc->add_option("--report", p.report, "Write a JSON report with per-class values");
  ov.add<double>(eval_mpauc, "--max-fpr", [](PipelineConfig& c) -> auto& { return c.mpauc.max_fpr; }, "Partial AUC FPR limit");
  ov.add<double>(eval_mpauc, "--segment-length", [](PipelineConfig& c) -> auto& { return c.mpauc.segment_length; }, "Segment seconds");
  ov.add<double>(eval_mpauc, "--gt-binarize", [](PipelineConfig& c) -> auto& { return c.mpauc.gt_binarize; }, "Soft label threshold");
  ov.add<bool>(eval_mpauc, "--standardized", [](PipelineConfig& c) -> auto& { return c.mpauc.standardized; }, "McClish standardization (true/false)");

  auto* eval_sum = eval->add_subcommand("sum", "PSDS1 + MPAUC");
  eval_sum->add_option("--psds1", p.psds1, "PSDS1 value")->required();
  eval_sum->add_option("--mpauc", p.mpauc, "MPAUC value")->required();

  for (auto* sub : {augment, conv_check, pool, median, csebb, ensemble, select, filter, eval_psds, eval_mpauc, eval_sum})
    add_common(sub, common);

  std::vector<const char*> argv{"fredkit"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    const CLI::App* shown = &app;
    for (auto* sub : app.get_subcommands()) {
      shown = sub;
      for (auto* nested : sub->get_subcommands()) shown = nested;
    }
    out << shown->help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    PipelineConfig cfg;
    if (!common.config_path.empty()) cfg = load_config(common.config_path);
    ov.apply(cfg);
    if (score_mode_opt->count()) cfg.csebb.score_mode = *score_mode == "max" ? SegmentScore::Max : SegmentScore::Mean;
    if (filter->parsed() && !p.spec.empty()) {
      json j;
      try {
        j = json::parse(detail::read_file(p.spec));
      } catch (const json::parse_error& e) {
        throw ValidationError(p.spec + ": " + e.what());
      }
      read_pseudo_spec(j, cfg.pseudo, "spec");
    }
    cfg.validate();
    if (common.dump_config) {
      out << to_json(cfg).dump(2) << "\n";
      return 0;
    }
    const ClassVocabulary vocab = common.vocab_path.empty() ? default_vocabulary() : load_vocabulary(common.vocab_path);
    const std::size_t jobs = common.jobs;

    if (augment->parsed()) {
      auto feats = read_feature_dir(p.features_dir, jobs);
      if (feats.empty()) throw ValidationError("no <clip>_ch<k>.csv features in " + p.features_dir);
      std::vector<const SpectroFeature*> clips;
      for (const auto& [_, f] : feats) clips.push_back(&f);
      std::map<std::string, LabelVector> labels;
      if (!p.labels.empty()) {
        auto weak = parse_weak_labels_tsv(detail::read_file(p.labels), &vocab);
        for (const auto* f : clips) {
          auto it = weak.find(f->clip_id);
          if (it == weak.end()) throw ValidationError("no label for clip " + f->clip_id);
          LabelVector v(vocab.size(), 0.0);
          for (const auto& name : it->second.present_classes) v[vocab.index_of(name)] = 1.0;
          labels[f->clip_id] = std::move(v);
        }
      } else {
        for (const auto* f : clips) labels[f->clip_id] = LabelVector(vocab.size(), 0.0);
      }
      ensure_dir(p.out_dir);
      std::vector<LabelVector> mixed(clips.size());
      parallel_for(clips.size(), jobs, [&](std::size_t i) {
        const SpectroFeature& a = *clips[i];
        RngStream rng(cfg.seed, a.clip_id);
        RngStream partner_rng = rng.fork("partner");
        const auto j = static_cast<std::size_t>(partner_rng.uniform_int(0, static_cast<long long>(clips.size() - 1)));
        const SpectroFeature& b = *clips[j];
        auto [x, l] = augment_chain(a, b, labels.at(a.clip_id), labels.at(b.clip_id), rng, cfg.augment);
        write_feature(p.out_dir, x);
        mixed[i] = std::move(l);
      });
      if (!p.labels.empty()) {
        std::string text = "clip_id";
        for (const auto& n : vocab.names()) text += "," + n;
        text += '\n';
        for (std::size_t i = 0; i < clips.size(); ++i) {
          text += clips[i]->clip_id;
          for (double v : mixed[i]) text += "," + detail::format_shortest(v);
          text += '\n';
        }
        detail::write_file(fs::path(p.out_dir) / "labels.csv", text);
      }
      return 0;
    }

    if (conv_check->parsed()) {
      std::optional<freqconv::ConvLayerWeights> fixed;
      if (!p.weights.empty()) fixed = freqconv::load_layer(p.weights);
      std::vector<double> errors(p.cases, 0.0);
      parallel_for(p.cases, jobs, [&](std::size_t i) {
        RngStream rng(cfg.seed, "conv-check/" + std::to_string(i));
        freqconv::ConvCase c;
        if (fixed) {
          int dmax = 1;
          for (int d : fixed->bank.freq_dilations) dmax = std::max(dmax, d);
          const auto frames = static_cast<std::size_t>(rng.uniform_int(1, 12));
          const auto bins = static_cast<std::size_t>(rng.uniform_int(dmax + 1, std::max(12, dmax + 1)));
          c = {*fixed, freqconv::random_input(rng, fixed->in_channels(), frames, bins)};
        } else {
          c = freqconv::random_case(rng);
        }
        const Tensor3 fast = c.layer.forward(c.input);
        const Tensor3 ref = freqconv::naive_partial_forward(c.input, c.layer.partial, c.layer.bank, c.layer.attention);
        errors[i] = normwise_relative_error(fast, ref);
      });
      double worst = 0.0;
      for (double e : errors) worst = std::max(worst, e);
      out << format_value(worst) << "\n";
      err << "checked " << p.cases << " cases, max relative error " << format_value(worst)
          << (worst <= p.tol ? " (ok)" : " (exceeds tolerance)") << "\n";
      return worst <= p.tol ? 0 : 1;
    }

    if (pool->parsed()) {
      auto in = read_score_dir(p.scores_dir, vocab, p.frame_period, jobs);
      write_score_dir(p.out_dir, map_scores(in, jobs, [&](const ScoreMatrix& m) { return coarse_pool(m, cfg.pooling); }), vocab, jobs);
      return 0;
    }

    if (median->parsed()) {
      auto in = read_score_dir(p.scores_dir, vocab, p.frame_period, jobs);
      write_score_dir(p.out_dir, map_scores(in, jobs, [&](const ScoreMatrix& m) { return median_filter(m, cfg.median); }), vocab, jobs);
      return 0;
    }

    if (csebb->parsed()) {
      auto in = read_score_dir(p.scores_dir, vocab, p.frame_period, jobs);
      std::vector<std::vector<EventBox>> boxes(in.size());
      parallel_for(in.size(), jobs, [&](std::size_t i) { boxes[i] = csebb_extract(in[i], cfg.csebb, vocab); });
      std::vector<EventBox> all;
      for (auto& b : boxes) all.insert(all.end(), b.begin(), b.end());
      detail::write_file(p.out, format_events_tsv(std::move(all), true));
      return 0;
    }

    if (ensemble->parsed()) {
      std::vector<std::vector<ScoreMatrix>> runs;
      for (const auto& dir : p.runs) runs.push_back(read_score_dir(dir, vocab, p.frame_period, jobs));
      for (std::size_t r = 1; r < runs.size(); ++r) {
        if (runs[r].size() != runs[0].size())
          throw ValidationError("run " + p.runs[r] + " has a different clip set than " + p.runs[0]);
      }
      std::vector<ScoreMatrix> avg(runs[0].size());
      parallel_for(avg.size(), jobs, [&](std::size_t i) {
        std::vector<ScoreMatrix> members;
        for (const auto& r : runs) members.push_back(r[i]);
        avg[i] = average_scores(members);
      });
      write_score_dir(p.out_dir, avg, vocab, jobs);
      return 0;
    }

    if (select->parsed()) {
      auto best = select_best(parse_runs_tsv(detail::read_file(p.table)));
      out << best.model_id << "\n";
      err << "sum score " << format_value(sum_score(*best.psds1, *best.mpauc)) << "\n";
      return 0;
    }

    if (filter->parsed()) {
      cfg.pseudo.validate(vocab);
      auto in = read_score_dir(p.scores_dir, vocab, p.frame_period, jobs);
      std::vector<std::vector<double>> conf(in.size());
      parallel_for(in.size(), jobs, [&](std::size_t i) { conf[i] = clip_confidence(in[i]); });
      std::map<std::string, std::vector<double>> by_clip;
      std::map<std::string, const ScoreMatrix*> matrices;
      for (std::size_t i = 0; i < in.size(); ++i) {
        by_clip[in[i].clip_id()] = conf[i];
        matrices[in[i].clip_id()] = &in[i];
      }
      auto result = filter_audioset(by_clip, cfg.pseudo, vocab);
      std::string kept = "clip_id\n";
      for (const auto& id : result.kept) kept += id + '\n';
      detail::write_file(p.out, kept);
      ensure_dir(p.pruned_dir);
      for (const auto& [clip, labels] : result.labels) {
        std::string text = "class_name\tconfidence\n";
        for (std::size_t c = 0; c < vocab.size(); ++c) {
          auto it = labels.find(vocab.name(c));
          if (it != labels.end()) text += it->first + '\t' + detail::format_shortest(it->second) + '\n';
        }
        detail::write_file(fs::path(p.pruned_dir) / (clip + ".tsv"), text);
      }
      if (!p.masked_dir.empty()) {
        if (p.weak_labels.empty()) throw ValidationError("--masked-dir needs --weak-labels");
        auto weak = parse_weak_labels_tsv(detail::read_file(p.weak_labels), &vocab);
        std::vector<ScoreMatrix> masked;
        for (const auto& [clip, w] : weak) {
          auto it = matrices.find(clip);
          if (it == matrices.end()) throw ValidationError("no scores for weakly labelled clip " + clip);
          masked.push_back(mask_weak(*it->second, w, vocab));
        }
        write_score_dir(p.masked_dir, masked, vocab, jobs);
      } else if (!p.weak_labels.empty()) {
        throw ValidationError("--weak-labels needs --masked-dir");
      }
      if (!p.hard_dir.empty()) {
        std::vector<ScoreMatrix> hard;
        for (const auto& id : result.kept) hard.push_back(harden(*matrices.at(id), cfg.pseudo.hard_threshold));
        write_score_dir(p.hard_dir, hard, vocab, jobs);
      }
      err << "kept " << result.kept.size() << " of " << in.size() << " clips\n";
      return 0;
    }

    if (eval_psds->parsed()) {
      auto dets = parse_events_tsv(p.detections);
      auto gts = parse_events_tsv(p.groundtruth);
      auto res = psds1_detailed(dets, gts, p.duration_hours, cfg.psds);
      out << format_value(res.value) << "\n";
      if (!p.report.empty()) detail::write_file(p.report, roc_json(res).dump(2) + "\n");
      return 0;
    }

    if (eval_mpauc->parsed()) {
      auto scores = read_score_dir(p.scores_dir, vocab, cfg.mpauc.segment_length, jobs);
      auto gts = read_score_dir(p.gt_dir, vocab, cfg.mpauc.segment_length, jobs);
      const std::vector<bool> subset = p.classes == "all"     ? vocab.all_mask()
                                       : p.classes == "desed" ? vocab.desed_mask()
                                                              : vocab.maestro_mask();
      auto res = mpauc_detailed(scores, gts, cfg.mpauc, subset, vocab);
      for (const auto& name : res.skipped)
        err << "warning: class '" << name << "' lacks positive or negative segments; skipped\n";
      out << format_value(res.value) << "\n";
      if (!p.report.empty()) {
        json report = {{"mpauc", res.value}, {"per_class", res.per_class}, {"skipped", res.skipped}};
        detail::write_file(p.report, report.dump(2) + "\n");
      }
      return 0;
    }

    if (eval_sum->parsed()) {
      if (!(p.psds1 >= 0.0 && p.psds1 <= 1.0 && p.mpauc >= 0.0 && p.mpauc <= 1.0))
        throw ValidationError("metrics must lie in [0,1]");
      out << format_value(sum_score(p.psds1, p.mpauc)) << "\n";
      return 0;
    }
    err << app.help();
    return 1;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << "\n";
    return 2;
  } catch (const fs::filesystem_error& e) {
    err << "I/O error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace fredkit::cli
