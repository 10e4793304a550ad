// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "../tools/cli.hpp"
#include "fredkit/fredkit.hpp"
#include "oracles.hpp"

using namespace fredkit;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Collects the first few failure messages.
struct Check {
  bool ok = true;
  std::vector<std::string> notes;
  void require(bool cond, const std::string& what) {
    if (cond) return;
    ok = false;
    if (notes.size() < 5) notes.push_back(what);
  }
  Outcome done(const std::string& summary) const {
    std::string d = summary;
    for (const auto& n : notes) d += "; " + n;
    return {ok, d};
  }
};

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double max_abs_diff(const Tensor3& a, const Tensor3& b) {
  if (a.size() != b.size()) return INFINITY;
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

// ---------------------------------------------------------------- 1
Outcome conv_equivalence() {
  Check ck;
  const int cases = 200;
  double worst = 0.0;
  std::set<std::size_t> basis_seen;
  bool saw_1123 = false, saw_pure_fdy = false, saw_partial = false;
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < cases; ++i) {
    RngStream rng(20240611, "accept/conv/" + std::to_string(i));
    auto c = freqconv::random_case(rng);
    const auto fast = c.layer.forward(c.input);
    const auto ref = freqconv::naive_partial_forward(c.input, c.layer.partial, c.layer.bank, c.layer.attention);
    const double err = normwise_relative_error(fast, ref);
    worst = std::max(worst, err);
    ck.require(err <= 1e-6, "case " + std::to_string(i) + " error " + num(err));
    basis_seen.insert(c.layer.bank.size());
    if (c.layer.bank.freq_dilations == std::vector<int>{1, 1, 2, 3}) saw_1123 = true;
    if (c.layer.partial.static_kernel.out_channels == 0) saw_pure_fdy = true;
    else saw_partial = true;
    ck.require(c.input.channels() <= 4 && c.input.frames() <= 12 && c.input.bins() <= 12, "case shape out of range");
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  ck.require(basis_seen == std::set<std::size_t>{1, 2, 4}, "basis counts not all covered");
  ck.require(saw_1123, "no (1,1,2,3) dilation set");
  ck.require(saw_pure_fdy && saw_partial, "fdy and partial layers not both covered");
  ck.require(secs < 30.0, "runtime " + num(secs) + " s");
  return ck.done(std::to_string(cases) + " cases, max rel err " + num(worst) + ", " + num(secs) + " s");
}

// ---------------------------------------------------------------- 2
Outcome one_hot_collapse() {
  Check ck;
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    RngStream rng(7, "accept/onehot/" + std::to_string(trial));
    const std::vector<int> dilations{1, 2, 3};
    const auto C_in = static_cast<std::size_t>(rng.uniform_int(1, 4));
    const auto C_out = static_cast<std::size_t>(rng.uniform_int(1, 4));
    freqconv::BasisKernelBank bank;
    for (std::size_t k = 0; k < dilations.size(); ++k) {
      freqconv::ConvKernel kern(C_out, C_in);
      freqconv::fill_uniform(kern.weights, rng, 1.0);
      freqconv::fill_uniform(kern.bias, rng, 0.5);
      bank.kernels.push_back(kern);
    }
    bank.freq_dilations = dilations;
    const auto T = static_cast<std::size_t>(rng.uniform_int(1, 12));
    const auto F = static_cast<std::size_t>(rng.uniform_int(4, 12));
    const auto x = freqconv::random_input(rng, C_in, T, F);
    for (std::size_t hot = 0; hot < dilations.size(); ++hot) {
      std::vector<double> att(dilations.size() * F, 0.0);
      for (std::size_t f = 0; f < F; ++f) att[hot * F + f] = 1.0;
      const double err = max_abs_diff(freqconv::fdy_forward(x, bank, att),
                                      oracle::dilated_conv(x, bank.kernels[hot], dilations[hot]));
      worst = std::max(worst, err);
      ck.require(err <= 1e-9, "dilation " + std::to_string(dilations[hot]) + " error " + num(err));
    }
  }
  return ck.done("dilations {1,2,3} x 20 layers, max abs err " + num(worst));
}

// ---------------------------------------------------------------- 3
Outcome coarse_pooling() {
  Check ck;
  std::mt19937 gen(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const PoolingSpec spec;
  ck.require(spec.pad_frames == 2 && spec.window == 16 && spec.stride == 16, "default pooling constants changed");
  std::size_t mismatches = 0;
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> v(156 * 27);
    for (double& x : v) x = u(gen);
    const ScoreMatrix m("clip", 0.064, 156, 27, v);
    const auto out = coarse_pool(m, spec);
    ck.require(out.frames() == 10 && out.classes() == 27, "shape is not 10x27");
    for (std::size_t c = 0; c < 27; ++c) {
      const auto ref = oracle::pool_column(m.column(c), spec.pad_frames, spec.window, spec.stride);
      if (ref != out.column(c)) ++mismatches;
    }
  }
  ck.require(mismatches == 0, std::to_string(mismatches) + " mismatching columns");
  return ck.done("500 matrices 156x27 -> 10x27, " + std::to_string(mismatches) + " mismatches");
}

// ---------------------------------------------------------------- 4
Outcome filter_augment_bound() {
  Check ck;
  const AugmentConfig cfg;
  double max_db = 0.0, max_second = 0.0;
  for (int i = 0; i < 10000; ++i) {
    RngStream base(11, "accept/filter/" + std::to_string(i));
    const std::size_t F = 8 + static_cast<std::size_t>(i % 121);
    RngStream a = base, b = base;
    const auto nodes = sample_filter_nodes(a, F, cfg);
    const auto curve = sample_filter_curve(b, F, cfg);
    ck.require(curve.size() == F, "curve length");
    for (double w : curve) max_db = std::max(max_db, std::abs(w));
    ck.require(curve == interpolate_filter_nodes(F, nodes), "curve differs from its nodes");
    for (std::size_t j = 0; j < nodes.bins.size(); ++j)
      ck.require(std::abs(curve[nodes.bins[j]] - nodes.weights[j]) <= 1e-12, "curve misses node weight");
    for (std::size_t j = 0; j + 1 < nodes.bins.size(); ++j)
      for (std::size_t f = nodes.bins[j] + 1; f < nodes.bins[j + 1]; ++f)
        max_second = std::max(max_second, std::abs(curve[f + 1] - 2.0 * curve[f] + curve[f - 1]));
  }
  ck.require(max_db <= 3.0, "max |dB| " + num(max_db));
  ck.require(max_second <= 1e-9, "second difference " + num(max_second));
  return ck.done("10000 curves, max |dB| " + num(max_db) + ", max second diff " + num(max_second));
}

// ---------------------------------------------------------------- 5
ClassVocabulary single_class() { return ClassVocabulary({"x"}, {true}, {true}); }

Outcome csebb_recovery() {
  Check ck;
  const CSebbSpec spec;
  const auto vocab = single_class();
  std::mt19937 gen(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double L = spec.step_window;
  double worst_edge = 0.0, worst_score = 0.0;
  int pulses = 0;
  for (int height_step = 0; height_step <= 7; ++height_step) {
    for (std::size_t width = 10; width <= 100; width += 5) {
      for (int rep = 0; rep < 3; ++rep) {
        const double h = 0.3 + 0.1 * height_step;
        const std::size_t begin = gen() % (156 - width + 1);
        std::vector<double> v(156, 0.0);
        for (std::size_t t = begin; t < begin + width; ++t) v[t] = h;
        const auto boxes = csebb_extract(ScoreMatrix("p", 0.064, 156, 1, v), spec, vocab);
        ++pulses;
        const std::string tag = "h=" + num(h) + " w=" + std::to_string(width) + " at " + std::to_string(begin);
        if (boxes.size() != 1) {
          ck.require(false, tag + ": " + std::to_string(boxes.size()) + " boxes");
          continue;
        }
        const double on = boxes[0].onset / 0.064, off = boxes[0].offset / 0.064;
        const double e = std::max(std::abs(on - static_cast<double>(begin)), std::abs(off - static_cast<double>(begin + width)));
        worst_edge = std::max(worst_edge, e);
        worst_score = std::max(worst_score, std::abs(boxes[0].score - h));
        ck.require(e <= L + 1e-9, tag + ": edge off by " + num(e));
        ck.require(std::abs(boxes[0].score - h) <= 0.05, tag + ": score " + num(boxes[0].score));
      }
    }
  }

  // two pulses joined by a flat gap at r * min(a, b); both gap edges are at
  // least 0.15 deep so the change detector sees the gap as its own segment
  int merged_cases = 0, split_cases = 0;
  for (int trial = 0; trial < 400; ++trial) {
    double a = 0, b = 0, g = 0;
    do {
      a = 0.5 + 0.5 * u(gen);
      b = 0.5 + 0.5 * u(gen);
      const double r = trial % 2 ? 0.76 + 0.2 * u(gen) : 0.2 + 0.54 * u(gen);
      g = r * std::min(a, b);
    } while (std::min(a, b) - g < 0.15);
    const std::size_t w1 = 20 + gen() % 21, gap = 10 + gen() % 21, w2 = 20 + gen() % 21;
    const std::size_t s1 = 10, s2 = s1 + w1 + gap;
    std::vector<double> v(156, 0.0);
    for (std::size_t t = s1; t < s1 + w1; ++t) v[t] = a;
    for (std::size_t t = s1 + w1; t < s2; ++t) v[t] = g;
    for (std::size_t t = s2; t < s2 + w2; ++t) v[t] = b;
    const std::size_t c1 = s1 + w1 / 2, cg = s1 + w1 + gap / 2, c2 = s2 + w2 / 2;
    // expectation from the unmerged segments' own scores
    auto score_at = [](const std::vector<Segment>& segs, std::size_t t) {
      for (const auto& s : segs)
        if (s.begin <= t && t < s.end) return s;
      return Segment{};
    };
    const auto raw_segs = csebb::segments(v, spec);
    const Segment sa = score_at(raw_segs, c1), sg = score_at(raw_segs, cg), sb = score_at(raw_segs, c2);
    const std::string tag = "fixture " + std::to_string(trial) + " (a=" + num(a) + " b=" + num(b) + " g=" + num(g) + ")";
    ck.require(sa.end <= sg.begin && sg.end <= sb.begin, tag + ": gap not segmented");
    const bool expect_merge = sg.score >= spec.merge_ratio * std::min(sa.score, sb.score);
    ck.require(expect_merge == (g >= spec.merge_ratio * std::min(a, b)), tag + ": segment scores differ from levels");
    const auto boxes = csebb::extract(v, spec);
    bool joined = false, found1 = false, found2 = false;
    for (const auto& s : boxes) {
      joined = joined || (s.begin <= c1 && c2 < s.end);
      found1 = found1 || (s.begin <= c1 && c1 < s.end);
      found2 = found2 || (s.begin <= c2 && c2 < s.end);
    }
    (expect_merge ? merged_cases : split_cases)++;
    ck.require(found1 && found2, tag + ": pulse lost");
    ck.require(joined == expect_merge, tag + ": merged=" + (joined ? "yes" : "no"));
  }
  return ck.done(std::to_string(pulses) + " pulses, max edge err " + num(worst_edge) + " frames, max score err " +
                 num(worst_score) + "; merge fixtures " + std::to_string(merged_cases) + " merged / " +
                 std::to_string(split_cases) + " split");
}

// ---------------------------------------------------------------- 6
EventBox ev(const std::string& clip, const std::string& cls, double on, double off, double score = 1.0) {
  return {clip, cls, on, off, score};
}

Outcome psds_checks() {
  Check ck;
  const std::vector<EventBox> gt{ev("a", "Dog", 1.0, 4.0), ev("a", "Cat", 5.0, 7.0), ev("b", "Dog", 0.0, 2.0),
                                 ev("c", "Cat", 3.0, 9.0)};
  const std::vector<EventBox> dets{ev("a", "Dog", 1.2, 3.9, 0.9), ev("a", "Cat", 5.5, 9.5, 0.4),
                                   ev("b", "Dog", 0.1, 1.9, 0.6), ev("c", "Cat", 3.0, 7.5, 0.75),
                                   ev("b", "Cat", 2.0, 3.0, 0.6)};
  const double hours = 30.0 / 3600.0;
  const PsdsSpec spec;
  const double perfect = psds1(gt, gt, hours, spec);
  ck.require(std::abs(perfect - 1.0) <= 1e-9, "perfect " + num(perfect));
  const double empty = psds1({}, gt, hours, spec);
  ck.require(empty == 0.0, "empty " + num(empty));
  const double v = psds1(dets, gt, hours, spec);
  const double ref = oracle::psds(dets, gt, hours);
  ck.require(std::abs(v - ref) <= 1e-9, "micro " + num(v) + " vs oracle " + num(ref));
  ck.require(v > 0.0 && v < 1.0, "micro value not strictly inside (0,1)");
  const auto counts = match_detections({ev("x", "Dog", 0.0, 6.9)}, {ev("x", "Dog", 0.0, 10.0)}, spec);
  const std::size_t tp = counts.count("Dog") ? counts.at("Dog").tp : 99;
  ck.require(tp == 0, "0.69 coverage gave " + std::to_string(tp) + " TP");
  const auto counts_ok = match_detections({ev("x", "Dog", 0.0, 7.0)}, {ev("x", "Dog", 0.0, 10.0)}, spec);
  ck.require(counts_ok.at("Dog").tp == 1, "0.70 coverage not a TP");
  return ck.done("perfect " + num(perfect) + ", empty " + num(empty) + ", micro " + std::to_string(v) + " vs " +
                 std::to_string(ref) + ", 0.69 coverage TP=" + std::to_string(tp));
}

// ---------------------------------------------------------------- 7
ScoreMatrix seg(const std::string& id, std::vector<double> v, std::size_t C) {
  const std::size_t T = v.size() / C;
  return ScoreMatrix(id, 1.0, T, C, std::move(v));
}

Outcome mpauc_checks() {
  Check ck;
  const ClassVocabulary vocab({"x", "y"}, {true, true}, {true, true});
  const MpaucSpec spec;
  const auto gt = seg("c", {1, 0, 0, 1, 1, 0, 0, 0, 1, 1, 0, 0, 0, 1, 1, 0}, 2);
  const double perfect = mpauc({gt}, {gt}, spec, vocab.all_mask(), vocab);
  ck.require(std::abs(perfect - 1.0) <= 1e-12, "perfect " + num(perfect));
  const double constant = mpauc({seg("c", std::vector<double>(16, 0.3), 2)}, {gt}, spec, vocab.all_mask(), vocab);
  ck.require(std::abs(constant - 0.5) <= 1e-12, "constant " + num(constant));

  const std::vector<double> scores{0.95, 0.9, 0.9, 0.85, 0.8, 0.7, 0.7, 0.7, 0.6, 0.55,
                                   0.5,  0.5, 0.4, 0.35, 0.3, 0.2, 0.2, 0.1, 0.05, 0.0};
  const std::vector<bool> labels{true,  false, true,  true,  false, true, false, false, true,  false,
                                 false, true,  false, false, true,  false, false, false, false, false};
  const ClassVocabulary one({"x"}, {true}, {true});
  std::vector<double> g(20);
  for (std::size_t i = 0; i < 20; ++i) g[i] = labels[i] ? 1.0 : 0.0;
  double worst = 0.0;
  for (double max_fpr : {0.05, 0.1, 0.3, 1.0}) {
    MpaucSpec s = spec;
    s.max_fpr = max_fpr;
    const double got = mpauc({seg("h", scores, 1)}, {seg("h", g, 1)}, s, one.all_mask(), one);
    const double ref = oracle::mcclish(oracle::partial_auc(scores, labels, max_fpr), max_fpr);
    worst = std::max(worst, std::abs(got - ref));
    ck.require(std::abs(got - ref) <= 1e-9, "20-segment at " + num(max_fpr) + ": " + num(got) + " vs " + num(ref));
  }

  std::mt19937 gen(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int violations = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> s(60), lab(60), t1(60), t2(60);
    for (std::size_t i = 0; i < 60; ++i) {
      s[i] = std::round(u(gen) * 25) / 25;
      lab[i] = u(gen) < 0.2 + 0.6 * s[i] ? 1.0 : 0.0;
      t1[i] = std::pow(s[i], 3.0) * 0.5 + 0.1 * s[i];
      t2[i] = 1.0 / (1.0 + std::exp(-8.0 * (s[i] - 0.5)));
    }
    lab[0] = lab[2] = 1.0;
    lab[1] = lab[3] = 0.0;
    const auto G = seg("c", lab, 2);
    const double a = mpauc({seg("c", s, 2)}, {G}, spec, vocab.all_mask(), vocab);
    const double b = mpauc({seg("c", t1, 2)}, {G}, spec, vocab.all_mask(), vocab);
    const double c = mpauc({seg("c", t2, 2)}, {G}, spec, vocab.all_mask(), vocab);
    if (std::abs(a - b) > 1e-12 || std::abs(a - c) > 1e-12) ++violations;
  }
  ck.require(violations == 0, std::to_string(violations) + " transform cases changed the value");
  return ck.done("perfect " + num(perfect) + ", constant " + num(constant) + ", 20-segment max err " + num(worst) +
                 ", 100 transform cases, " + std::to_string(violations) + " violations");
}

// ---------------------------------------------------------------- 8
Outcome pseudo_label_fixture() {
  Check ck;
  const auto vocab = default_vocabulary();
  const PseudoFilterSpec spec;
  // peak confidences per clip; every other class stays at 0
  const std::map<std::string, std::map<std::string, double>> peaks{
      {"dog_keep", {{"Dog", 0.85}, {"Cat", 0.3}, {"Blender", 0.005}}},
      {"edge_keep", {{"Cat", 0.7}, {"Frying", 0.01}, {"Dishes", 0.0099}}},
      {"below_keep", {{"Dog", 0.69}, {"Speech", 0.5}}},
      {"speech_only", {{"Speech", 0.95}, {"people talking", 0.8}, {"Dog", 0.4}}},
      {"speech_and_car", {{"Speech", 0.9}, {"children voices", 0.75}, {"car", 0.72}, {"footsteps", 0.002}}},
      {"silent", {}},
  };
  std::map<std::string, std::vector<double>> confidences;
  std::mt19937 gen(8);
  for (const auto& [clip, entries] : peaks) {
    // 20 frames, peak at a random frame, lower values elsewhere
    std::vector<double> v(20 * vocab.size(), 0.0);
    for (const auto& [name, x] : entries) {
      const std::size_t c = vocab.index_of(name);
      const std::size_t at = gen() % 20;
      for (std::size_t t = 0; t < 20; ++t) v[t * vocab.size() + c] = t == at ? x : x * 0.5;
    }
    confidences[clip] = clip_confidence(ScoreMatrix(clip, 0.064, 20, vocab.size(), v));
  }
  const auto res = filter_audioset(confidences, spec, vocab);
  const std::vector<std::string> expect_kept{"dog_keep", "edge_keep", "speech_and_car"};
  const std::map<std::string, std::map<std::string, double>> expect_labels{
      {"dog_keep", {{"Dog", 0.85}, {"Cat", 0.3}}},
      {"edge_keep", {{"Cat", 0.7}, {"Frying", 0.01}}},
      {"speech_and_car", {{"Speech", 0.9}, {"children voices", 0.75}, {"car", 0.72}}},
  };
  ck.require(res.kept == expect_kept, "kept set differs");
  ck.require(res.labels == expect_labels, "pruned label maps differ");
  std::string kept;
  for (const auto& k : res.kept) kept += (kept.empty() ? "" : ",") + k;
  return ck.done("kept {" + kept + "}");
}

// ---------------------------------------------------------------- 9
Outcome ensemble_checks() {
  Check ck;
  std::mt19937 gen(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto random_matrix = [&] {
    std::vector<double> v(156 * 27);
    for (double& x : v) x = u(gen);
    return ScoreMatrix("clip", 0.064, 156, 27, v);
  };
  std::vector<ScoreMatrix> runs;
  for (int i = 0; i < 7; ++i) runs.push_back(random_matrix());
  const auto ref = average_scores(runs);
  for (int trial = 0; trial < 100; ++trial) {
    std::shuffle(runs.begin(), runs.end(), gen);
    ck.require(average_scores(runs) == ref, "permutation changed the average");
  }
  for (std::size_t n = 1; n <= 8; ++n) {
    const auto m = random_matrix();
    ck.require(average_scores(std::vector<ScoreMatrix>(n, m)) == m, "identical runs not returned exactly, n=" + std::to_string(n));
  }
  const auto half = average_scores(
      {ScoreMatrix::zeros("clip", 0.064, 156, 27), ScoreMatrix("clip", 0.064, 156, 27, std::vector<double>(156 * 27, 1.0))});
  ck.require(std::all_of(half.values().begin(), half.values().end(), [](double x) { return x == 0.5; }),
             "mean of zeros and ones is not 0.5");
  return ck.done("100 permutations, idempotence n=1..8, {0,1} -> 0.5");
}

// ---------------------------------------------------------------- 10
struct CliRun {
  int code;
  std::string out;
};

CliRun cli_run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str()};
}

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  if (!fs::exists(root)) return files;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = detail::read_file(e.path());
  return files;
}

void build_corpus(const fs::path& dir) {
  const auto vocab = default_vocabulary();
  const std::size_t C = vocab.size();
  std::mt19937 gen(10);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const char* sub : {"features", "scores", "run_a", "run_b", "run_c", "gt_coarse"}) fs::create_directories(dir / sub);
  std::string weak = "clip_id\tevent_labels\n";
  std::vector<EventBox> gt_events;
  for (int i = 0; i < 50; ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "clip%02d", i);
    for (int ch = 0; ch < 2; ++ch) {
      std::string text;
      for (int t = 0; t < 24; ++t) {
        for (int f = 0; f < 32; ++f) text += (f ? "," : "") + detail::format_shortest(std::round(-80.0 * u(gen) * 100) / 100);
        text += '\n';
      }
      detail::write_file(dir / "features" / (std::string(id) + "_ch" + std::to_string(ch) + ".csv"), text);
    }
    // two active classes with a smooth bump each, low noise elsewhere
    const std::size_t c1 = gen() % C, c2 = gen() % C;
    std::vector<double> v(156 * C), coarse_gt(10 * C, 0.0);
    for (double& x : v) x = 0.05 * u(gen);
    for (std::size_t c : {c1, c2}) {
      const std::size_t on = gen() % 100, len = 20 + gen() % 50;
      const double h = 0.4 + 0.6 * u(gen);
      for (std::size_t t = on; t < std::min<std::size_t>(156, on + len); ++t) v[t * C + c] = std::min(1.0, h + 0.05 * u(gen));
      gt_events.push_back({id, vocab.name(c), on * 0.064, std::min<std::size_t>(156, on + len) * 0.064, 1.0});
      for (std::size_t j = 0; j < 10; ++j) {
        const double lo = j * 16.0 - 2, hi = lo + 16;
        if (hi > on && lo < on + len) coarse_gt[j * C + c] = 1.0;
      }
    }
    // a false alarm and a missed event
    const std::size_t fa = gen() % C, fa_on = gen() % 120;
    for (std::size_t t = fa_on; t < fa_on + 30; ++t) v[t * C + fa] = std::max(v[t * C + fa], 0.3 + 0.4 * u(gen));
    const double miss_on = 9.0 * u(gen);
    gt_events.push_back({id, vocab.name(gen() % C), miss_on, std::min(9.98, miss_on + 1.0), 1.0});
    for (std::size_t j = 0; j < 10; ++j)
      if (u(gen) < 0.05) coarse_gt[j * C + gen() % C] = 0.6;
    const ScoreMatrix m(id, 0.064, 156, C, v);
    detail::write_file(dir / "scores" / (std::string(id) + ".csv"), format_score_csv(m, vocab));
    for (const char* run : {"run_a", "run_b", "run_c"}) {
      std::vector<double> w = v;
      for (double& x : w) x = std::clamp(x + 0.1 * (u(gen) - 0.5), 0.0, 1.0);
      detail::write_file(dir / run / (std::string(id) + ".csv"), format_score_csv(ScoreMatrix(id, 0.064, 156, C, w), vocab));
    }
    detail::write_file(dir / "gt_coarse" / (std::string(id) + ".csv"),
                       format_score_csv(ScoreMatrix(id, 1.024, 10, C, coarse_gt), vocab));
    weak += std::string(id) + "\t" + vocab.name(c1) + (c2 != c1 ? "," + vocab.name(c2) : "") + "\n";
  }
  detail::write_file(dir / "weak.tsv", weak);
  detail::write_file(dir / "gt.tsv", format_events_tsv(gt_events, false));
  detail::write_file(dir / "runs.tsv", "model_id\tpsds1\tmpauc\nbaseline\t0.520\t0.637\npfd\t0.516\t0.775\n"
                                       "pdfd_1223\t0.526\t0.772\nensemble\t0.577\t0.790\n");
}

// Runs every stage into `out`; returns stdout of each stage keyed by name.
std::map<std::string, std::string> run_pipeline(const fs::path& in, const fs::path& out, const std::string& jobs,
                                                Check& ck) {
  fs::remove_all(out);
  fs::create_directories(out);
  const std::string j = jobs;
  auto p = [](const fs::path& x) { return x.string(); };
  const std::vector<std::pair<std::string, std::vector<std::string>>> stages{
      {"augment", {"augment", "--features-dir", p(in / "features"), "--out-dir", p(out / "aug"), "--labels", p(in / "weak.tsv"), "--seed", "42"}},
      {"conv-check", {"conv-check", "--cases", "100", "--seed", "42"}},
      {"pool", {"pool", "--scores-dir", p(in / "scores"), "--out-dir", p(out / "pooled")}},
      {"median", {"median", "--scores-dir", p(in / "scores"), "--out-dir", p(out / "median")}},
      {"csebb", {"csebb", "--scores-dir", p(out / "median"), "--out", p(out / "dets.tsv")}},
      {"ensemble", {"ensemble", "--runs", p(in / "run_a"), p(in / "run_b"), p(in / "run_c"), "--out-dir", p(out / "ens")}},
      {"select-best", {"select-best", "--table", p(in / "runs.tsv")}},
      {"filter-pseudo", {"filter-pseudo", "--scores-dir", p(in / "scores"), "--out", p(out / "kept.tsv"), "--pruned-labels",
                         p(out / "pruned"), "--weak-labels", p(in / "weak.tsv"), "--masked-dir", p(out / "masked"),
                         "--hard-dir", p(out / "hard")}},
      {"eval psds1", {"eval", "psds1", "--detections", p(out / "dets.tsv"), "--groundtruth", p(in / "gt.tsv"),
                      "--duration-hours", "0.1386666666666667", "--report", p(out / "psds.json")}},
      {"eval mpauc", {"eval", "mpauc", "--scores-dir", p(out / "pooled"), "--gt-dir", p(in / "gt_coarse"), "--classes", "all",
                      "--report", p(out / "mpauc.json")}},
      {"eval sum", {"eval", "sum", "--psds1", "0.577", "--mpauc", "0.790"}},
  };
  std::map<std::string, std::string> stdout_by_stage;
  for (auto [name, args] : stages) {
    args.push_back("--jobs");
    args.push_back(j);
    const auto r = cli_run(args);
    ck.require(r.code == 0, name + " exited " + std::to_string(r.code) + " with --jobs " + j);
    stdout_by_stage[name] = r.out;
  }
  return stdout_by_stage;
}

Outcome cli_determinism() {
  Check ck;
  const fs::path root = fs::temp_directory_path() / "fredkit_acceptance";
  fs::remove_all(root);
  build_corpus(root / "in");
  const auto out1 = run_pipeline(root / "in", root / "jobs1", "1", ck);
  const auto out8 = run_pipeline(root / "in", root / "jobs8", "8", ck);
  const auto files1 = tree(root / "jobs1"), files8 = tree(root / "jobs8");
  ck.require(files1.size() > 50, "too few output files (" + std::to_string(files1.size()) + ")");
  for (const auto& [name, text] : out1)
    ck.require(out8.at(name) == text, name + " stdout differs");
  std::size_t differing = 0;
  for (const auto& [rel, text] : files1) {
    auto it = files8.find(rel);
    if (it == files8.end() || it->second != text) {
      ++differing;
      ck.require(false, rel + " differs");
    }
  }
  ck.require(files1.size() == files8.size(), "output file sets differ");
  // stages must have produced something meaningful
  ck.require(files1.count("dets.tsv") && files1.at("dets.tsv").size() > 100, "csebb wrote no detections");
  ck.require(out1.at("eval sum") == "1.367\n", "eval sum printed " + out1.at("eval sum"));
  std::string psds = out1.at("eval psds1"), mp = out1.at("eval mpauc");
  if (!psds.empty()) psds.pop_back();
  if (!mp.empty()) mp.pop_back();
  return ck.done("11 stages, " + std::to_string(files1.size()) + " files compared, " + std::to_string(differing) +
                 " differ (corpus psds1 " + psds + ", mpauc " + mp + ")");
}

// ---------------------------------------------------------------- 11
Outcome sum_score_exact() {
  Check ck;
  ck.require(sum_score(0.520, 0.637) == 1.157, "0.520 + 0.637 != 1.157");
  ck.require(sum_score(0.577, 0.790) == 1.367, "0.577 + 0.790 != 1.367");
  const auto a = cli_run({"eval", "sum", "--psds1", "0.520", "--mpauc", "0.637"});
  const auto b = cli_run({"eval", "sum", "--psds1", "0.577", "--mpauc", "0.790"});
  ck.require(a.out == "1.157\n", "cli printed " + a.out);
  ck.require(b.out == "1.367\n", "cli printed " + b.out);
  return ck.done("1.157 and 1.367 exact, cli output matches");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"conv equivalence", conv_equivalence},
      {"one-hot collapse", one_hot_collapse},
      {"coarse pooling", coarse_pooling},
      {"filteraugment bound", filter_augment_bound},
      {"csebb pulse recovery", csebb_recovery},
      {"psds1", psds_checks},
      {"mpauc", mpauc_checks},
      {"pseudo-label filter", pseudo_label_fixture},
      {"ensemble", ensemble_checks},
      {"cli determinism", cli_determinism},
      {"sum score", sum_score_exact},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << (i + 1) << ". " << criteria[i].first << ": " << o.detail << "\n";
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}
