#pragma once

// Frequency-dependent augmentations for dB-scaled log-mel features, applied
// as mixup -> frequency warping -> FilterAugment.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fredkit/core.hpp"
#include "fredkit/rng.hpp"
#include "fredkit/tensor.hpp"

namespace fredkit {

struct SpectroFeature {
  std::string clip_id;
  Tensor3 values;  // channel x time x frequency, dB

  std::size_t bins() const { return values.bins(); }
};

inline void validate_feature(const SpectroFeature& x) {
  if (x.values.channels() < 1 || x.values.frames() < 1)
    throw ValidationError("feature for " + x.clip_id + " needs at least one channel and frame");
  if (x.values.bins() < 8)
    throw ValidationError("feature for " + x.clip_id + " has fewer than 8 frequency bins");
  for (double v : x.values.data())
    if (!std::isfinite(v)) throw ValidationError("non-finite feature value in " + x.clip_id);
}

using LabelVector = std::vector<double>;

struct AugmentConfig {
  double mixup_alpha = 0.2;
  // Replaces the Beta draw when set; the draw is still consumed.
  std::optional<double> fixed_lambda;
  double warp_ratio_lo = 0.75;
  double warp_ratio_hi = 1.0;
  double filter_db_lo = -3.0;
  double filter_db_hi = 3.0;
  int filter_bands_lo = 3;
  int filter_bands_hi = 6;

  void validate() const {
    if (!(mixup_alpha > 0.0)) throw ValidationError("mixup_alpha must be positive");
    if (fixed_lambda && !(*fixed_lambda >= 0.0 && *fixed_lambda <= 1.0))
      throw ValidationError("fixed_lambda must lie in [0,1]");
    if (!(warp_ratio_lo > 0.0 && warp_ratio_lo <= warp_ratio_hi && warp_ratio_hi <= 1.0))
      throw ValidationError("warp ratio range must satisfy 0 < lo <= hi <= 1");
    if (!(filter_db_lo <= filter_db_hi)) throw ValidationError("filter dB range must have lo <= hi");
    if (filter_bands_lo < 1 || filter_bands_lo > filter_bands_hi)
      throw ValidationError("filter band range must satisfy 1 <= lo <= hi");
  }
};

// out = lambda*a + (1-lambda)*b, labels mixed the same way.
inline std::pair<SpectroFeature, LabelVector> mixup(const SpectroFeature& a,
                                                    const SpectroFeature& b,
                                                    const LabelVector& labels_a,
                                                    const LabelVector& labels_b, double lambda) {
  if (!a.values.same_shape(b.values)) throw ValidationError("mixup of differently shaped features");
  if (labels_a.size() != labels_b.size()) throw ValidationError("mixup of different label lengths");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ValidationError("mixup lambda outside [0,1]");
  auto mix = [lambda](double x, double y) {
    if (lambda == 1.0) return x;
    if (lambda == 0.0) return y;
    return lambda * x + (1.0 - lambda) * y;
  };
  SpectroFeature out{a.clip_id, a.values};
  auto dst = out.values.data();
  auto src = b.values.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = mix(dst[i], src[i]);
  LabelVector labels(labels_a.size());
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = mix(labels_a[i], labels_b[i]);
  return {std::move(out), std::move(labels)};
}

inline std::size_t warp_crop_bins(double rho, std::size_t bins) {
  return static_cast<std::size_t>(std::lround(rho * static_cast<double>(bins)));
}

// Crops frequency bins [offset, offset + round(rho*F)) and stretches them back
// to F bins by linear interpolation (end points aligned).
inline SpectroFeature freq_warp(const SpectroFeature& x, double rho, long long offset) {
  const std::size_t F = x.values.bins();
  if (!(rho > 0.0 && rho <= 1.0)) throw ValidationError("warp ratio outside (0,1]");
  const std::size_t crop = warp_crop_bins(rho, F);
  if (crop < 2) throw ValidationError("warp crop shorter than 2 bins");
  if (offset < 0 || static_cast<std::size_t>(offset) + crop > F)
    throw ValidationError("warp offset out of bounds");
  SpectroFeature out{x.clip_id, Tensor3(x.values.channels(), x.values.frames(), F)};
  std::vector<std::size_t> lo(F);
  std::vector<double> frac(F);
  for (std::size_t i = 0; i < F; ++i) {
    double pos = static_cast<double>(i) * static_cast<double>(crop - 1) / static_cast<double>(F - 1);
    std::size_t base = std::min(static_cast<std::size_t>(pos), crop - 1);
    lo[i] = base + static_cast<std::size_t>(offset);
    frac[i] = pos - static_cast<double>(base);
  }
  for (std::size_t c = 0; c < x.values.channels(); ++c)
    for (std::size_t t = 0; t < x.values.frames(); ++t)
      for (std::size_t i = 0; i < F; ++i) {
        double v0 = x.values(c, t, lo[i]);
        out.values(c, t, i) = frac[i] == 0.0 ? v0 : v0 + frac[i] * (x.values(c, t, lo[i] + 1) - v0);
      }
  return out;
}

// Node positions (0, interior boundaries..., F-1) with their dB weights.
struct FilterNodes {
  std::vector<std::size_t> bins;
  std::vector<double> weights;
};

inline std::vector<double> interpolate_filter_nodes(std::size_t bins, const FilterNodes& nodes) {
  if (nodes.bins.size() < 2 || nodes.bins.size() != nodes.weights.size() ||
      nodes.bins.front() != 0 || nodes.bins.back() != bins - 1)
    throw ValidationError("filter nodes must span bin 0 to F-1");
  std::vector<double> curve(bins);
  for (std::size_t j = 0; j + 1 < nodes.bins.size(); ++j) {
    const std::size_t p0 = nodes.bins[j], p1 = nodes.bins[j + 1];
    if (p1 <= p0) throw ValidationError("filter nodes must be strictly increasing");
    const double w0 = nodes.weights[j], dw = nodes.weights[j + 1] - nodes.weights[j];
    const double span = static_cast<double>(p1 - p0);
    for (std::size_t f = p0; f <= p1; ++f) curve[f] = w0 + dw * static_cast<double>(f - p0) / span;
  }
  return curve;
}

inline FilterNodes sample_filter_nodes(RngStream& rng, std::size_t bins, const AugmentConfig& cfg) {
  if (bins < 2) throw ValidationError("filter curve needs at least 2 bins");
  auto bands = static_cast<std::size_t>(rng.uniform_int(cfg.filter_bands_lo, cfg.filter_bands_hi));
  bands = std::min(bands, bins - 1);

  std::vector<std::size_t> interior(bins - 2);
  for (std::size_t i = 0; i < interior.size(); ++i) interior[i] = i + 1;
  for (std::size_t i = 0; i + 1 < bands; ++i) {
    auto j = static_cast<std::size_t>(rng.uniform_int(static_cast<long long>(i),
                                                      static_cast<long long>(interior.size() - 1)));
    std::swap(interior[i], interior[j]);
  }
  FilterNodes nodes;
  nodes.bins.push_back(0);
  nodes.bins.insert(nodes.bins.end(), interior.begin(), interior.begin() + (bands - 1));
  nodes.bins.push_back(bins - 1);
  std::sort(nodes.bins.begin(), nodes.bins.end());
  for (std::size_t j = 0; j < nodes.bins.size(); ++j)
    nodes.weights.push_back(rng.uniform(cfg.filter_db_lo, cfg.filter_db_hi));
  return nodes;
}

// Piecewise-linear random dB gain over frequency.
inline std::vector<double> sample_filter_curve(RngStream& rng, std::size_t bins,
                                               const AugmentConfig& cfg) {
  return interpolate_filter_nodes(bins, sample_filter_nodes(rng, bins, cfg));
}

inline SpectroFeature filter_augment(const SpectroFeature& x, const std::vector<double>& curve) {
  if (curve.size() != x.values.bins())
    throw ValidationError("filter curve length does not match frequency bins");
  SpectroFeature out = x;
  for (std::size_t c = 0; c < x.values.channels(); ++c)
    for (std::size_t t = 0; t < x.values.frames(); ++t)
      for (std::size_t f = 0; f < curve.size(); ++f) out.values(c, t, f) += curve[f];
  return out;
}

struct AugmentDraws {
  double lambda = 1.0;
  double rho = 1.0;
  long long offset = 0;
  std::vector<double> curve;
};

// Draw order is fixed: lambda, warp ratio, warp offset, filter curve.
inline AugmentDraws draw_augment_params(RngStream& rng, std::size_t bins, const AugmentConfig& cfg) {
  AugmentDraws d;
  d.lambda = rng.beta(cfg.mixup_alpha, cfg.mixup_alpha);
  if (cfg.fixed_lambda) d.lambda = *cfg.fixed_lambda;
  d.rho = rng.uniform(cfg.warp_ratio_lo, cfg.warp_ratio_hi);
  const std::size_t crop = std::max<std::size_t>(2, warp_crop_bins(d.rho, bins));
  d.offset = rng.uniform_int(0, static_cast<long long>(bins - std::min(crop, bins)));
  d.curve = sample_filter_curve(rng, bins, cfg);
  return d;
}

inline std::pair<SpectroFeature, LabelVector> augment_chain(const SpectroFeature& a,
                                                            const SpectroFeature& b,
                                                            const LabelVector& labels_a,
                                                            const LabelVector& labels_b,
                                                            RngStream& rng,
                                                            const AugmentConfig& cfg) {
  cfg.validate();
  validate_feature(a);
  validate_feature(b);
  AugmentDraws d = draw_augment_params(rng, a.bins(), cfg);
  auto [mixed, labels] = mixup(a, b, labels_a, labels_b, d.lambda);
  SpectroFeature warped = freq_warp(mixed, d.rho, d.offset);
  return {filter_augment(warped, d.curve), std::move(labels)};
}

}  // namespace fredkit
