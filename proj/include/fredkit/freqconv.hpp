#pragma once

// Inference-only forward kernels for frequency dynamic convolution (FDY),
// its partial and dilated variants (PFD, PDFD), channel squeeze-excitation
// and time-frame frequency-wise squeeze-excitation.
//
// Kernels are 3x3 over (time, frequency), cross-correlation convention,
// zero "same" padding. Frequency dilation d widens the frequency taps to
// offsets {-d, 0, +d}; time dilation is always 1.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "fredkit/core.hpp"
#include "fredkit/tensor.hpp"

namespace fredkit::freqconv {

inline constexpr std::size_t kTaps = 3;

// Weights laid out [out][in][time tap][freq tap].
struct ConvKernel {
  std::size_t out_channels = 0;
  std::size_t in_channels = 0;
  std::vector<double> weights;
  std::vector<double> bias;

  ConvKernel() = default;
  ConvKernel(std::size_t out, std::size_t in)
      : out_channels(out), in_channels(in), weights(out * in * kTaps * kTaps, 0.0), bias(out, 0.0) {}

  double& w(std::size_t o, std::size_t i, std::size_t kt, std::size_t kf) {
    return weights[((o * in_channels + i) * kTaps + kt) * kTaps + kf];
  }
  double w(std::size_t o, std::size_t i, std::size_t kt, std::size_t kf) const {
    return weights[((o * in_channels + i) * kTaps + kt) * kTaps + kf];
  }

  void validate() const {
    if (weights.size() != out_channels * in_channels * kTaps * kTaps || bias.size() != out_channels)
      throw ValidationError("kernel tensor sizes do not match channel counts");
  }
};

// K basis kernels sharing shape, each with its own frequency dilation.
struct BasisKernelBank {
  std::vector<ConvKernel> kernels;
  std::vector<int> freq_dilations;

  std::size_t size() const { return kernels.size(); }
  bool empty() const { return kernels.empty(); }
  std::size_t out_channels() const { return kernels.empty() ? 0 : kernels.front().out_channels; }
  std::size_t in_channels() const { return kernels.empty() ? 0 : kernels.front().in_channels; }

  void validate() const {
    if (kernels.size() != freq_dilations.size())
      throw ValidationError("basis bank needs one dilation per kernel");
    for (const auto& k : kernels) {
      k.validate();
      if (k.out_channels != out_channels() || k.in_channels != in_channels())
        throw ValidationError("basis kernels must share a shape");
    }
    for (int d : freq_dilations)
      if (d < 1) throw ValidationError("frequency dilation must be >= 1");
  }
};

// Frequency-wise attention over basis kernels: time-average squeeze,
// pointwise C_in -> hidden, ReLU, pointwise hidden -> K, softmax / temperature.
struct AttentionParams {
  std::size_t in_channels = 0;
  std::size_t hidden = 0;
  std::size_t basis = 0;
  std::vector<double> w1;  // hidden x in
  std::vector<double> b1;  // hidden
  std::vector<double> w2;  // basis x hidden
  std::vector<double> b2;  // basis
  double temperature = 31.0;

  static std::size_t default_hidden(std::size_t in_channels) {
    return std::max<std::size_t>(in_channels / 4, 4);
  }

  static AttentionParams zeros(std::size_t in_channels, std::size_t basis, std::size_t hidden = 0) {
    AttentionParams p;
    p.in_channels = in_channels;
    p.hidden = hidden ? hidden : default_hidden(in_channels);
    p.basis = basis;
    p.w1.assign(p.hidden * in_channels, 0.0);
    p.b1.assign(p.hidden, 0.0);
    p.w2.assign(basis * p.hidden, 0.0);
    p.b2.assign(basis, 0.0);
    return p;
  }

  void validate() const {
    if (w1.size() != hidden * in_channels || b1.size() != hidden || w2.size() != basis * hidden ||
        b2.size() != basis)
      throw ValidationError("attention parameter sizes are inconsistent");
    if (!(temperature > 0.0)) throw ValidationError("attention temperature must be positive");
    for (const auto* v : {&w1, &b1, &w2, &b2})
      for (double x : *v)
        if (!std::isfinite(x)) throw ValidationError("non-finite attention parameter");
  }
};

struct PartialConvConfig {
  double proportion = 0.125;
  ConvKernel static_kernel;  // (C_out - C_dyn) x C_in

  static std::size_t dynamic_channels(double proportion, std::size_t out_channels) {
    return static_cast<std::size_t>(std::lround(proportion * static_cast<double>(out_channels)));
  }
};

// Two-layer perceptron in -> hidden (ReLU) -> out.
struct Mlp {
  std::size_t in = 0;
  std::size_t hidden = 0;
  std::size_t out = 0;
  std::vector<double> w1, b1, w2, b2;

  static Mlp zeros(std::size_t in, std::size_t hidden, std::size_t out) {
    Mlp m{in, hidden, out, {}, {}, {}, {}};
    m.w1.assign(hidden * in, 0.0);
    m.b1.assign(hidden, 0.0);
    m.w2.assign(out * hidden, 0.0);
    m.b2.assign(out, 0.0);
    return m;
  }

  void validate() const {
    if (hidden < 1) throw ValidationError("squeeze-excitation hidden size must be >= 1");
    if (w1.size() != hidden * in || b1.size() != hidden || w2.size() != out * hidden ||
        b2.size() != out)
      throw ValidationError("squeeze-excitation parameter sizes are inconsistent");
  }

  std::vector<double> logits(const std::vector<double>& x) const {
    std::vector<double> h(hidden);
    for (std::size_t j = 0; j < hidden; ++j) {
      double acc = b1[j];
      for (std::size_t i = 0; i < in; ++i) acc += w1[j * in + i] * x[i];
      h[j] = std::max(acc, 0.0);
    }
    std::vector<double> y(out);
    for (std::size_t k = 0; k < out; ++k) {
      double acc = b2[k];
      for (std::size_t j = 0; j < hidden; ++j) acc += w2[k * hidden + j] * h[j];
      y[k] = acc;
    }
    return y;
  }
};

// channel: C -> C/r -> C; freq: F -> F/r -> F shared across frames.
struct SEParams {
  Mlp channel;
  Mlp freq;

  static std::size_t reduced(std::size_t n, std::size_t r) { return std::max<std::size_t>(n / r, 1); }
};

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

namespace detail {

inline void check_dilation(int dilation, std::size_t bins) {
  if (dilation < 1) throw ValidationError("frequency dilation must be >= 1");
  if (static_cast<std::size_t>(dilation) >= bins)
    throw ValidationError("frequency dilation " + std::to_string(dilation) +
                          " leaves no in-range side taps for " + std::to_string(bins) + " bins");
}

// Adds conv(x; kernel, dilation) * scale[f] (per output frequency) into out,
// starting at output channel out_offset. scale may be empty (weight 1).
inline void accumulate_conv(const Tensor3& x, const ConvKernel& kernel, int dilation,
                            const std::vector<double>& scale, Tensor3& out,
                            std::size_t out_offset) {
  const std::size_t T = x.frames(), F = x.bins();
  const auto d = static_cast<long long>(dilation);
  for (std::size_t o = 0; o < kernel.out_channels; ++o) {
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t f = 0; f < F; ++f) {
        double acc = kernel.bias[o];
        for (std::size_t i = 0; i < kernel.in_channels; ++i) {
          for (std::size_t kt = 0; kt < kTaps; ++kt) {
            const long long ts = static_cast<long long>(t) + static_cast<long long>(kt) - 1;
            if (ts < 0 || ts >= static_cast<long long>(T)) continue;
            for (std::size_t kf = 0; kf < kTaps; ++kf) {
              const long long fs = static_cast<long long>(f) + (static_cast<long long>(kf) - 1) * d;
              if (fs < 0 || fs >= static_cast<long long>(F)) continue;
              acc += kernel.w(o, i, kt, kf) *
                     x(i, static_cast<std::size_t>(ts), static_cast<std::size_t>(fs));
            }
          }
        }
        out(out_offset + o, t, f) += scale.empty() ? acc : scale[f] * acc;
      }
    }
  }
}

}  // namespace detail

// Standard same-padded conv with frequency dilation.
inline Tensor3 conv2d(const Tensor3& x, const ConvKernel& kernel, int freq_dilation = 1) {
  kernel.validate();
  if (x.channels() != kernel.in_channels) throw ValidationError("conv input channel mismatch");
  detail::check_dilation(freq_dilation, x.bins());
  Tensor3 out(kernel.out_channels, x.frames(), x.bins());
  detail::accumulate_conv(x, kernel, freq_dilation, {}, out, 0);
  return out;
}

// K x F attention weights; entry (k, f) at index k * F + f. Columns sum to 1.
inline std::vector<double> freq_attention(const Tensor3& x, const AttentionParams& p) {
  p.validate();
  if (x.channels() != p.in_channels) throw ValidationError("attention input channel mismatch");
  const std::size_t T = x.frames(), F = x.bins(), K = p.basis;
  std::vector<double> att(K * F);
  std::vector<double> z(p.in_channels), h(p.hidden), logits(K);
  for (std::size_t f = 0; f < F; ++f) {
    for (std::size_t c = 0; c < p.in_channels; ++c) {
      double s = 0.0;
      for (std::size_t t = 0; t < T; ++t) s += x(c, t, f);
      z[c] = s / static_cast<double>(T);
    }
    for (std::size_t j = 0; j < p.hidden; ++j) {
      double acc = p.b1[j];
      for (std::size_t c = 0; c < p.in_channels; ++c) acc += p.w1[j * p.in_channels + c] * z[c];
      h[j] = std::max(acc, 0.0);
    }
    double peak = -INFINITY;
    for (std::size_t k = 0; k < K; ++k) {
      double acc = p.b2[k];
      for (std::size_t j = 0; j < p.hidden; ++j) acc += p.w2[k * p.hidden + j] * h[j];
      logits[k] = acc / p.temperature;
      peak = std::max(peak, logits[k]);
    }
    double norm = 0.0;
    for (std::size_t k = 0; k < K; ++k) norm += (logits[k] = std::exp(logits[k] - peak));
    for (std::size_t k = 0; k < K; ++k) att[k * F + f] = logits[k] / norm;
  }
  return att;
}

inline void check_fdy_inputs(const Tensor3& x, const BasisKernelBank& bank,
                             const std::vector<double>& att) {
  bank.validate();
  if (bank.empty()) throw ValidationError("frequency dynamic conv needs at least one basis kernel");
  if (x.channels() != bank.in_channels()) throw ValidationError("conv input channel mismatch");
  if (att.size() != bank.size() * x.bins())
    throw ValidationError("attention must be K x F for the given bank and input");
  for (int d : bank.freq_dilations) detail::check_dilation(d, x.bins());
}

// Attention-weighted sum of per-basis conv outputs. By linearity in the
// kernel this equals convolving with W(f) = sum_k att[k,f] W_k at each f.
inline Tensor3 fdy_forward(const Tensor3& x, const BasisKernelBank& bank,
                           const std::vector<double>& att) {
  check_fdy_inputs(x, bank, att);
  const std::size_t F = x.bins();
  Tensor3 out(bank.out_channels(), x.frames(), F);
  std::vector<double> scale(F);
  for (std::size_t k = 0; k < bank.size(); ++k) {
    std::copy_n(att.begin() + static_cast<std::ptrdiff_t>(k * F), F, scale.begin());
    detail::accumulate_conv(x, bank.kernels[k], bank.freq_dilations[k], scale, out, 0);
  }
  return out;
}

// Reference: at every output frequency, materialize the dilated basis
// kernels on a dense (3 x (2*dmax+1)) grid, mix them with that frequency's
// attention, then slide the assembled kernel. No linearity shortcut.
inline Tensor3 naive_oracle_forward(const Tensor3& x, const BasisKernelBank& bank,
                                    const std::vector<double>& att) {
  check_fdy_inputs(x, bank, att);
  const std::size_t T = x.frames(), F = x.bins(), K = bank.size();
  const std::size_t C_out = bank.out_channels(), C_in = bank.in_channels();
  const int dmax = *std::max_element(bank.freq_dilations.begin(), bank.freq_dilations.end());
  const std::size_t width = static_cast<std::size_t>(2 * dmax + 1);

  // dense[k][o][i][kt][w]
  std::vector<double> dense(K * C_out * C_in * kTaps * width, 0.0);
  auto dense_at = [&](std::size_t k, std::size_t o, std::size_t i, std::size_t kt,
                      std::size_t w) -> double& {
    return dense[(((k * C_out + o) * C_in + i) * kTaps + kt) * width + w];
  };
  for (std::size_t k = 0; k < K; ++k) {
    const int d = bank.freq_dilations[k];
    for (std::size_t o = 0; o < C_out; ++o)
      for (std::size_t i = 0; i < C_in; ++i)
        for (std::size_t kt = 0; kt < kTaps; ++kt)
          for (std::size_t kf = 0; kf < kTaps; ++kf)
            dense_at(k, o, i, kt, static_cast<std::size_t>(dmax + (static_cast<int>(kf) - 1) * d)) =
                bank.kernels[k].w(o, i, kt, kf);
  }

  Tensor3 out(C_out, T, F);
  std::vector<double> assembled(C_out * C_in * kTaps * width);
  std::vector<double> bias(C_out);
  for (std::size_t f = 0; f < F; ++f) {
    std::fill(assembled.begin(), assembled.end(), 0.0);
    std::fill(bias.begin(), bias.end(), 0.0);
    for (std::size_t k = 0; k < K; ++k) {
      const double a = att[k * F + f];
      for (std::size_t o = 0; o < C_out; ++o) {
        bias[o] += a * bank.kernels[k].bias[o];
        for (std::size_t i = 0; i < C_in; ++i)
          for (std::size_t kt = 0; kt < kTaps; ++kt)
            for (std::size_t w = 0; w < width; ++w)
              assembled[((o * C_in + i) * kTaps + kt) * width + w] += a * dense_at(k, o, i, kt, w);
      }
    }
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t o = 0; o < C_out; ++o) {
        double acc = bias[o];
        for (std::size_t i = 0; i < C_in; ++i)
          for (std::size_t kt = 0; kt < kTaps; ++kt)
            for (std::size_t w = 0; w < width; ++w) {
              const long long ts = static_cast<long long>(t + kt) - 1;
              const long long fs = static_cast<long long>(f + w) - dmax;
              if (ts < 0 || ts >= static_cast<long long>(T) || fs < 0 ||
                  fs >= static_cast<long long>(F))
                continue;
              acc += assembled[((o * C_in + i) * kTaps + kt) * width + w] *
                     x(i, static_cast<std::size_t>(ts), static_cast<std::size_t>(fs));
            }
        out(o, t, f) = acc;
      }
    }
  }
  return out;
}

// Static conv channels first, then round(proportion * C_out) dynamic
// channels. PDFD is this with non-uniform bank dilations.
inline Tensor3 pfd_forward(const Tensor3& x, const PartialConvConfig& cfg,
                           const BasisKernelBank& bank, const AttentionParams& att_params) {
  if (!(cfg.proportion >= 0.0 && cfg.proportion <= 1.0))
    throw ValidationError("partial conv proportion outside [0,1]");
  const std::size_t C_static = cfg.static_kernel.out_channels;
  const std::size_t C_dyn = bank.out_channels();
  const std::size_t C_out = C_static + C_dyn;
  if (C_out == 0) throw ValidationError("partial conv has no output channels");
  const std::size_t expected_dyn = PartialConvConfig::dynamic_channels(cfg.proportion, C_out);
  if (expected_dyn == 0 && !bank.empty())
    throw ValidationError("proportion yields no dynamic channels but the basis bank is non-empty");
  if (expected_dyn != C_dyn)
    throw ValidationError("proportion implies " + std::to_string(expected_dyn) +
                          " dynamic channels, bank has " + std::to_string(C_dyn));

  Tensor3 out(C_out, x.frames(), x.bins());
  if (C_static > 0) {
    cfg.static_kernel.validate();
    if (cfg.static_kernel.in_channels != x.channels())
      throw ValidationError("conv input channel mismatch");
    detail::accumulate_conv(x, cfg.static_kernel, 1, {}, out, 0);
  }
  if (C_dyn > 0) {
    if (att_params.basis != bank.size())
      throw ValidationError("attention basis count does not match bank");
    Tensor3 dyn = fdy_forward(x, bank, freq_attention(x, att_params));
    for (std::size_t o = 0; o < C_dyn; ++o)
      for (std::size_t t = 0; t < x.frames(); ++t)
        for (std::size_t f = 0; f < x.bins(); ++f) out(C_static + o, t, f) = dyn(o, t, f);
  }
  return out;
}

// pfd_forward evaluated through naive_oracle_forward for both branches; the
// static branch is a one-basis bank with unit attention.
inline Tensor3 naive_partial_forward(const Tensor3& x, const PartialConvConfig& cfg,
                                     const BasisKernelBank& bank, const AttentionParams& att_params) {
  const std::size_t C_static = cfg.static_kernel.out_channels;
  const std::size_t C_dyn = bank.out_channels();
  Tensor3 out(C_static + C_dyn, x.frames(), x.bins());
  if (C_static > 0) {
    BasisKernelBank single{{cfg.static_kernel}, {1}};
    Tensor3 s = naive_oracle_forward(x, single, std::vector<double>(x.bins(), 1.0));
    for (std::size_t o = 0; o < C_static; ++o)
      for (std::size_t t = 0; t < x.frames(); ++t)
        for (std::size_t f = 0; f < x.bins(); ++f) out(o, t, f) = s(o, t, f);
  }
  if (C_dyn > 0) {
    Tensor3 d = naive_oracle_forward(x, bank, freq_attention(x, att_params));
    for (std::size_t o = 0; o < C_dyn; ++o)
      for (std::size_t t = 0; t < x.frames(); ++t)
        for (std::size_t f = 0; f < x.bins(); ++f) out(C_static + o, t, f) = d(o, t, f);
  }
  return out;
}

// Channel squeeze-excitation: gate[c] = sigmoid(MLP(mean_{t,f} x[c])).
inline Tensor3 se_forward(const Tensor3& x, const SEParams& p) {
  p.channel.validate();
  if (p.channel.in != x.channels() || p.channel.out != x.channels())
    throw ValidationError("channel SE size does not match input channels");
  std::vector<double> squeeze(x.channels());
  const double n = static_cast<double>(x.frames() * x.bins());
  for (std::size_t c = 0; c < x.channels(); ++c) {
    double s = 0.0;
    for (std::size_t t = 0; t < x.frames(); ++t)
      for (std::size_t f = 0; f < x.bins(); ++f) s += x(c, t, f);
    squeeze[c] = s / n;
  }
  auto logits = p.channel.logits(squeeze);
  Tensor3 out = x;
  for (std::size_t c = 0; c < x.channels(); ++c) {
    const double g = sigmoid(logits[c]);
    for (std::size_t t = 0; t < x.frames(); ++t)
      for (std::size_t f = 0; f < x.bins(); ++f) out(c, t, f) *= g;
  }
  return out;
}

// Time-frame frequency-wise SE: per frame, gate[t,f] from the channel-mean
// frequency profile through an MLP shared across frames.
inline Tensor3 tfwse_forward(const Tensor3& x, const SEParams& p) {
  p.freq.validate();
  if (p.freq.in != x.bins() || p.freq.out != x.bins())
    throw ValidationError("tfwSE size does not match frequency bins");
  Tensor3 out = x;
  std::vector<double> profile(x.bins());
  for (std::size_t t = 0; t < x.frames(); ++t) {
    for (std::size_t f = 0; f < x.bins(); ++f) {
      double s = 0.0;
      for (std::size_t c = 0; c < x.channels(); ++c) s += x(c, t, f);
      profile[f] = s / static_cast<double>(x.channels());
    }
    auto logits = p.freq.logits(profile);
    for (std::size_t f = 0; f < x.bins(); ++f) {
      const double g = sigmoid(logits[f]);
      for (std::size_t c = 0; c < x.channels(); ++c) out(c, t, f) *= g;
    }
  }
  return out;
}

}  // namespace fredkit::freqconv
