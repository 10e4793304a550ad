#pragma once

#include <algorithm>
#include <vector>

#include "fredkit/core.hpp"

namespace fredkit {

// Zero-pad `pad_frames` on both ends, then max-pool along time. Defaults turn
// 156 frames of 64 ms into 10 coarse frames.
struct PoolingSpec {
  int pad_frames = 2;
  int window = 16;
  int stride = 16;

  void validate() const {
    if (window < 1 || stride < 1 || pad_frames < 0)
      throw ValidationError("pooling needs window >= 1, stride >= 1, pad >= 0");
  }
};

inline std::size_t coarse_frames(std::size_t frames, const PoolingSpec& spec) {
  const std::size_t padded = frames + 2 * static_cast<std::size_t>(spec.pad_frames);
  const auto window = static_cast<std::size_t>(spec.window);
  if (padded < window)
    throw ValidationError("pooling window " + std::to_string(window) + " exceeds padded length " +
                          std::to_string(padded));
  return (padded - window) / static_cast<std::size_t>(spec.stride) + 1;
}

inline ScoreMatrix coarse_pool(const ScoreMatrix& m, const PoolingSpec& spec) {
  spec.validate();
  const std::size_t out_frames = coarse_frames(m.frames(), spec);
  const std::size_t C = m.classes();
  const auto pad = static_cast<long long>(spec.pad_frames);
  const auto T = static_cast<long long>(m.frames());
  std::vector<double> out(out_frames * C, 0.0);
  for (std::size_t j = 0; j < out_frames; ++j) {
    // Padded index p maps to frame p - pad; padding contributes 0, which
    // never wins a max over values in [0,1] unless the window is all padding.
    const long long begin = static_cast<long long>(j) * spec.stride - pad;
    const long long lo = std::max(begin, 0LL);
    const long long hi = std::min(begin + spec.window, T);
    for (long long t = lo; t < hi; ++t)
      for (std::size_t c = 0; c < C; ++c)
        out[j * C + c] = std::max(out[j * C + c], m.at(static_cast<std::size_t>(t), c));
  }
  return ScoreMatrix(m.clip_id(), m.frame_period() * spec.stride, out_frames, C, std::move(out));
}

}  // namespace fredkit
