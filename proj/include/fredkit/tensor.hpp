#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "fredkit/core.hpp"

namespace fredkit {

// Dense channel x time x frequency array, frequency fastest.
class Tensor3 {
 public:
  Tensor3() = default;
  Tensor3(std::size_t channels, std::size_t frames, std::size_t bins, double fill = 0.0)
      : channels_(channels), frames_(frames), bins_(bins), data_(channels * frames * bins, fill) {}
  Tensor3(std::size_t channels, std::size_t frames, std::size_t bins, std::vector<double> data)
      : channels_(channels), frames_(frames), bins_(bins), data_(std::move(data)) {
    if (data_.size() != channels_ * frames_ * bins_)
      throw ValidationError("tensor data size does not match its shape");
  }

  std::size_t channels() const { return channels_; }
  std::size_t frames() const { return frames_; }
  std::size_t bins() const { return bins_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t c, std::size_t t, std::size_t f) {
    return data_[(c * frames_ + t) * bins_ + f];
  }
  double operator()(std::size_t c, std::size_t t, std::size_t f) const {
    return data_[(c * frames_ + t) * bins_ + f];
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  bool same_shape(const Tensor3& o) const {
    return channels_ == o.channels_ && frames_ == o.frames_ && bins_ == o.bins_;
  }

  friend bool operator==(const Tensor3&, const Tensor3&) = default;

 private:
  std::size_t channels_ = 0;
  std::size_t frames_ = 0;
  std::size_t bins_ = 0;
  std::vector<double> data_;
};

// Max |a-b| divided by max |b|; zero when both are all-zero.
inline double normwise_relative_error(const Tensor3& a, const Tensor3& b) {
  if (!a.same_shape(b)) throw ValidationError("relative error of differently shaped tensors");
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a.data()[i] - b.data()[i]));
    scale = std::max(scale, std::abs(b.data()[i]));
  }
  if (diff == 0.0) return 0.0;
  return scale > 0.0 ? diff / scale : diff;
}

}  // namespace fredkit
