#pragma once

#include <vector>

#include "spdnet/mat.hpp"

namespace spdnet {

// Stack of C square D x D matrices, the multi-channel manifold-valued
// feature map. The SPD property of each channel is a contract, certified
// explicitly by certify_spd rather than enforced on construction.
struct McSpdTensor {
  std::vector<Mat> channels;

  McSpdTensor() = default;
  explicit McSpdTensor(std::vector<Mat> ch) : channels(std::move(ch)) {}

  static McSpdTensor zeros(int channel_count, int dim) {
    McSpdTensor t;
    t.channels.assign(channel_count, Mat(dim, dim));
    return t;
  }

  int channel_count() const { return int(channels.size()); }
  int dim() const { return channels.empty() ? 0 : channels.front().rows(); }

  const Mat& channel(int i) const { return channels[i]; }
  Mat& channel(int i) { return channels[i]; }
};

}  // namespace spdnet
