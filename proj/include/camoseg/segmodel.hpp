#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "camoseg/tensor.hpp"

namespace camoseg {

// Compact encoder/decoder for single-class segmentation:
//   conv3x3(3->16)            + leaky(0.1)
//   conv3x3(16->32, stride 2) + leaky        H/2
//   conv3x3(32->64, stride 2) + leaky        H/4
//   conv3x3(64->64)           + leaky
//   up x2, conv3x3(64->32)    + leaky        H/2
//   up x2, conv3x3(32->16)    + leaky        H
//   conv1x1(16->1)            + sigmoid
// 83,617 parameters. Input H and W must be divisible by 4.
struct ModelParams {
  std::vector<Tensor> tensors;      // kernel,bias per layer, in forward order
  std::vector<std::string> names;   // "conv1.weight", "conv1.bias", ...

  // He-style uniform init U(-b, b), b = sqrt(6 / fan_in); biases zero.
  static ModelParams init(std::uint64_t seed, bool requires_grad = true);

  std::size_t total_params() const;
  ModelParams clone(bool requires_grad) const;
};

// Expected total parameter count of the fixed architecture.
std::size_t model_param_count();

// image [N,3,H,W] -> prediction [N,H,W] in (0,1).
Tensor model_forward(const ModelParams& params, const Tensor& image);

}  // namespace camoseg
