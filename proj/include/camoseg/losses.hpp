#pragma once

#include "camoseg/tensor.hpp"

namespace camoseg {

struct LossWeights {
  double lambda_pc = 8.0;
  double lambda_ic = 0.3;
};

// Clamp applied to predictions (and implicit denominators) inside the losses
// so saturated sigmoids stay finite.
inline constexpr double kLossEps = 1e-7;

// Mean over valid pixels of -w * [t*log(p) + (1-t)*log(1-p)], with p clamped
// to [eps, 1-eps]. `weight` and `valid01` may be undefined (treated as all
// ones). target/weight must be detached; soft targets are fine.
Tensor bce(const Tensor& pred, const Tensor& target, const Tensor& weight, const Tensor& valid01);
Tensor bce(const Tensor& pred, const Tensor& target);

// Mean over valid pixels of 1 - (p*t + eps)/(p + t - p*t + eps), scaled by
// the scalar instance weight.
Tensor soft_iou(const Tensor& pred, const Tensor& target, double instance_weight,
                const Tensor& valid01);

// l_s + lambda_pc * l_pc + lambda_ic * l_ic
Tensor total_loss(const Tensor& l_s, const Tensor& l_pc, const Tensor& l_ic,
                  const LossWeights& w);

}  // namespace camoseg
