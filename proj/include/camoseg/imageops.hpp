#pragma once

#include "camoseg/tensor.hpp"

namespace camoseg {

// Plain (non-differentiable) image utilities shared by augmentation, the
// synthetic generator, and dataset IO. Inputs are [H,W] or [C,H,W] tensors;
// outputs are detached.

// Half-pixel-center bilinear resize.
Tensor resize_bilinear(const Tensor& img, int out_h, int out_w);
// Nearest-neighbor resize (for label maps).
Tensor resize_nearest(const Tensor& img, int out_h, int out_w);

// Separable gaussian blur; taps falling outside the image are dropped and
// the window renormalized (no darkening at borders). ksize odd.
Tensor gaussian_blur(const Tensor& img, double sigma, int ksize);

// Channel mean of a [3,H,W] image -> [H,W].
Tensor luminance(const Tensor& img);

}  // namespace camoseg
