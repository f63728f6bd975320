#pragma once

#include "camoseg/rng.hpp"
#include "camoseg/tensor.hpp"

namespace camoseg {

struct WeakAugmentConfig {
  double flip_prob = 0.5;
  double scale_lo = 0.75;
  double scale_hi = 1.25;
};

struct StrongAugmentConfig {
  int max_ops = 3;  // number of photometric ops drawn uniformly from {0..max_ops}
};

struct WeakResult {
  Tensor image;  // [3,H,W]
  Tensor mask;   // [H,W], undefined when no mask was given
};

// Horizontal flip (with probability flip_prob) followed by uniform rescale
// and center crop/pad back to the original size. The same geometric
// transform hits image (bilinear) and mask (nearest); padding is 0.
WeakResult weak_augment(const Tensor& image, const Tensor& mask, const WeakAugmentConfig& cfg,
                        Rng& rng);

// The individual photometric ops. `param` is the op's single knob where it
// has one: blur sigma, contrast/color/brightness factor, sharpness amount,
// hue shift (turns), posterize bit count, solarize threshold.
enum class PhotoOp {
  kIdentity = 0,
  kAutocontrast,
  kEqualize,
  kGaussianBlur,
  kContrast,
  kSharpness,
  kColor,
  kBrightness,
  kHue,
  kPosterize,
  kSolarize,
};
inline constexpr int kPhotoOpCount = 11;

// Apply one op to a [3,H,W] image and clamp to [0,1].
Tensor photometric(const Tensor& image, PhotoOp op, double param = 0.0);

// Photometric-only pipeline: draws k in {0..max_ops} ops without replacement
// from the PhotoOp list, draws each op's parameter, applies them in draw
// order (clamping to [0,1] after each). Pixel geometry is never touched.
Tensor strong_augment(const Tensor& image, const StrongAugmentConfig& cfg, Rng& rng);

}  // namespace camoseg
