#pragma once

#include <stdexcept>

#include "camoseg/geometry.hpp"
#include "camoseg/tensor.hpp"

namespace camoseg {

// Thrown when a computation needs valid pixels/windows and none exist
// (e.g. SSIM over an empty joint-valid region). The trainer catches this and
// skips the sample.
struct InsufficientValidArea : std::runtime_error {
  InsufficientValidArea() : std::runtime_error("insufficient valid area") {}
};

enum class PixelWeightVariant {
  kPseudo,            // confidence only: y
  kDist,              // distance from the center: (y - mu)^2
  kOneMinusDelta,     // consistency only: 1 - delta^alpha
  kDeltaTimesPseudo,  // (1 - delta^alpha) * y
  kFull,              // (1 - delta^alpha) * (y - mu)^2
  kUniform,           // constant 1 (plain mean-teacher baseline)
};

struct PixelWeightConfig {
  double alpha = 0.25;  // exponent flattening the inconsistency map
  double mu = 0.5;      // center of the prediction distribution
  PixelWeightVariant variant = PixelWeightVariant::kFull;
};

struct SsimConfig {
  int window = 11;
  double sigma = 1.5;
  double c1 = 1e-4;  // (0.01)^2, dynamic range 1
  double c2 = 9e-4;  // (0.03)^2
};

struct InstanceWeightConfig {
  double beta = 4.0;
  SsimConfig ssim;
};

// |h1 - h2| on the valid region, 0 elsewhere. Inputs are the two predictions
// brought back to the horizontal frame.
Tensor pixel_inconsistency(const Tensor& h1, const Tensor& h2, const Mask& valid);

// (h1 + h2) / 2.
Tensor mean_horizontal(const Tensor& h1, const Tensor& h2);

// Per-pixel reliability weight from the inconsistency map and the mean
// horizontal prediction; all variants are computed in the horizontal frame.
Tensor pixel_weight(const Tensor& delta, const Tensor& y_h, const PixelWeightConfig& cfg);

// Gaussian-windowed SSIM averaged over windows that lie fully inside the
// image and whose pixels are all valid. Window shrinks to the largest odd
// size that fits when the map is smaller than cfg.window. Throws
// InsufficientValidArea when no window qualifies.
double ssim(const Tensor& a, const Tensor& b, const Mask& valid, const SsimConfig& cfg);

// clamp(ssim, 0, 1) ^ beta.
double instance_weight(const Tensor& h1, const Tensor& h2, const Mask& valid,
                       const InstanceWeightConfig& cfg);

}  // namespace camoseg
