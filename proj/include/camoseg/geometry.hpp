#pragma once

#include <cstdint>
#include <vector>

#include "camoseg/tensor.hpp"

namespace camoseg {

// Per-pixel validity bitmap accompanying rotated maps.
struct Mask {
  int h = 0, w = 0;
  std::vector<std::uint8_t> bits;  // 1 = valid

  static Mask all_valid(int h, int w);
  static Mask none(int h, int w);

  bool get(int r, int c) const { return bits[static_cast<std::size_t>(r) * w + c] != 0; }
  void set(int r, int c, bool v) {
    bits[static_cast<std::size_t>(r) * w + c] = v ? 1 : 0;
  }
  std::size_t count() const;
  double fraction() const;
  bool any() const { return count() > 0; }
  bool all() const { return count() == bits.size(); }
  Mask and_with(const Mask& other) const;
  // [H,W] tensor of 0/1 values, detached (for masked loss terms).
  Tensor to_tensor() const;

  bool operator==(const Mask& other) const = default;
};

// A map together with the angle it was rotated by and which pixels carry
// real (non-padding) content.
struct RotatedView {
  Tensor data;  // [H,W] or [C,H,W], values sampled bilinearly; 0 where invalid
  double angle_deg = 0.0;
  Mask valid;
};

// Rotate counter-clockwise by angle_deg about the image center ((H-1)/2,
// (W-1)/2), same-size canvas. Destination pixels whose four bilinear source
// neighbors are not all in-bounds are 0/invalid. Multiples of 90 degrees take
// an exact index-permutation path (square maps for odd quarter-turns).
RotatedView rotate(const Tensor& map, double angle_deg);

// Rotate back by -angle_deg; output validity additionally requires all four
// source neighbors to be valid in the view's own mask (conservative border
// handling). Result angle is 0 ("horizontal frame").
RotatedView unrotate(const RotatedView& view);

// Rotate a bare validity mask: destination valid iff in-footprint and all
// four source neighbors valid.
Mask rotate_mask(const Mask& m, double angle_deg);

// Pixelwise AND of two views' masks (shapes must match).
Mask joint_valid(const RotatedView& a, const RotatedView& b);

}  // namespace camoseg
