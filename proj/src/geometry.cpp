#include "camoseg/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace camoseg {

Mask Mask::all_valid(int h, int w) {
  Mask m;
  m.h = h;
  m.w = w;
  m.bits.assign(static_cast<std::size_t>(h) * w, 1);
  return m;
}

Mask Mask::none(int h, int w) {
  Mask m;
  m.h = h;
  m.w = w;
  m.bits.assign(static_cast<std::size_t>(h) * w, 0);
  return m;
}

std::size_t Mask::count() const {
  std::size_t n = 0;
  for (auto b : bits) n += b;
  return n;
}

double Mask::fraction() const {
  if (bits.empty()) return 0.0;
  return static_cast<double>(count()) / static_cast<double>(bits.size());
}

Mask Mask::and_with(const Mask& other) const {
  if (h != other.h || w != other.w)
    throw std::invalid_argument("mask and: shape mismatch [" + std::to_string(h) + "," +
                                std::to_string(w) + "] vs [" + std::to_string(other.h) + "," +
                                std::to_string(other.w) + "]");
  Mask out = *this;
  for (std::size_t i = 0; i < bits.size(); ++i) out.bits[i] = bits[i] & other.bits[i];
  return out;
}

Tensor Mask::to_tensor() const {
  std::vector<double> v(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) v[i] = bits[i] ? 1.0 : 0.0;
  return Tensor::from_data({h, w}, std::move(v), false);
}

namespace {

struct MapDims {
  int c, h, w;  // c == 0 for mask-only rotation
};

MapDims dims_of(const Tensor& map) {
  MapDims d{};
  if (map.ndim() == 2) {
    d.c = 1;
    d.h = map.dim(0);
    d.w = map.dim(1);
  } else if (map.ndim() == 3) {
    d.c = map.dim(0);
    d.h = map.dim(1);
    d.w = map.dim(2);
  } else {
    throw std::invalid_argument("rotate: map must be [H,W] or [C,H,W], got " +
                                shape_str(map.shape()));
  }
  if (d.h < 2 || d.w < 2)
    throw std::invalid_argument("rotate: degenerate shape " + shape_str(map.shape()) +
                                " (need H,W >= 2)");
  return d;
}

bool quarter_turns(double angle_deg, int* turns) {
  if (std::fmod(angle_deg, 90.0) != 0.0) return false;
  long long t = std::llround(angle_deg / 90.0);
  *turns = static_cast<int>(((t % 4) + 4) % 4);
  return true;
}

// Exact source index for a quarter-turn; caller guarantees H == W for odd
// turn counts.
inline void exact_src(int turns, int h, int w, int r, int c, int* rs, int* cs) {
  switch (turns) {
    case 0:
      *rs = r;
      *cs = c;
      break;
    case 1:  // 90 CCW
      *rs = c;
      *cs = w - 1 - r;
      break;
    case 2:
      *rs = h - 1 - r;
      *cs = w - 1 - c;
      break;
    default:  // 270 CCW
      *rs = h - 1 - c;
      *cs = r;
      break;
  }
}

// Shared rotation core: samples `data` (c channels, may be null for
// mask-only rotation), honoring an optional input validity mask.
void rotate_core(const double* data, const Mask* in_mask, int c, int h, int w, double angle_deg,
                 std::vector<double>* out_data, Mask* out_mask) {
  *out_mask = Mask::none(h, w);
  if (out_data) out_data->assign(static_cast<std::size_t>(c) * h * w, 0.0);
  const std::size_t plane = static_cast<std::size_t>(h) * w;

  int turns = 0;
  if (quarter_turns(angle_deg, &turns) && (turns % 2 == 0 || h == w)) {
    for (int r = 0; r < h; ++r) {
      for (int col = 0; col < w; ++col) {
        int rs, cs;
        exact_src(turns, h, w, r, col, &rs, &cs);
        const bool ok = !in_mask || in_mask->get(rs, cs);
        out_mask->set(r, col, ok);
        if (ok && out_data) {
          for (int ch = 0; ch < c; ++ch)
            (*out_data)[ch * plane + static_cast<std::size_t>(r) * w + col] =
                data[ch * plane + static_cast<std::size_t>(rs) * w + cs];
        }
      }
    }
    return;
  }

  // General path: inverse-map each destination pixel and sample bilinearly.
  // Factored interpolation form keeps constant regions exactly constant.
  const double rad = angle_deg * (3.14159265358979323846 / 180.0);
  const double cs_ = std::cos(rad), sn = std::sin(rad);
  const double cx = (w - 1) * 0.5, cy = (h - 1) * 0.5;
  for (int r = 0; r < h; ++r) {
    const double v = r - cy;
    for (int col = 0; col < w; ++col) {
      const double u = col - cx;
      const double xs = cs_ * u - sn * v + cx;
      const double ys = sn * u + cs_ * v + cy;
      const int x0 = static_cast<int>(std::floor(xs));
      const int y0 = static_cast<int>(std::floor(ys));
      if (x0 < 0 || y0 < 0 || x0 + 1 > w - 1 || y0 + 1 > h - 1) continue;
      if (in_mask && !(in_mask->get(y0, x0) && in_mask->get(y0, x0 + 1) &&
                       in_mask->get(y0 + 1, x0) && in_mask->get(y0 + 1, x0 + 1)))
        continue;
      out_mask->set(r, col, true);
      if (out_data) {
        const double fx = xs - x0, fy = ys - y0;
        for (int ch = 0; ch < c; ++ch) {
          const double* p = data + ch * plane;
          const double v00 = p[static_cast<std::size_t>(y0) * w + x0];
          const double v01 = p[static_cast<std::size_t>(y0) * w + x0 + 1];
          const double v10 = p[static_cast<std::size_t>(y0 + 1) * w + x0];
          const double v11 = p[static_cast<std::size_t>(y0 + 1) * w + x0 + 1];
          const double top = v00 + fx * (v01 - v00);
          const double bot = v10 + fx * (v11 - v10);
          (*out_data)[ch * plane + static_cast<std::size_t>(r) * w + col] =
              top + fy * (bot - top);
        }
      }
    }
  }
}

}  // namespace

RotatedView rotate(const Tensor& map, double angle_deg) {
  const MapDims d = dims_of(map);
  std::vector<double> out;
  Mask mask;
  rotate_core(map.data().data(), nullptr, d.c, d.h, d.w, angle_deg, &out, &mask);
  RotatedView view;
  view.data = Tensor::from_data(map.shape(), std::move(out), false);
  view.angle_deg = angle_deg;
  view.valid = std::move(mask);
  return view;
}

RotatedView unrotate(const RotatedView& view) {
  const MapDims d = dims_of(view.data);
  if (view.valid.h != d.h || view.valid.w != d.w)
    throw std::invalid_argument("unrotate: mask shape [" + std::to_string(view.valid.h) + "," +
                                std::to_string(view.valid.w) + "] does not match map " +
                                shape_str(view.data.shape()));
  std::vector<double> out;
  Mask mask;
  rotate_core(view.data.data().data(), &view.valid, d.c, d.h, d.w, -view.angle_deg, &out, &mask);
  RotatedView back;
  back.data = Tensor::from_data(view.data.shape(), std::move(out), false);
  back.angle_deg = 0.0;
  back.valid = std::move(mask);
  return back;
}

Mask rotate_mask(const Mask& m, double angle_deg) {
  if (m.h < 2 || m.w < 2)
    throw std::invalid_argument("rotate_mask: degenerate shape [" + std::to_string(m.h) + "," +
                                std::to_string(m.w) + "]");
  Mask out;
  rotate_core(nullptr, &m, 0, m.h, m.w, angle_deg, nullptr, &out);
  return out;
}

Mask joint_valid(const RotatedView& a, const RotatedView& b) {
  return a.valid.and_with(b.valid);
}

}  // namespace camoseg
