#pragma once

// Shared helpers for the unit tests: random tensor builders, a central
// finite-difference harness, and a polygon-clipping area oracle used by the
// rotation-footprint checks.

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "camoseg/imageops.hpp"
#include "camoseg/rng.hpp"
#include "camoseg/tensor.hpp"

namespace testutil {

inline std::vector<double> random_values(camoseg::Rng& rng, std::size_t n, double lo, double hi) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

inline camoseg::Tensor random_tensor(camoseg::Rng& rng, std::vector<int> shape, double lo,
                                     double hi, bool requires_grad = false) {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  return camoseg::Tensor::from_data(std::move(shape), random_values(rng, n, lo, hi),
                                    requires_grad);
}

// Max relative error between an analytic gradient and central differences of
// `f` at `x`, over the given coordinates (all coordinates if empty). The
// denominator floor keeps finite-difference noise on near-zero gradients from
// registering as huge relative errors while still flagging any wrong gradient
// of magnitude above the floor.
template <class F>
double fd_max_rel_err(F&& f, std::vector<double> x, const std::vector<double>& analytic,
                      std::vector<std::size_t> coords = {}, double h = 1e-5,
                      double denom_floor = 1e-6) {
  if (coords.empty()) {
    coords.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) coords[i] = i;
  }
  double worst = 0.0;
  for (std::size_t i : coords) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = f(x);
    x[i] = keep - h;
    const double dn = f(x);
    x[i] = keep;
    const double fd = (up - dn) / (2.0 * h);
    const double an = analytic[i];
    const double denom = std::max({std::fabs(fd), std::fabs(an), denom_floor});
    worst = std::max(worst, std::fabs(fd - an) / denom);
  }
  return worst;
}

// ---- convex polygon clipping (Sutherland-Hodgman), for footprint areas ----

struct Pt {
  double x, y;
};

inline std::vector<Pt> clip_convex(const std::vector<Pt>& subject, const std::vector<Pt>& clip) {
  std::vector<Pt> out = subject;
  const std::size_t m = clip.size();
  for (std::size_t e = 0; e < m && !out.empty(); ++e) {
    const Pt a = clip[e], b = clip[(e + 1) % m];
    auto inside = [&](const Pt& p) {
      return (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x) >= 0.0;
    };
    auto intersect = [&](const Pt& p, const Pt& q) {
      const double a1 = b.y - a.y, b1 = a.x - b.x, c1 = a1 * a.x + b1 * a.y;
      const double a2 = q.y - p.y, b2 = p.x - q.x, c2 = a2 * p.x + b2 * p.y;
      const double det = a1 * b2 - a2 * b1;
      return Pt{(b2 * c1 - b1 * c2) / det, (a1 * c2 - a2 * c1) / det};
    };
    std::vector<Pt> next;
    for (std::size_t i = 0; i < out.size(); ++i) {
      const Pt cur = out[i], prev = out[(i + out.size() - 1) % out.size()];
      if (inside(cur)) {
        if (!inside(prev)) next.push_back(intersect(prev, cur));
        next.push_back(cur);
      } else if (inside(prev)) {
        next.push_back(intersect(prev, cur));
      }
    }
    out = std::move(next);
  }
  return out;
}

inline double polygon_area(const std::vector<Pt>& p) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const Pt& a = p[i];
    const Pt& b = p[(i + 1) % p.size()];
    s += a.x * b.y - a.y * b.x;
  }
  return 0.5 * std::fabs(s);
}

inline double polygon_perimeter(const std::vector<Pt>& p) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const Pt& a = p[i];
    const Pt& b = p[(i + 1) % p.size()];
    s += std::hypot(b.x - a.x, b.y - a.y);
  }
  return s;
}

// Counter-clockwise square with corners distance `half` from (cx, cy),
// rotated by angle_rad.
inline std::vector<Pt> rotated_square(double cx, double cy, double half, double angle_rad) {
  const double c = std::cos(angle_rad), s = std::sin(angle_rad);
  std::vector<Pt> corners = {{-half, -half}, {half, -half}, {half, half}, {-half, half}};
  for (auto& p : corners) {
    const double x = p.x * c - p.y * s;
    const double y = p.x * s + p.y * c;
    p = {cx + x, cy + y};
  }
  return corners;
}

// Smooth band-limited test map: gaussian-blurred uniform noise, rescaled to
// use most of [0,1].
inline camoseg::Tensor smooth_noise(int h, int w, double sigma, std::uint64_t seed) {
  camoseg::Rng rng(seed);
  camoseg::Tensor raw = random_tensor(rng, {h, w}, 0.0, 1.0);
  const int ksize = 2 * static_cast<int>(std::ceil(3.0 * sigma)) + 1;
  camoseg::Tensor sm = camoseg::gaussian_blur(raw, sigma, ksize);
  double lo = 1e300, hi = -1e300;
  for (double v : sm.data()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  std::vector<double> out(sm.data());
  for (double& v : out) v = (v - lo) / (hi - lo);
  return camoseg::Tensor::from_data({h, w}, std::move(out));
}

// Centered gaussian bump exp(-r^2 / (2 s^2)).
inline camoseg::Tensor gaussian_bump(int h, int w, double s) {
  std::vector<double> v(static_cast<std::size_t>(h) * w);
  const double cy = (h - 1) / 2.0, cx = (w - 1) / 2.0;
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      const double dy = r - cy, dx = c - cx;
      v[static_cast<std::size_t>(r) * w + c] = std::exp(-(dy * dy + dx * dx) / (2.0 * s * s));
    }
  return camoseg::Tensor::from_data({h, w}, std::move(v));
}

}  // namespace testutil
