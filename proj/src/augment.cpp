#include "camoseg/augment.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "camoseg/imageops.hpp"

namespace camoseg {

namespace {

void check_image(const Tensor& image, const char* who) {
  if (image.ndim() != 3 || image.dim(0) != 3)
    throw std::invalid_argument(std::string(who) + ": expected [3,H,W] image, got " +
                                shape_str(image.shape()));
}

Tensor flip_h(const Tensor& t) {
  const int c = t.ndim() == 3 ? t.dim(0) : 1;
  const int h = t.ndim() == 3 ? t.dim(1) : t.dim(0);
  const int w = t.ndim() == 3 ? t.dim(2) : t.dim(1);
  const auto& in = t.data();
  std::vector<double> out(in.size());
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        out[ch * plane + static_cast<std::size_t>(y) * w + x] =
            in[ch * plane + static_cast<std::size_t>(y) * w + (w - 1 - x)];
  return Tensor::from_data(t.shape(), std::move(out), false);
}

// Center crop (src larger) or zero-pad (src smaller) per axis back to h x w.
Tensor fit_to(const Tensor& t, int h, int w) {
  const int c = t.ndim() == 3 ? t.dim(0) : 1;
  const int sh = t.ndim() == 3 ? t.dim(1) : t.dim(0);
  const int sw = t.ndim() == 3 ? t.dim(2) : t.dim(1);
  std::vector<int> shape = t.ndim() == 3 ? std::vector<int>{c, h, w} : std::vector<int>{h, w};
  std::vector<double> out(static_cast<std::size_t>(c) * h * w, 0.0);
  const auto& in = t.data();
  const std::size_t splane = static_cast<std::size_t>(sh) * sw;
  const std::size_t dplane = static_cast<std::size_t>(h) * w;
  // source offset when cropping, destination offset when padding
  const int sy = std::max(0, (sh - h) / 2), dy = std::max(0, (h - sh) / 2);
  const int sx = std::max(0, (sw - w) / 2), dx = std::max(0, (w - sw) / 2);
  const int ny = std::min(sh, h), nx = std::min(sw, w);
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < ny; ++y)
      for (int x = 0; x < nx; ++x)
        out[ch * dplane + static_cast<std::size_t>(dy + y) * w + (dx + x)] =
            in[ch * splane + static_cast<std::size_t>(sy + y) * sw + (sx + x)];
  return Tensor::from_data(std::move(shape), std::move(out), false);
}

}  // namespace

WeakResult weak_augment(const Tensor& image, const Tensor& mask, const WeakAugmentConfig& cfg,
                        Rng& rng) {
  check_image(image, "weak_augment");
  const int h = image.dim(1), w = image.dim(2);
  if (mask.defined() && (mask.ndim() != 2 || mask.dim(0) != h || mask.dim(1) != w))
    throw std::invalid_argument("weak_augment: mask " + shape_str(mask.shape()) +
                                " does not match image " + shape_str(image.shape()));
  if (!(cfg.scale_lo > 0.0) || cfg.scale_hi < cfg.scale_lo)
    throw std::invalid_argument("weak_augment: bad scale range");

  WeakResult res{image, mask};
  const bool flip = rng.bernoulli(cfg.flip_prob);
  const double scale = rng.uniform(cfg.scale_lo, cfg.scale_hi);
  if (flip) {
    res.image = flip_h(res.image);
    if (res.mask.defined()) res.mask = flip_h(res.mask);
  }
  const int nh = std::max(1, static_cast<int>(std::llround(h * scale)));
  const int nw = std::max(1, static_cast<int>(std::llround(w * scale)));
  if (nh != h || nw != w) {
    res.image = fit_to(resize_bilinear(res.image, nh, nw), h, w);
    if (res.mask.defined()) res.mask = fit_to(resize_nearest(res.mask, nh, nw), h, w);
  }
  return res;
}

// ---- strong (photometric) ops ----

namespace {

void clamp01(std::vector<double>& v) {
  for (double& x : v) x = x < 0.0 ? 0.0 : (x > 1.0 ? 1.0 : x);
}

void op_autocontrast(std::vector<double>& v, std::size_t plane) {
  for (int c = 0; c < 3; ++c) {
    double lo = 1.0, hi = 0.0;
    for (std::size_t i = 0; i < plane; ++i) {
      lo = std::min(lo, v[c * plane + i]);
      hi = std::max(hi, v[c * plane + i]);
    }
    if (hi <= lo) continue;
    const double s = 1.0 / (hi - lo);
    for (std::size_t i = 0; i < plane; ++i) v[c * plane + i] = (v[c * plane + i] - lo) * s;
  }
}

void op_equalize(std::vector<double>& v, std::size_t plane) {
  for (int c = 0; c < 3; ++c) {
    std::array<std::size_t, 256> hist{};
    for (std::size_t i = 0; i < plane; ++i) {
      int b = static_cast<int>(std::lround(v[c * plane + i] * 255.0));
      b = std::min(255, std::max(0, b));
      ++hist[b];
    }
    std::array<double, 256> lut{};
    std::size_t cum = 0, cmin = 0;
    for (int b = 0; b < 256; ++b)
      if (hist[b]) {
        cmin = hist[b];
        break;
      }
    if (cmin == plane) continue;  // constant channel
    for (int b = 0; b < 256; ++b) {
      cum += hist[b];
      lut[b] = static_cast<double>(cum - cmin) / static_cast<double>(plane - cmin);
    }
    for (std::size_t i = 0; i < plane; ++i) {
      int b = static_cast<int>(std::lround(v[c * plane + i] * 255.0));
      b = std::min(255, std::max(0, b));
      v[c * plane + i] = lut[b];
    }
  }
}

void op_contrast(std::vector<double>& v, double factor) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  for (double& x : v) x = (x - m) * factor + m;
}

void op_brightness(std::vector<double>& v, double factor) {
  for (double& x : v) x *= factor;
}

void op_posterize(std::vector<double>& v, int bits) {
  const double levels = static_cast<double>((1 << bits) - 1);
  for (double& x : v) x = std::round(x * levels) / levels;
}

void op_solarize(std::vector<double>& v, double threshold) {
  for (double& x : v)
    if (x > threshold) x = 1.0 - x;
}

void rgb_to_hsv(double r, double g, double b, double* h, double* s, double* vv) {
  const double mx = std::max({r, g, b}), mn = std::min({r, g, b});
  const double d = mx - mn;
  *vv = mx;
  *s = mx == 0.0 ? 0.0 : d / mx;
  if (d == 0.0) {
    *h = 0.0;
    return;
  }
  double hh;
  if (mx == r)
    hh = std::fmod((g - b) / d, 6.0);
  else if (mx == g)
    hh = (b - r) / d + 2.0;
  else
    hh = (r - g) / d + 4.0;
  hh /= 6.0;
  if (hh < 0.0) hh += 1.0;
  *h = hh;
}

void hsv_to_rgb(double h, double s, double v, double* r, double* g, double* b) {
  const double hh = std::fmod(h, 1.0) * 6.0;
  const int i = std::min(5, static_cast<int>(hh));
  const double f = hh - i;
  const double p = v * (1.0 - s);
  const double q = v * (1.0 - s * f);
  const double t = v * (1.0 - s * (1.0 - f));
  switch (i) {
    case 0: *r = v; *g = t; *b = p; break;
    case 1: *r = q; *g = v; *b = p; break;
    case 2: *r = p; *g = v; *b = t; break;
    case 3: *r = p; *g = q; *b = v; break;
    case 4: *r = t; *g = p; *b = v; break;
    default: *r = v; *g = p; *b = q; break;
  }
}

void op_color(std::vector<double>& v, std::size_t plane, double factor) {
  for (std::size_t i = 0; i < plane; ++i) {
    double h, s, val;
    rgb_to_hsv(v[i], v[plane + i], v[2 * plane + i], &h, &s, &val);
    s = std::min(1.0, std::max(0.0, s * factor));
    hsv_to_rgb(h, s, val, &v[i], &v[plane + i], &v[2 * plane + i]);
  }
}

void op_hue(std::vector<double>& v, std::size_t plane, double shift) {
  for (std::size_t i = 0; i < plane; ++i) {
    double h, s, val;
    rgb_to_hsv(v[i], v[plane + i], v[2 * plane + i], &h, &s, &val);
    h = std::fmod(h + shift + 1.0, 1.0);
    hsv_to_rgb(h, s, val, &v[i], &v[plane + i], &v[2 * plane + i]);
  }
}

}  // namespace

Tensor photometric(const Tensor& image, PhotoOp op, double param) {
  check_image(image, "photometric");
  const std::size_t plane = static_cast<std::size_t>(image.dim(1)) * image.dim(2);

  std::vector<double> v = image.data();
  switch (op) {
    case PhotoOp::kIdentity:
      break;
    case PhotoOp::kAutocontrast:
      op_autocontrast(v, plane);
      break;
    case PhotoOp::kEqualize:
      op_equalize(v, plane);
      break;
    case PhotoOp::kGaussianBlur:
      v = gaussian_blur(image, param, 5).data();
      break;
    case PhotoOp::kContrast:
      op_contrast(v, param);
      break;
    case PhotoOp::kSharpness: {
      // unsharp mask against a fixed sigma-1 blur
      const auto base = gaussian_blur(image, 1.0, 5).data();
      for (std::size_t i = 0; i < v.size(); ++i) v[i] += param * (v[i] - base[i]);
      break;
    }
    case PhotoOp::kColor:
      op_color(v, plane, param);
      break;
    case PhotoOp::kBrightness:
      op_brightness(v, param);
      break;
    case PhotoOp::kHue:
      op_hue(v, plane, param);
      break;
    case PhotoOp::kPosterize:
      op_posterize(v, static_cast<int>(param));
      break;
    case PhotoOp::kSolarize:
      op_solarize(v, param);
      break;
  }
  clamp01(v);
  return Tensor::from_data(image.shape(), std::move(v), false);
}

Tensor strong_augment(const Tensor& image, const StrongAugmentConfig& cfg, Rng& rng) {
  check_image(image, "strong_augment");
  if (cfg.max_ops < 0 || cfg.max_ops > kPhotoOpCount)
    throw std::invalid_argument("strong_augment: max_ops out of range");

  // draw k distinct ops via partial Fisher-Yates
  const int k = rng.uniform_int(0, cfg.max_ops);
  std::array<int, kPhotoOpCount> pool;
  for (int i = 0; i < kPhotoOpCount; ++i) pool[i] = i;
  Tensor cur = image;
  for (int pick = 0; pick < k; ++pick) {
    const int j = rng.uniform_int(pick, kPhotoOpCount - 1);
    std::swap(pool[pick], pool[j]);
    const auto op = static_cast<PhotoOp>(pool[pick]);

    double param = 0.0;
    switch (op) {
      case PhotoOp::kGaussianBlur:
        param = rng.uniform(0.1, 1.0);
        break;
      case PhotoOp::kContrast:
      case PhotoOp::kColor:
      case PhotoOp::kBrightness:
        param = rng.uniform(0.5, 1.5);
        break;
      case PhotoOp::kSharpness:
        param = rng.uniform(0.0, 1.0);
        break;
      case PhotoOp::kHue:
        param = rng.uniform(-0.1, 0.1);
        break;
      case PhotoOp::kPosterize:
        param = rng.uniform_int(2, 7);
        break;
      case PhotoOp::kSolarize:
        param = rng.uniform(0.5, 1.0);
        break;
      default:
        break;
    }
    cur = photometric(cur, op, param);
  }
  return cur;
}

}  // namespace camoseg
