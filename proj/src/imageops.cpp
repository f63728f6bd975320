#include "camoseg/imageops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace camoseg {

namespace {

struct Dims {
  int c, h, w;
  bool chw;  // true if input had a channel axis
};

Dims dims_of(const Tensor& img, const char* who) {
  Dims d{};
  if (img.ndim() == 2) {
    d.c = 1;
    d.h = img.dim(0);
    d.w = img.dim(1);
    d.chw = false;
  } else if (img.ndim() == 3) {
    d.c = img.dim(0);
    d.h = img.dim(1);
    d.w = img.dim(2);
    d.chw = true;
  } else {
    throw std::invalid_argument(std::string(who) + ": expected [H,W] or [C,H,W], got " +
                                shape_str(img.shape()));
  }
  return d;
}

std::vector<int> out_shape(const Dims& d, int h, int w) {
  return d.chw ? std::vector<int>{d.c, h, w} : std::vector<int>{h, w};
}

}  // namespace

Tensor resize_bilinear(const Tensor& img, int out_h, int out_w) {
  const Dims d = dims_of(img, "resize_bilinear");
  if (out_h < 1 || out_w < 1)
    throw std::invalid_argument("resize_bilinear: bad target size " + std::to_string(out_h) +
                                "x" + std::to_string(out_w));
  const auto& in = img.data();
  std::vector<double> out(static_cast<std::size_t>(d.c) * out_h * out_w);
  const double sy = static_cast<double>(d.h) / out_h;
  const double sx = static_cast<double>(d.w) / out_w;
  const std::size_t iplane = static_cast<std::size_t>(d.h) * d.w;
  const std::size_t oplane = static_cast<std::size_t>(out_h) * out_w;
  for (int y = 0; y < out_h; ++y) {
    double fy = (y + 0.5) * sy - 0.5;
    fy = std::min(std::max(fy, 0.0), static_cast<double>(d.h - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, d.h - 1);
    const double wy = fy - y0;
    for (int x = 0; x < out_w; ++x) {
      double fx = (x + 0.5) * sx - 0.5;
      fx = std::min(std::max(fx, 0.0), static_cast<double>(d.w - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, d.w - 1);
      const double wx = fx - x0;
      for (int c = 0; c < d.c; ++c) {
        const double* p = in.data() + c * iplane;
        const double v00 = p[static_cast<std::size_t>(y0) * d.w + x0];
        const double v01 = p[static_cast<std::size_t>(y0) * d.w + x1];
        const double v10 = p[static_cast<std::size_t>(y1) * d.w + x0];
        const double v11 = p[static_cast<std::size_t>(y1) * d.w + x1];
        const double top = v00 + wx * (v01 - v00);
        const double bot = v10 + wx * (v11 - v10);
        out[c * oplane + static_cast<std::size_t>(y) * out_w + x] = top + wy * (bot - top);
      }
    }
  }
  return Tensor::from_data(out_shape(d, out_h, out_w), std::move(out), false);
}

Tensor resize_nearest(const Tensor& img, int out_h, int out_w) {
  const Dims d = dims_of(img, "resize_nearest");
  if (out_h < 1 || out_w < 1)
    throw std::invalid_argument("resize_nearest: bad target size " + std::to_string(out_h) + "x" +
                                std::to_string(out_w));
  const auto& in = img.data();
  std::vector<double> out(static_cast<std::size_t>(d.c) * out_h * out_w);
  const double sy = static_cast<double>(d.h) / out_h;
  const double sx = static_cast<double>(d.w) / out_w;
  const std::size_t iplane = static_cast<std::size_t>(d.h) * d.w;
  const std::size_t oplane = static_cast<std::size_t>(out_h) * out_w;
  for (int y = 0; y < out_h; ++y) {
    const int ys = std::min(d.h - 1, static_cast<int>((y + 0.5) * sy));
    for (int x = 0; x < out_w; ++x) {
      const int xs = std::min(d.w - 1, static_cast<int>((x + 0.5) * sx));
      for (int c = 0; c < d.c; ++c)
        out[c * oplane + static_cast<std::size_t>(y) * out_w + x] =
            in[c * iplane + static_cast<std::size_t>(ys) * d.w + xs];
    }
  }
  return Tensor::from_data(out_shape(d, out_h, out_w), std::move(out), false);
}

Tensor gaussian_blur(const Tensor& img, double sigma, int ksize) {
  const Dims d = dims_of(img, "gaussian_blur");
  if (sigma <= 0.0) throw std::invalid_argument("gaussian_blur: sigma must be > 0");
  if (ksize < 1 || ksize % 2 == 0)
    throw std::invalid_argument("gaussian_blur: kernel size must be odd and >= 1, got " +
                                std::to_string(ksize));
  const int r = ksize / 2;
  std::vector<double> k(ksize);
  for (int i = 0; i < ksize; ++i) {
    const double t = (i - r) / sigma;
    k[i] = std::exp(-0.5 * t * t);
  }
  const auto& in = img.data();
  const std::size_t plane = static_cast<std::size_t>(d.h) * d.w;
  std::vector<double> tmp(in.size()), out(in.size());
  // horizontal pass
  for (int c = 0; c < d.c; ++c) {
    const double* src = in.data() + c * plane;
    double* dst = tmp.data() + c * plane;
    for (int y = 0; y < d.h; ++y) {
      for (int x = 0; x < d.w; ++x) {
        double acc = 0.0, wsum = 0.0;
        for (int i = -r; i <= r; ++i) {
          const int xx = x + i;
          if (xx < 0 || xx >= d.w) continue;
          acc += k[i + r] * src[static_cast<std::size_t>(y) * d.w + xx];
          wsum += k[i + r];
        }
        dst[static_cast<std::size_t>(y) * d.w + x] = acc / wsum;
      }
    }
  }
  // vertical pass
  for (int c = 0; c < d.c; ++c) {
    const double* src = tmp.data() + c * plane;
    double* dst = out.data() + c * plane;
    for (int y = 0; y < d.h; ++y) {
      for (int x = 0; x < d.w; ++x) {
        double acc = 0.0, wsum = 0.0;
        for (int i = -r; i <= r; ++i) {
          const int yy = y + i;
          if (yy < 0 || yy >= d.h) continue;
          acc += k[i + r] * src[static_cast<std::size_t>(yy) * d.w + x];
          wsum += k[i + r];
        }
        dst[static_cast<std::size_t>(y) * d.w + x] = acc / wsum;
      }
    }
  }
  return Tensor::from_data(img.shape(), std::move(out), false);
}

Tensor luminance(const Tensor& img) {
  if (img.ndim() != 3 || img.dim(0) != 3)
    throw std::invalid_argument("luminance: expected [3,H,W], got " + shape_str(img.shape()));
  const int h = img.dim(1), w = img.dim(2);
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  const auto& in = img.data();
  std::vector<double> out(plane);
  for (std::size_t i = 0; i < plane; ++i)
    out[i] = (in[i] + in[plane + i] + in[2 * plane + i]) / 3.0;
  return Tensor::from_data({h, w}, std::move(out), false);
}

}  // namespace camoseg
