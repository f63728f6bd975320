#include "camoseg/drcl.hpp"

#include <cmath>

namespace camoseg {

namespace {

void check_map(const Tensor& t, const char* who) {
  if (t.ndim() != 2)
    throw std::invalid_argument(std::string(who) + ": expected [H,W] map, got " +
                                shape_str(t.shape()));
}

void check_pair(const Tensor& a, const Tensor& b, const char* who) {
  check_map(a, who);
  check_map(b, who);
  if (a.shape() != b.shape())
    throw std::invalid_argument(std::string(who) + ": shape mismatch " + shape_str(a.shape()) +
                                " vs " + shape_str(b.shape()));
}

void check_mask(const Tensor& t, const Mask& m, const char* who) {
  if (m.h != t.dim(0) || m.w != t.dim(1))
    throw std::invalid_argument(std::string(who) + ": mask [" + std::to_string(m.h) + "," +
                                std::to_string(m.w) + "] does not match map " +
                                shape_str(t.shape()));
}

}  // namespace

Tensor pixel_inconsistency(const Tensor& h1, const Tensor& h2, const Mask& valid) {
  check_pair(h1, h2, "pixel_inconsistency");
  check_mask(h1, valid, "pixel_inconsistency");
  const auto& a = h1.data();
  const auto& b = h2.data();
  std::vector<double> out(a.size(), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    if (valid.bits[i]) out[i] = std::fabs(a[i] - b[i]);
  return Tensor::from_data(h1.shape(), std::move(out), false);
}

Tensor mean_horizontal(const Tensor& h1, const Tensor& h2) {
  check_pair(h1, h2, "mean_horizontal");
  const auto& a = h1.data();
  const auto& b = h2.data();
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = 0.5 * (a[i] + b[i]);
  return Tensor::from_data(h1.shape(), std::move(out), false);
}

Tensor pixel_weight(const Tensor& delta, const Tensor& y_h, const PixelWeightConfig& cfg) {
  check_pair(delta, y_h, "pixel_weight");
  if (!(cfg.alpha > 0.0))
    throw std::invalid_argument("pixel_weight: alpha must be > 0, got " +
                                std::to_string(cfg.alpha));
  const auto& d = delta.data();
  const auto& y = y_h.data();
  std::vector<double> out(d.size());
  switch (cfg.variant) {
    case PixelWeightVariant::kPseudo:
      for (std::size_t i = 0; i < d.size(); ++i) out[i] = y[i];
      break;
    case PixelWeightVariant::kDist:
      for (std::size_t i = 0; i < d.size(); ++i) {
        const double c = y[i] - cfg.mu;
        out[i] = c * c;
      }
      break;
    case PixelWeightVariant::kOneMinusDelta:
      for (std::size_t i = 0; i < d.size(); ++i) out[i] = 1.0 - pow_rounded(d[i], cfg.alpha);
      break;
    case PixelWeightVariant::kDeltaTimesPseudo:
      for (std::size_t i = 0; i < d.size(); ++i)
        out[i] = (1.0 - pow_rounded(d[i], cfg.alpha)) * y[i];
      break;
    case PixelWeightVariant::kFull:
      for (std::size_t i = 0; i < d.size(); ++i) {
        const double c = y[i] - cfg.mu;
        out[i] = (1.0 - pow_rounded(d[i], cfg.alpha)) * (c * c);
      }
      break;
    case PixelWeightVariant::kUniform:
      for (std::size_t i = 0; i < d.size(); ++i) out[i] = 1.0;
      break;
  }
  return Tensor::from_data(delta.shape(), std::move(out), false);
}

double ssim(const Tensor& a, const Tensor& b, const Mask& valid, const SsimConfig& cfg) {
  check_pair(a, b, "ssim");
  check_mask(a, valid, "ssim");
  if (cfg.window < 1 || cfg.window % 2 == 0)
    throw std::invalid_argument("ssim: window must be odd and >= 1, got " +
                                std::to_string(cfg.window));
  if (!(cfg.sigma > 0.0)) throw std::invalid_argument("ssim: sigma must be > 0");
  const int h = a.dim(0), w = a.dim(1);
  // shrink to the largest odd window that fits small maps
  int win = cfg.window;
  const int fit = std::min(h, w);
  if (win > fit) win = fit % 2 == 1 ? fit : fit - 1;
  if (win < 1) throw InsufficientValidArea();
  const int r = win / 2;

  std::vector<double> k(static_cast<std::size_t>(win) * win);
  double ksum = 0.0;
  for (int y = 0; y < win; ++y)
    for (int x = 0; x < win; ++x) {
      const double dy = (y - r) / cfg.sigma, dx = (x - r) / cfg.sigma;
      const double v = std::exp(-0.5 * (dy * dy + dx * dx));
      k[static_cast<std::size_t>(y) * win + x] = v;
      ksum += v;
    }
  for (double& v : k) v /= ksum;

  const auto& av = a.data();
  const auto& bv = b.data();
  double total = 0.0;
  std::size_t windows = 0;
  for (int cy = r; cy < h - r; ++cy) {
    for (int cx = r; cx < w - r; ++cx) {
      bool ok = true;
      for (int y = -r; y <= r && ok; ++y)
        for (int x = -r; x <= r; ++x)
          if (!valid.get(cy + y, cx + x)) {
            ok = false;
            break;
          }
      if (!ok) continue;
      double ma = 0.0, mb = 0.0, saa = 0.0, sbb = 0.0, sab = 0.0;
      for (int y = -r; y <= r; ++y)
        for (int x = -r; x <= r; ++x) {
          const double wv = k[static_cast<std::size_t>(y + r) * win + (x + r)];
          const double va = av[static_cast<std::size_t>(cy + y) * w + (cx + x)];
          const double vb = bv[static_cast<std::size_t>(cy + y) * w + (cx + x)];
          ma += wv * va;
          mb += wv * vb;
          saa += wv * va * va;
          sbb += wv * vb * vb;
          sab += wv * va * vb;
        }
      const double var_a = saa - ma * ma;
      const double var_b = sbb - mb * mb;
      const double cov = sab - ma * mb;
      const double num = (2.0 * ma * mb + cfg.c1) * (2.0 * cov + cfg.c2);
      const double den = (ma * ma + mb * mb + cfg.c1) * (var_a + var_b + cfg.c2);
      total += num / den;
      ++windows;
    }
  }
  if (windows == 0) throw InsufficientValidArea();
  return total / static_cast<double>(windows);
}

double instance_weight(const Tensor& h1, const Tensor& h2, const Mask& valid,
                       const InstanceWeightConfig& cfg) {
  if (!(cfg.beta > 0.0))
    throw std::invalid_argument("instance_weight: beta must be > 0, got " +
                                std::to_string(cfg.beta));
  double s = ssim(h1, h2, valid, cfg.ssim);
  s = s < 0.0 ? 0.0 : (s > 1.0 ? 1.0 : s);
  return pow_rounded(s, cfg.beta);
}

}  // namespace camoseg
