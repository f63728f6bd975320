#include "camoseg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace camoseg {

namespace {

void check_pair(const Tensor& pred, const Tensor& gt, const char* who) {
  if (!pred.defined() || !gt.defined())
    throw std::invalid_argument(std::string(who) + ": undefined tensor");
  if (pred.shape() != gt.shape())
    throw std::invalid_argument(std::string(who) + ": shape mismatch " +
                                shape_str(pred.shape()) + " vs " + shape_str(gt.shape()));
}

void check_binary(const Tensor& gt, const char* who) {
  for (double v : gt.data())
    if (v != 0.0 && v != 1.0)
      throw std::invalid_argument(std::string(who) + ": ground truth must be binary, got " +
                                  std::to_string(v));
}

}  // namespace

double mae(const Tensor& pred, const Tensor& gt) {
  check_pair(pred, gt, "mae");
  const auto& p = pred.data();
  const auto& g = gt.data();
  if (p.empty()) throw std::invalid_argument("mae: empty input");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - g[i]);
  return s / static_cast<double>(p.size());
}

double f_measure(const Tensor& pred, const Tensor& gt, FMode mode, double beta2) {
  check_pair(pred, gt, "f_measure");
  check_binary(gt, "f_measure");
  if (!(beta2 > 0.0)) throw std::invalid_argument("f_measure: beta2 must be > 0");
  const auto& p = pred.data();
  const auto& g = gt.data();
  std::vector<double> pos, neg;
  pos.reserve(p.size());
  neg.reserve(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) (g[i] == 1.0 ? pos : neg).push_back(p[i]);
  if (pos.empty())
    throw std::invalid_argument("f_measure: undefined recall (ground truth has no positive pixels)");
  std::sort(pos.begin(), pos.end());
  std::sort(neg.begin(), neg.end());
  double sum = 0.0, best = 0.0;
  for (int k = 0; k < 256; ++k) {
    const double t = k / 255.0;
    // counts of values strictly above the threshold
    const auto tp = static_cast<double>(pos.end() - std::upper_bound(pos.begin(), pos.end(), t));
    const auto fp = static_cast<double>(neg.end() - std::upper_bound(neg.begin(), neg.end(), t));
    double f = 0.0;
    if (tp > 0.0) {
      const double prec = tp / (tp + fp);
      const double rec = tp / static_cast<double>(pos.size());
      f = (1.0 + beta2) * prec * rec / (beta2 * prec + rec);
    }
    sum += f;
    best = std::max(best, f);
  }
  return mode == FMode::kMean ? sum / 256.0 : best;
}

double iou_at_half(const Tensor& pred, const Tensor& gt) {
  check_pair(pred, gt, "iou");
  check_binary(gt, "iou");
  const auto& p = pred.data();
  const auto& g = gt.data();
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const bool a = p[i] > 0.5, b = g[i] == 1.0;
    inter += a && b;
    uni += a || b;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

MetricsReport aggregate_metrics(std::vector<SampleMetrics> rows) {
  if (rows.empty()) throw std::invalid_argument("aggregate_metrics: no samples");
  MetricsReport r;
  for (const auto& s : rows) {
    r.mae += s.mae;
    r.f_mean += s.f_mean;
    r.f_max += s.f_max;
    r.iou += s.iou;
  }
  const double n = static_cast<double>(rows.size());
  r.mae /= n;
  r.f_mean /= n;
  r.f_max /= n;
  r.iou /= n;
  r.per_sample = std::move(rows);
  return r;
}

int default_band_px(int h) {
  if (h < 1) throw std::invalid_argument("default_band_px: height must be >= 1");
  return std::max(2, static_cast<int>(std::llround(20.0 * h / 352.0)));
}

std::size_t RegionPartition::count(Region r) const {
  return static_cast<std::size_t>(
      std::count(labels.begin(), labels.end(), static_cast<std::uint8_t>(r)));
}

RegionPartition partition_regions(const Tensor& gt, int band_px) {
  if (!gt.defined() || gt.ndim() != 2)
    throw std::invalid_argument("partition_regions: expected [H,W] mask");
  if (band_px < 1) throw std::invalid_argument("partition_regions: band_px must be >= 1");
  const int h = gt.dim(0), w = gt.dim(1);
  const auto& g = gt.data();
  RegionPartition part;
  part.h = h;
  part.w = w;
  part.band_px = band_px;
  part.labels.resize(g.size());
  for (std::size_t i = 0; i < g.size(); ++i)
    part.labels[i] = g[i] >= 0.5 ? static_cast<std::uint8_t>(Region::kForeground)
                                 : static_cast<std::uint8_t>(Region::kBackground);

  // A pixel is boundary when its euclidean distance to the nearest
  // opposite-valued pixel is <= band_px. The nearest opposite pixel is always
  // an edge pixel (one with a differing 4-neighbor), so it suffices to stamp
  // a disk around each edge pixel and mark the pixels on the other side.
  std::vector<std::size_t> edges;
  auto fg = [&](int y, int x) { return g[static_cast<std::size_t>(y) * w + x] >= 0.5; };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const bool v = fg(y, x);
      const bool edge = (y > 0 && fg(y - 1, x) != v) || (y + 1 < h && fg(y + 1, x) != v) ||
                        (x > 0 && fg(y, x - 1) != v) || (x + 1 < w && fg(y, x + 1) != v);
      if (edge) edges.push_back(static_cast<std::size_t>(y) * w + x);
    }

  const int b = band_px;
  const int b2 = b * b;
  for (std::size_t e : edges) {
    const int ey = static_cast<int>(e) / w, ex = static_cast<int>(e) % w;
    const bool ev = fg(ey, ex);
    for (int dy = -b; dy <= b; ++dy) {
      const int y = ey + dy;
      if (y < 0 || y >= h) continue;
      for (int dx = -b; dx <= b; ++dx) {
        const int x = ex + dx;
        if (x < 0 || x >= w || dy * dy + dx * dx > b2 || fg(y, x) == ev) continue;
        part.labels[static_cast<std::size_t>(y) * w + x] =
            static_cast<std::uint8_t>(Region::kBoundary);
      }
    }
  }
  return part;
}

void RegionNoiseAccumulator::add(const Tensor& pseudo, const Tensor& gt, const Tensor& h1,
                                 const Tensor& h2, const Mask& valid, int band_px) {
  check_pair(pseudo, gt, "region_noise");
  check_pair(h1, h2, "region_noise");
  check_pair(pseudo, h1, "region_noise");
  if (gt.dim(0) != valid.h || gt.dim(1) != valid.w)
    throw std::invalid_argument("region_noise: validity mask size mismatch");
  const RegionPartition part = partition_regions(gt, band_px);
  const auto& ps = pseudo.data();
  const auto& g = gt.data();
  const auto& a = h1.data();
  const auto& b = h2.data();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!valid.bits[i]) continue;
    const int r = part.labels[i];
    pixels_[r] += 1;
    sum_inconsistency_[r] += std::abs(a[i] - b[i]);
    sum_abs_err_[r] += std::abs(ps[i] - g[i]);
  }
}

std::vector<RegionStats> RegionNoiseAccumulator::rows() const {
  static const char* kNames[3] = {"background", "foreground", "boundary"};
  std::vector<RegionStats> out;
  for (int r = 0; r < 3; ++r) {
    if (pixels_[r] == 0) continue;  // empty region: absent, not zero
    RegionStats s;
    s.region = kNames[r];
    s.pixels = pixels_[r];
    s.mpi = sum_inconsistency_[r] / static_cast<double>(pixels_[r]);
    s.mae = sum_abs_err_[r] / static_cast<double>(pixels_[r]);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<RegionStats> region_noise_report(const Tensor& pseudo, const Tensor& gt,
                                             const Tensor& h1, const Tensor& h2,
                                             const Mask& valid, int band_px) {
  RegionNoiseAccumulator acc;
  acc.add(pseudo, gt, h1, h2, valid, band_px);
  return acc.rows();
}

std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size())
    throw std::invalid_argument("pearson: length mismatch");
  if (x.size() < 2) throw std::invalid_argument("pearson: need at least 2 points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
  const double r = sxy / std::sqrt(sxx * syy);
  return std::clamp(r, -1.0, 1.0);
}

}  // namespace camoseg
