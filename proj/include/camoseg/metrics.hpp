#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "camoseg/geometry.hpp"
#include "camoseg/tensor.hpp"

namespace camoseg {

// Mean absolute error between a prediction map and a same-shaped target.
double mae(const Tensor& pred, const Tensor& gt);

enum class FMode { kMean, kMax };

// Threshold-swept F-measure: binarize pred > k/255 for k = 0..255, compute
// F = (1+b2)PR/(b2 P + R) per threshold (F=0 whenever TP=0), then aggregate.
// gt must be binary with at least one positive pixel.
double f_measure(const Tensor& pred, const Tensor& gt, FMode mode, double beta2 = 0.3);

// Intersection-over-union of pred binarized at 0.5 against binary gt.
// Both empty -> 1 (vacuous agreement).
double iou_at_half(const Tensor& pred, const Tensor& gt);

struct SampleMetrics {
  std::string id;
  double mae = 0.0;
  double f_mean = 0.0;
  double f_max = 0.0;
  double iou = 0.0;
  double ssim_to_gt = 0.0;
};

struct MetricsReport {
  double mae = 0.0;
  double f_mean = 0.0;
  double f_max = 0.0;
  double iou = 0.0;
  std::vector<SampleMetrics> per_sample;
};

// Means of each column over per-sample rows.
MetricsReport aggregate_metrics(std::vector<SampleMetrics> rows);

// Boundary band width used by the region partition, scaled to image height.
int default_band_px(int h);

enum class Region : int { kBackground = 0, kForeground = 1, kBoundary = 2 };

struct RegionPartition {
  int h = 0, w = 0, band_px = 0;
  std::vector<std::uint8_t> labels;  // one of Region per pixel, row-major
  std::size_t count(Region r) const;
};

// Splits the image into background / foreground / boundary, where boundary
// is every pixel within band_px (euclidean) of the nearest opposite-valued
// pixel — the band straddles the contour. The three labels partition the
// image.
RegionPartition partition_regions(const Tensor& gt, int band_px);

struct RegionStats {
  std::string region;  // "background" | "foreground" | "boundary"
  std::size_t pixels = 0;
  double mpi = 0.0;  // mean |h1 - h2| over the region's valid pixels
  double mae = 0.0;  // mean |pseudo - gt| over the region's valid pixels
};

// Pools per-region pixel sums across many samples; rows() divides at the end
// so the result is a pixel-pooled (not per-image-averaged) statistic.
class RegionNoiseAccumulator {
 public:
  void add(const Tensor& pseudo, const Tensor& gt, const Tensor& h1, const Tensor& h2,
           const Mask& valid, int band_px);
  std::vector<RegionStats> rows() const;  // empty regions omitted

 private:
  std::array<std::size_t, 3> pixels_{};
  std::array<double, 3> sum_inconsistency_{};
  std::array<double, 3> sum_abs_err_{};
};

// Single-sample convenience wrapper around the accumulator.
std::vector<RegionStats> region_noise_report(const Tensor& pseudo, const Tensor& gt,
                                             const Tensor& h1, const Tensor& h2,
                                             const Mask& valid, int band_px);

struct InstanceRow {
  std::string id;
  double consistency = 0.0;  // SSIM(h1, h2)
  double quality = 0.0;      // SSIM(pseudo, gt)
};

// Pearson correlation; nullopt when either variable has zero variance.
std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace camoseg
