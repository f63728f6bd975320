#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "camoseg/tensor.hpp"

namespace camoseg {

struct Sample {
  std::string id;
  Tensor image;  // [3,H,W] in [0,1]
  Tensor mask;   // [H,W] with values {0,1}; undefined for unlabeled samples
  bool labeled = false;
};

struct CamoGenConfig {
  int size = 64;
  double texture_scale = 2.0;   // blur sigma of the band-limited noise
  double contrast_delta = 0.25; // foreground luminance shift, in [0, 0.5]
  int blob_complexity = 3;      // max metaballs forming the object
  std::uint64_t seed = 0;
};

// Deterministic per (cfg.seed, index): a band-limited noise background, a
// single 4-connected metaball blob covering 5-40% of the pixels, foreground
// textured by the same process with an independent noise phase shifted by
// contrast_delta in luminance.
Sample generate_sample(const CamoGenConfig& cfg, int index);
std::vector<Sample> generate_dataset(const CamoGenConfig& cfg, int count);

// Deterministic shuffle + prefix: flags round(count*fraction) entries as
// labeled. Errors if that count is zero.
std::vector<char> choose_labeled(std::size_t count, double fraction, std::uint64_t seed);

// Applies choose_labeled and strips the masks off unlabeled samples (a
// sample carries a mask iff it is labeled; ground truth for analysis lives
// on disk, not on the training-visible sample).
void split_labeled(std::vector<Sample>& samples, double fraction, std::uint64_t seed);

// ---- NetPBM binary IO (P6 images, P5 masks; maxval 255 only) ----
void write_ppm(const std::string& path, const Tensor& image);
void write_pgm(const std::string& path, const Tensor& mask);
Tensor read_ppm(const std::string& path);
// Grayscale values binarize at 128 (>= 128 -> 1).
Tensor read_pgm_mask(const std::string& path);

// Load one image (+ optional mask) pair, resized to `size` when size > 0.
Sample load_pair(const std::string& image_path, const std::string& mask_path, int size);

// On-disk layout: <root>/images/<id>.ppm, <root>/masks/<id>.pgm,
// <root>/manifest.csv with columns id,labeled. Masks are written for every
// sample (analysis needs ground truth); the labeled flag controls what the
// trainer may see.
void write_dataset(const std::string& root, const std::vector<Sample>& samples);

// Load per manifest. Unlabeled samples come back without a mask attached
// unless attach_all_masks is set (evaluation/analysis mode, which then
// requires every mask file to exist).
std::vector<Sample> load_dataset(const std::string& root, int size, bool attach_all_masks);

}  // namespace camoseg
