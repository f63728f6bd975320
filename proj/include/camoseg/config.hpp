#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "camoseg/dataset.hpp"
#include "camoseg/trainer.hpp"

namespace camoseg {

// The flat run configuration shared by every command. Every field has a
// default; JSON input may set any subset but unknown keys are rejected.
struct RunConfig {
  // data generation / loading
  int image_size = 64;
  double texture_scale = 2.0;
  double contrast_delta = 0.25;
  int blob_complexity = 3;
  double labeled_fraction = 0.1;
  // schedule
  int epochs = 40;
  int burn_in_epochs = 10;
  int batch_labeled = 4;
  int batch_unlabeled = 4;
  double lr0 = 0.01;
  double sgd_momentum = 0.9;
  double poly_power = 0.9;
  double eta = 0.996;
  // dual-rotation consistency
  double rotation_lo_deg = -90.0;
  double rotation_hi_deg = 90.0;
  double alpha = 0.25;
  double beta = 4.0;
  double mu = 0.5;
  double lambda_pc = 8.0;
  double lambda_ic = 0.3;
  std::string pixel_weight_variant = "full";
  // "consistency" = rotation-derived weights; "uniform" = plain mean teacher
  std::string weight_mode = "consistency";
  int ssim_window = 11;
  double ssim_sigma = 1.5;
  double ssim_c1 = 1e-4;
  double ssim_c2 = 9e-4;
  // augmentation
  double flip_prob = 0.5;
  double scale_lo = 0.75;
  double scale_hi = 1.25;
  int strong_max_ops = 3;
  // analysis
  int band_px = 0;  // 0 = scale with image size
  std::uint64_t seed = 0;

  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig from_file(const std::string& path);

  nlohmann::json to_json() const;
  // Canonical serialization (2-space indent, sorted keys, trailing newline);
  // what gets written to config.resolved.json and hashed.
  std::string resolved_text() const;
  // FNV-1a 64 over resolved_text, as 16 lowercase hex digits.
  std::string hash_hex() const;

  void validate() const;

  TrainConfig train_config() const;
  CamoGenConfig gen_config() const;
};

PixelWeightVariant parse_pixel_weight_variant(const std::string& name);
std::string pixel_weight_variant_name(PixelWeightVariant v);

}  // namespace camoseg
