#include "camoseg/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>

#include "camoseg/errors.hpp"

namespace camoseg {

using nlohmann::json;

PixelWeightVariant parse_pixel_weight_variant(const std::string& name) {
  if (name == "pseudo") return PixelWeightVariant::kPseudo;
  if (name == "dist") return PixelWeightVariant::kDist;
  if (name == "one_minus_delta") return PixelWeightVariant::kOneMinusDelta;
  if (name == "delta_times_pseudo") return PixelWeightVariant::kDeltaTimesPseudo;
  if (name == "full") return PixelWeightVariant::kFull;
  if (name == "uniform") return PixelWeightVariant::kUniform;
  throw ConfigError("pixel_weight_variant must be one of pseudo, dist, one_minus_delta, "
                    "delta_times_pseudo, full, uniform; got '" + name + "'");
}

std::string pixel_weight_variant_name(PixelWeightVariant v) {
  switch (v) {
    case PixelWeightVariant::kPseudo: return "pseudo";
    case PixelWeightVariant::kDist: return "dist";
    case PixelWeightVariant::kOneMinusDelta: return "one_minus_delta";
    case PixelWeightVariant::kDeltaTimesPseudo: return "delta_times_pseudo";
    case PixelWeightVariant::kFull: return "full";
    case PixelWeightVariant::kUniform: return "uniform";
  }
  throw std::invalid_argument("unknown pixel weight variant");
}

RunConfig RunConfig::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config root must be a JSON object");
  RunConfig c;
  static const std::set<std::string> known = {
      "image_size", "texture_scale", "contrast_delta", "blob_complexity",
      "labeled_fraction", "epochs", "burn_in_epochs", "batch_labeled",
      "batch_unlabeled", "lr0", "sgd_momentum", "poly_power", "eta",
      "rotation_lo_deg", "rotation_hi_deg", "alpha", "beta", "mu", "lambda_pc",
      "lambda_ic", "pixel_weight_variant", "weight_mode", "ssim_window",
      "ssim_sigma", "ssim_c1", "ssim_c2", "flip_prob", "scale_lo", "scale_hi",
      "strong_max_ops", "band_px", "seed"};
  for (const auto& item : j.items())
    if (!known.count(item.key())) throw ConfigError("unknown config key: " + item.key());

  auto geti = [&](const char* k, int& dst) {
    if (!j.contains(k)) return;
    if (!j[k].is_number_integer())
      throw ConfigError(std::string("config key ") + k + " must be an integer");
    dst = j[k].get<int>();
  };
  auto getd = [&](const char* k, double& dst) {
    if (!j.contains(k)) return;
    if (!j[k].is_number())
      throw ConfigError(std::string("config key ") + k + " must be a number");
    dst = j[k].get<double>();
  };
  auto gets = [&](const char* k, std::string& dst) {
    if (!j.contains(k)) return;
    if (!j[k].is_string())
      throw ConfigError(std::string("config key ") + k + " must be a string");
    dst = j[k].get<std::string>();
  };

  geti("image_size", c.image_size);
  getd("texture_scale", c.texture_scale);
  getd("contrast_delta", c.contrast_delta);
  geti("blob_complexity", c.blob_complexity);
  getd("labeled_fraction", c.labeled_fraction);
  geti("epochs", c.epochs);
  geti("burn_in_epochs", c.burn_in_epochs);
  geti("batch_labeled", c.batch_labeled);
  geti("batch_unlabeled", c.batch_unlabeled);
  getd("lr0", c.lr0);
  getd("sgd_momentum", c.sgd_momentum);
  getd("poly_power", c.poly_power);
  getd("eta", c.eta);
  getd("rotation_lo_deg", c.rotation_lo_deg);
  getd("rotation_hi_deg", c.rotation_hi_deg);
  getd("alpha", c.alpha);
  getd("beta", c.beta);
  getd("mu", c.mu);
  getd("lambda_pc", c.lambda_pc);
  getd("lambda_ic", c.lambda_ic);
  gets("pixel_weight_variant", c.pixel_weight_variant);
  gets("weight_mode", c.weight_mode);
  geti("ssim_window", c.ssim_window);
  getd("ssim_sigma", c.ssim_sigma);
  getd("ssim_c1", c.ssim_c1);
  getd("ssim_c2", c.ssim_c2);
  getd("flip_prob", c.flip_prob);
  getd("scale_lo", c.scale_lo);
  getd("scale_hi", c.scale_hi);
  geti("strong_max_ops", c.strong_max_ops);
  geti("band_px", c.band_px);
  if (j.contains("seed")) {
    const auto& s = j["seed"];
    if (!s.is_number_integer() || (!s.is_number_unsigned() && s.get<long long>() < 0))
      throw ConfigError("config key seed must be a non-negative integer");
    c.seed = s.get<std::uint64_t>();
  }
  return c;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config file " + path);
  json j;
  try {
    j = json::parse(f);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return from_json(j);
}

json RunConfig::to_json() const {
  json j;
  j["image_size"] = image_size;
  j["texture_scale"] = texture_scale;
  j["contrast_delta"] = contrast_delta;
  j["blob_complexity"] = blob_complexity;
  j["labeled_fraction"] = labeled_fraction;
  j["epochs"] = epochs;
  j["burn_in_epochs"] = burn_in_epochs;
  j["batch_labeled"] = batch_labeled;
  j["batch_unlabeled"] = batch_unlabeled;
  j["lr0"] = lr0;
  j["sgd_momentum"] = sgd_momentum;
  j["poly_power"] = poly_power;
  j["eta"] = eta;
  j["rotation_lo_deg"] = rotation_lo_deg;
  j["rotation_hi_deg"] = rotation_hi_deg;
  j["alpha"] = alpha;
  j["beta"] = beta;
  j["mu"] = mu;
  j["lambda_pc"] = lambda_pc;
  j["lambda_ic"] = lambda_ic;
  j["pixel_weight_variant"] = pixel_weight_variant;
  j["weight_mode"] = weight_mode;
  j["ssim_window"] = ssim_window;
  j["ssim_sigma"] = ssim_sigma;
  j["ssim_c1"] = ssim_c1;
  j["ssim_c2"] = ssim_c2;
  j["flip_prob"] = flip_prob;
  j["scale_lo"] = scale_lo;
  j["scale_hi"] = scale_hi;
  j["strong_max_ops"] = strong_max_ops;
  j["band_px"] = band_px;
  j["seed"] = seed;
  return j;
}

std::string RunConfig::resolved_text() const { return to_json().dump(2) + "\n"; }

std::string RunConfig::hash_hex() const {
  const std::string text = resolved_text();
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void RunConfig::validate() const {
  if (image_size < 8 || image_size % 4 != 0)
    throw ConfigError("image_size must be >= 8 and divisible by 4");
  if (!(texture_scale > 0.0)) throw ConfigError("texture_scale must be > 0");
  if (contrast_delta < 0.0 || contrast_delta > 0.5)
    throw ConfigError("contrast_delta must be in [0, 0.5]");
  if (blob_complexity < 1 || blob_complexity > 5)
    throw ConfigError("blob_complexity must be in [1, 5]");
  if (!(labeled_fraction > 0.0) || labeled_fraction > 1.0)
    throw ConfigError("labeled_fraction must be in (0, 1]");
  if (!(ssim_c1 > 0.0) || !(ssim_c2 > 0.0)) throw ConfigError("ssim_c1/ssim_c2 must be > 0");
  if (band_px < 0) throw ConfigError("band_px must be >= 0");
  if (weight_mode != "consistency" && weight_mode != "uniform")
    throw ConfigError("weight_mode must be 'consistency' or 'uniform', got '" + weight_mode + "'");
  parse_pixel_weight_variant(pixel_weight_variant);
  train_config().validate();  // the remaining numeric field checks
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t;
  t.epochs = epochs;
  t.burn_in_epochs = burn_in_epochs;
  t.batch_labeled = batch_labeled;
  t.batch_unlabeled = batch_unlabeled;
  t.lr0 = lr0;
  t.sgd_momentum = sgd_momentum;
  t.poly_power = poly_power;
  t.ema_eta = eta;
  t.rotation_lo_deg = rotation_lo_deg;
  t.rotation_hi_deg = rotation_hi_deg;
  t.uniform_weights = weight_mode == "uniform";
  t.pixel_weight.alpha = alpha;
  t.pixel_weight.mu = mu;
  t.pixel_weight.variant = parse_pixel_weight_variant(pixel_weight_variant);
  t.instance_weight.beta = beta;
  t.instance_weight.ssim = {ssim_window, ssim_sigma, ssim_c1, ssim_c2};
  t.loss_weights = {lambda_pc, lambda_ic};
  t.weak = {flip_prob, scale_lo, scale_hi};
  t.strong = {strong_max_ops};
  t.seed = seed;
  return t;
}

CamoGenConfig RunConfig::gen_config() const {
  CamoGenConfig g;
  g.size = image_size;
  g.texture_scale = texture_scale;
  g.contrast_delta = contrast_delta;
  g.blob_complexity = blob_complexity;
  g.seed = seed;
  return g;
}

}  // namespace camoseg
