#include "camoseg/app.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "camoseg/checkpoint.hpp"
#include "camoseg/errors.hpp"
#include "camoseg/metrics.hpp"
#include "camoseg/trainer.hpp"

namespace fs = std::filesystem;

namespace camoseg {

namespace {

constexpr std::uint64_t kStreamAnalyze = 0x616e6c7aULL;  // "anlz"

std::string fmt_g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);  // binary: keep LF endings everywhere
  if (!f) throw ConfigError("cannot write " + path);
  f << text;
  if (!f) throw ConfigError("short write to " + path);
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create directory " + dir + ": " + ec.message());
}

Tensor forward_map(const ModelParams& params, const Tensor& image) {
  const int h = image.dim(1), w = image.dim(2);
  return reshape(model_forward(params, reshape(image, {1, 3, h, w})), {h, w});
}

std::vector<Sample> load_masked_dataset(const std::string& data_dir, int size,
                                        const char* purpose) {
  try {
    return load_dataset(data_dir, size, true);
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    if (what.find("masks") != std::string::npos)
      throw ConfigError(std::string(purpose) + " requires masks: " + what);
    throw;
  }
}

}  // namespace

void apply_env_seed(RunConfig& cfg) {
  const char* env = std::getenv("CAMOT_SEED");
  if (env == nullptr || *env == '\0') return;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (end == env || *end != '\0')
    throw ConfigError(std::string("CAMOT_SEED must be a non-negative integer, got '") + env +
                      "'");
  cfg.seed = static_cast<std::uint64_t>(v);
}

int run_gen_data(const RunConfig& cfg, int count, const std::string& out_dir) {
  cfg.validate();
  if (count < 1) throw ConfigError("gen-data: count must be >= 1");
  std::vector<Sample> samples = generate_dataset(cfg.gen_config(), count);
  // flag only: every mask still goes to disk (analysis wants ground truth);
  // the labeled bit controls what the trainer later gets to see
  const std::vector<char> flags = choose_labeled(samples.size(), cfg.labeled_fraction, cfg.seed);
  for (std::size_t i = 0; i < samples.size(); ++i) samples[i].labeled = flags[i] != 0;
  write_dataset(out_dir, samples);
  std::size_t labeled = 0;
  for (const auto& s : samples) labeled += s.labeled;
  std::printf("wrote %zu samples (%zu labeled) to %s\n", samples.size(), labeled,
              out_dir.c_str());
  return 0;
}

int run_train(const RunConfig& cfg, const std::string& data_dir, const std::string& out_dir,
              const std::string& eval_dir, const std::string& resume_path, bool force) {
  cfg.validate();
  std::vector<Sample> all = load_dataset(data_dir, cfg.image_size, false);
  std::vector<Sample> labeled, unlabeled;
  for (auto& s : all) (s.labeled ? labeled : unlabeled).push_back(std::move(s));
  std::vector<Sample> eval_set =
      eval_dir.empty() ? labeled : load_masked_dataset(eval_dir, cfg.image_size, "evaluation");

  ensure_dir(out_dir);
  write_text((fs::path(out_dir) / "config.resolved.json").string(), cfg.resolved_text());

  TrainState resume_state;
  const TrainState* resume = nullptr;
  if (!resume_path.empty()) {
    Checkpoint ck = load_checkpoint(resume_path);
    if (ck.config.hash_hex() != cfg.hash_hex() && !force)
      throw ConfigError("checkpoint config hash " + ck.config.hash_hex() +
                        " does not match the current config " + cfg.hash_hex() +
                        "; pass --force to resume anyway");
    resume_state.student = std::move(ck.student);
    resume_state.teacher = std::move(ck.teacher);
    resume_state.teacher_active = ck.teacher_active;
    resume_state.momentum = std::move(ck.momentum);
    resume_state.iter = ck.iter;
    resume_state.epoch = ck.epoch;
    resume_state.seed = cfg.seed;
    resume = &resume_state;
  }

  TrainResult result = train(labeled, unlabeled, eval_set, cfg.train_config(), {}, resume);

  std::string csv = "epoch,l_s,l_pc,l_ic,mean_w_pc,mean_w_ic,eval_mae,eval_f_mean\n";
  for (const auto& em : result.history) {
    csv += std::to_string(em.epoch) + "," + fmt_g17(em.loss_sup) + "," + fmt_g17(em.loss_pc) +
           "," + fmt_g17(em.loss_ic) + "," + fmt_g17(em.mean_w_pc) + "," +
           fmt_g17(em.mean_w_ic) + "," + fmt_g17(em.eval_mae) + "," +
           fmt_g17(em.eval_f_mean) + "\n";
  }
  write_text((fs::path(out_dir) / "metrics.csv").string(), csv);

  Checkpoint ck;
  ck.epoch = result.state.epoch;
  ck.iter = result.state.iter;
  ck.teacher_active = result.state.teacher_active;
  ck.config = cfg;
  ck.student = std::move(result.state.student);
  ck.teacher = std::move(result.state.teacher);
  ck.momentum = std::move(result.state.momentum);
  save_checkpoint((fs::path(out_dir) / "final.ckpt").string(), ck);

  if (!result.history.empty()) {
    const auto& last = result.history.back();
    std::printf("trained %d epochs (%ld iterations); eval_mae=%.5f eval_f_mean=%.5f\n",
                ck.epoch, ck.iter, last.eval_mae, last.eval_f_mean);
  } else {
    std::printf("nothing to train (checkpoint already at epoch %d)\n", ck.epoch);
  }
  return 0;
}

int run_eval(const std::string& ckpt_path, const std::string& data_dir, const std::string& use,
             const std::string& out_csv) {
  if (use != "student" && use != "teacher")
    throw ConfigError("eval: --use must be 'student' or 'teacher', got '" + use + "'");
  Checkpoint ck = load_checkpoint(ckpt_path);
  const ModelParams& model = use == "teacher" ? ck.teacher : ck.student;
  std::vector<Sample> data = load_masked_dataset(data_dir, ck.config.image_size, "evaluation");

  const SsimConfig ssim_cfg{ck.config.ssim_window, ck.config.ssim_sigma, ck.config.ssim_c1,
                            ck.config.ssim_c2};
  std::vector<SampleMetrics> rows;
  for (const auto& s : data) {
    bool has_positive = false;
    for (double v : s.mask.data())
      if (v == 1.0) {
        has_positive = true;
        break;
      }
    if (!has_positive) {
      std::fprintf(stderr, "warning: skipping %s (ground truth has no positive pixels)\n",
                   s.id.c_str());
      continue;
    }
    Tensor pred = forward_map(model, s.image);
    SampleMetrics m;
    m.id = s.id;
    m.mae = mae(pred, s.mask);
    m.f_mean = f_measure(pred, s.mask, FMode::kMean);
    m.f_max = f_measure(pred, s.mask, FMode::kMax);
    m.iou = iou_at_half(pred, s.mask);
    m.ssim_to_gt = ssim(pred, s.mask, Mask::all_valid(pred.dim(0), pred.dim(1)), ssim_cfg);
    rows.push_back(std::move(m));
  }
  if (rows.empty()) throw ConfigError("eval: no evaluable samples (all ground truths empty)");
  MetricsReport report = aggregate_metrics(std::move(rows));

  std::string csv = "id,mae,f_mean,f_max,iou,ssim_to_gt\n";
  for (const auto& r : report.per_sample)
    csv += r.id + "," + fmt_g17(r.mae) + "," + fmt_g17(r.f_mean) + "," + fmt_g17(r.f_max) +
           "," + fmt_g17(r.iou) + "," + fmt_g17(r.ssim_to_gt) + "\n";
  write_text(out_csv, csv);

  std::printf("mae %.17g\n", report.mae);
  std::printf("f_mean %.17g\n", report.f_mean);
  return 0;
}

int run_analyze(const std::string& ckpt_path, const std::string& data_dir,
                const std::string& out_dir) {
  Checkpoint ck = load_checkpoint(ckpt_path);
  RunConfig cfg = ck.config;
  apply_env_seed(cfg);
  std::vector<Sample> data = load_masked_dataset(data_dir, cfg.image_size, "analysis");
  ensure_dir(out_dir);

  const int band = cfg.band_px > 0 ? cfg.band_px : default_band_px(cfg.image_size);
  const TrainConfig tc = cfg.train_config();

  RegionNoiseAccumulator regions;
  std::vector<InstanceRow> instances;
  int skipped = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Sample& s = data[i];
    Rng rng(mix_seed(cfg.seed, kStreamAnalyze, static_cast<std::uint64_t>(i)));
    const double th1 = rng.uniform(tc.rotation_lo_deg, tc.rotation_hi_deg);
    const double th2 = rng.uniform(tc.rotation_lo_deg, tc.rotation_hi_deg);
    DualRotationSample ds;
    double c = 0.0, q = 0.0;
    try {
      ds = dual_rotation_views(s.image, ck.teacher, th1, th2, tc.pixel_weight,
                               tc.instance_weight, false);
      c = ssim(ds.h1, ds.h2, ds.v_h, tc.instance_weight.ssim);
      q = ssim(ds.h1, s.mask, ds.v_h, tc.instance_weight.ssim);
    } catch (const InsufficientValidArea&) {
      ++skipped;
      std::fprintf(stderr, "warning: skipping %s (insufficient valid area)\n", s.id.c_str());
      continue;
    }
    regions.add(ds.h1, s.mask, ds.h1, ds.h2, ds.v_h, band);
    instances.push_back({s.id, c, q});
  }
  if (instances.size() < 3)
    throw ConfigError("analyze: needs at least 3 usable samples, got " +
                      std::to_string(instances.size()) + " (" + std::to_string(skipped) +
                      " skipped)");

  std::string region_csv = "region,pooled_pixels,pooled_mpi,pooled_mae\n";
  for (const auto& r : regions.rows())
    region_csv += r.region + "," + std::to_string(r.pixels) + "," + fmt_g17(r.mpi) + "," +
                  fmt_g17(r.mae) + "\n";
  write_text((fs::path(out_dir) / "region_noise.csv").string(), region_csv);

  std::string inst_csv = "id,consistency,quality\n";
  std::vector<double> cs, qs;
  for (const auto& r : instances) {
    inst_csv += r.id + "," + fmt_g17(r.consistency) + "," + fmt_g17(r.quality) + "\n";
    cs.push_back(r.consistency);
    qs.push_back(r.quality);
  }
  write_text((fs::path(out_dir) / "instance_consistency.csv").string(), inst_csv);

  const auto r = pearson(cs, qs);
  if (r.has_value())
    std::printf("pearson_r %.17g\n", *r);
  else
    std::printf("pearson_r nan\n");
  return 0;
}

}  // namespace camoseg
