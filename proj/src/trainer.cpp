#include "camoseg/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "camoseg/errors.hpp"
#include "camoseg/metrics.hpp"

namespace camoseg {

namespace {

constexpr std::uint64_t kStreamLabeledShuffle = 0x6c61627368ULL;  // "labsh"
constexpr std::uint64_t kStreamUnlabeledPool = 0x756c706f6fULL;   // "ulpoo"
constexpr std::uint64_t kStreamIteration = 0x69746572ULL;         // "iter"

void shuffle_indices(std::vector<std::size_t>& order, Rng& rng) {
  for (std::size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[rng.uniform_int(0, static_cast<int>(i) - 1)]);
}

Tensor forward_single(const ModelParams& params, const Tensor& image) {
  const int h = image.dim(1), w = image.dim(2);
  return reshape(model_forward(params, reshape(image, {1, 3, h, w})), {h, w});
}

double masked_mean(const Tensor& map, const Mask& m) {
  const auto& v = map.data();
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (m.bits[i]) {
      s += v[i];
      ++n;
    }
  return n == 0 ? 0.0 : s / static_cast<double>(n);
}

}  // namespace

void TrainConfig::validate() const {
  auto bad = [](const std::string& msg) { throw ConfigError(msg); };
  if (epochs < 1) bad("epochs must be >= 1");
  if (burn_in_epochs < 0 || burn_in_epochs > epochs)
    bad("burn_in_epochs must be in [0, epochs]");
  if (batch_labeled < 1) bad("batch_labeled must be >= 1");
  if (batch_unlabeled < 0) bad("batch_unlabeled must be >= 0");
  if (!(lr0 > 0.0)) bad("lr0 must be > 0");
  if (sgd_momentum < 0.0 || sgd_momentum >= 1.0) bad("sgd_momentum must be in [0, 1)");
  if (!(poly_power > 0.0)) bad("poly_power must be > 0");
  if (!(ema_eta > 0.0) || !(ema_eta < 1.0)) bad("eta must be in (0, 1)");
  if (!(rotation_lo_deg <= rotation_hi_deg))
    bad("rotation_lo_deg must be <= rotation_hi_deg");
  if (rotation_lo_deg < -180.0 || rotation_hi_deg > 180.0)
    bad("rotation range must lie within [-180, 180]");
  if (!(pixel_weight.alpha > 0.0)) bad("alpha must be > 0");
  if (pixel_weight.mu < 0.0 || pixel_weight.mu > 1.0) bad("mu must be in [0, 1]");
  if (!(instance_weight.beta > 0.0)) bad("beta must be > 0");
  if (instance_weight.ssim.window < 3 || instance_weight.ssim.window % 2 == 0)
    bad("ssim_window must be odd and >= 3");
  if (!(instance_weight.ssim.sigma > 0.0)) bad("ssim_sigma must be > 0");
  if (loss_weights.lambda_pc < 0.0) bad("lambda_pc must be >= 0");
  if (loss_weights.lambda_ic < 0.0) bad("lambda_ic must be >= 0");
  if (weak.flip_prob < 0.0 || weak.flip_prob > 1.0) bad("flip_prob must be in [0, 1]");
  if (!(weak.scale_lo > 0.0) || !(weak.scale_lo <= weak.scale_hi))
    bad("weak scale range must satisfy 0 < scale_lo <= scale_hi");
  if (strong.max_ops < 0 || strong.max_ops > 11) bad("strong_max_ops must be in [0, 11]");
}

TrainState init_train_state(std::uint64_t seed) {
  TrainState st;
  st.seed = seed;
  st.student = ModelParams::init(seed, true);
  st.teacher = st.student.clone(false);
  st.teacher_active = false;
  st.momentum.reserve(st.student.tensors.size());
  for (const auto& p : st.student.tensors) st.momentum.push_back(Tensor::zeros(p.shape()));
  return st;
}

double poly_lr(long iter, long max_iter, double lr0, double power) {
  if (max_iter < 1) throw std::invalid_argument("poly_lr: max_iter must be >= 1");
  if (iter < 0 || iter > max_iter)
    throw std::invalid_argument("poly_lr: iter must be in [0, max_iter]");
  return lr0 * std::pow(1.0 - static_cast<double>(iter) / static_cast<double>(max_iter), power);
}

void sgd_step(ModelParams& params, std::vector<Tensor>& momentum,
              const std::vector<Tensor>& grads, double lr, double sgd_momentum) {
  if (grads.size() != params.tensors.size() || momentum.size() != params.tensors.size())
    throw std::invalid_argument("sgd_step: misaligned gradient/momentum lists");
  for (std::size_t i = 0; i < params.tensors.size(); ++i) {
    if (grads[i].shape() != params.tensors[i].shape())
      throw std::invalid_argument("sgd_step: gradient shape mismatch for " + params.names[i]);
    const auto& g = grads[i].data();
    const auto& buf = momentum[i].data();
    const auto& th = params.tensors[i].data();
    std::vector<double> nbuf(g.size()), nth(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) {
      nbuf[k] = sgd_momentum * buf[k] + g[k];
      nth[k] = th[k] - lr * nbuf[k];
    }
    momentum[i] = Tensor::from_data(grads[i].shape(), std::move(nbuf), false);
    params.tensors[i] = Tensor::from_data(grads[i].shape(), std::move(nth), true);
  }
}

void ema_update(ModelParams& teacher, const ModelParams& student, double eta) {
  if (teacher.tensors.size() != student.tensors.size())
    throw std::invalid_argument("ema_update: misaligned parameter lists");
  for (std::size_t i = 0; i < teacher.tensors.size(); ++i) {
    if (teacher.tensors[i].shape() != student.tensors[i].shape())
      throw std::invalid_argument("ema_update: shape mismatch for " + teacher.names[i]);
    const auto& t = teacher.tensors[i].data();
    const auto& s = student.tensors[i].data();
    std::vector<double> nt(t.size());
    for (std::size_t k = 0; k < t.size(); ++k) nt[k] = eta * t[k] + (1.0 - eta) * s[k];
    teacher.tensors[i] = Tensor::from_data(teacher.tensors[i].shape(), std::move(nt), false);
  }
}

DualRotationSample dual_rotation_views(const Tensor& weak_image, const ModelParams& teacher,
                                       double theta1, double theta2,
                                       const PixelWeightConfig& pixel_cfg,
                                       const InstanceWeightConfig& instance_cfg,
                                       bool uniform_weights) {
  if (!weak_image.defined() || weak_image.ndim() != 3 || weak_image.dim(0) != 3)
    throw std::invalid_argument("dual_rotation_views: expected [3,H,W] image");
  const int h = weak_image.dim(1), w = weak_image.dim(2);

  DualRotationSample ds;
  ds.theta1 = theta1;
  ds.theta2 = theta2;

  RotatedView r1 = rotate(weak_image, theta1);
  ds.r1_image = r1.data;
  ds.teacher_r1 = forward_single(teacher, r1.data);
  RotatedView h1v = unrotate({ds.teacher_r1, theta1, r1.valid});
  ds.h1 = h1v.data;

  Tensor w_pc_h;
  if (uniform_weights) {
    // weights are constant; only the second angle's footprint matters
    const Mask r2_valid = rotate_mask(Mask::all_valid(h, w), theta2);
    const RotatedView h2v = unrotate({Tensor::zeros({h, w}), theta2, r2_valid});
    ds.v_h = h1v.valid.and_with(h2v.valid);
    if (!ds.v_h.any()) throw InsufficientValidArea();
    ds.h2 = ds.h1;
    ds.y_h = ds.h1;
    ds.delta = Tensor::zeros({h, w});
    w_pc_h = Tensor::full({h, w}, 1.0);
    ds.w_ic = 1.0;
  } else {
    RotatedView r2 = rotate(weak_image, theta2);
    Tensor pred2 = forward_single(teacher, r2.data);
    RotatedView h2v = unrotate({pred2, theta2, r2.valid});
    ds.h2 = h2v.data;
    ds.v_h = joint_valid(h1v, h2v);
    if (!ds.v_h.any()) throw InsufficientValidArea();
    ds.delta = pixel_inconsistency(ds.h1, ds.h2, ds.v_h);
    ds.y_h = mean_horizontal(ds.h1, ds.h2);
    w_pc_h = pixel_weight(ds.delta, ds.y_h, pixel_cfg);
    ds.w_ic = instance_weight(ds.h1, ds.h2, ds.v_h, instance_cfg);
  }
  ds.mean_w_pc = masked_mean(w_pc_h, ds.v_h);

  ds.v_r1 = rotate_mask(ds.v_h, theta1);
  if (!ds.v_r1.any()) throw InsufficientValidArea();
  ds.w_pc_r1 = rotate(w_pc_h, theta1).data;
  return ds;
}

UnsupLosses unsupervised_step(const std::vector<Tensor>& batch_u, const ModelParams& student,
                              const ModelParams& teacher, const TrainConfig& cfg, Rng& rng) {
  UnsupLosses out;
  Tensor sum_pc, sum_ic;
  double acc_w_pc = 0.0, acc_w_ic = 0.0, acc_vfrac = 0.0;
  for (const Tensor& raw : batch_u) {
    WeakResult weak = weak_augment(raw, Tensor(), cfg.weak, rng);
    const double th1 = rng.uniform(cfg.rotation_lo_deg, cfg.rotation_hi_deg);
    const double th2 = rng.uniform(cfg.rotation_lo_deg, cfg.rotation_hi_deg);
    DualRotationSample ds;
    try {
      ds = dual_rotation_views(weak.image, teacher, th1, th2, cfg.pixel_weight,
                               cfg.instance_weight, cfg.uniform_weights);
    } catch (const InsufficientValidArea&) {
      out.diag.skipped += 1;
      continue;
    }
    Tensor strong = strong_augment(ds.r1_image, cfg.strong, rng);
    Tensor pred = forward_single(student, strong);
    Tensor valid01 = ds.v_r1.to_tensor();
    Tensor lp = bce(pred, ds.teacher_r1, ds.w_pc_r1, valid01);
    Tensor li = soft_iou(pred, ds.teacher_r1, ds.w_ic, valid01);
    sum_pc = out.diag.used == 0 ? lp : add(sum_pc, lp);
    sum_ic = out.diag.used == 0 ? li : add(sum_ic, li);
    out.diag.used += 1;
    acc_w_pc += ds.mean_w_pc;
    acc_w_ic += ds.w_ic;
    acc_vfrac += ds.v_h.fraction();
  }
  if (out.diag.used > 0) {
    const double inv = 1.0 / static_cast<double>(out.diag.used);
    out.l_pc = mul(sum_pc, inv);
    out.l_ic = mul(sum_ic, inv);
    out.diag.mean_w_pc = acc_w_pc * inv;
    out.diag.mean_w_ic = acc_w_ic * inv;
    out.diag.mean_valid_fraction = acc_vfrac * inv;
  }
  return out;
}

namespace {

// mae + mean F-measure of `params` over samples that have usable masks
std::pair<double, double> quick_eval(const ModelParams& params,
                                     const std::vector<Sample>& eval_set) {
  double sum_mae = 0.0, sum_f = 0.0;
  int n = 0;
  for (const auto& s : eval_set) {
    if (!s.mask.defined()) continue;
    bool has_positive = false;
    for (double v : s.mask.data())
      if (v == 1.0) {
        has_positive = true;
        break;
      }
    if (!has_positive) continue;  // recall undefined; skip
    Tensor pred = forward_single(params, s.image);
    sum_mae += mae(pred, s.mask);
    sum_f += f_measure(pred, s.mask, FMode::kMean);
    ++n;
  }
  if (n == 0)
    return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
  return {sum_mae / n, sum_f / n};
}

}  // namespace

TrainResult train(const std::vector<Sample>& labeled, const std::vector<Sample>& unlabeled,
                  const std::vector<Sample>& eval_set, const TrainConfig& cfg,
                  const TrainObserver& observer, const TrainState* resume) {
  cfg.validate();
  if (labeled.empty()) throw ConfigError("train: empty labeled split");
  for (const auto& s : labeled)
    if (!s.mask.defined())
      throw ConfigError("train: labeled sample " + s.id + " has no mask");

  TrainState st = resume ? *resume : init_train_state(cfg.seed);
  if (resume) {
    // Re-leaf the student: backward() accumulates into leaf grad buffers, so
    // training directly on the caller's tensors would leave gradients behind
    // in the resumed state (and corrupt a second resume from the same state).
    st.student = st.student.clone(true);
  }
  const int start_epoch = resume ? resume->epoch : 0;
  if (start_epoch < 0 || start_epoch > cfg.epochs)
    throw ConfigError("train: resumed epoch " + std::to_string(start_epoch) +
                      " lies outside [0, epochs]");
  const long iters_per_epoch =
      (static_cast<long>(labeled.size()) + cfg.batch_labeled - 1) / cfg.batch_labeled;
  const long max_iter = iters_per_epoch * cfg.epochs;
  if (st.iter < 0 || st.iter > max_iter)
    throw ConfigError("train: resumed iteration " + std::to_string(st.iter) +
                      " exceeds the schedule length " + std::to_string(max_iter));

  // unlabeled pool: an independent cycling shuffle
  std::vector<std::size_t> u_order(unlabeled.size());
  std::iota(u_order.begin(), u_order.end(), std::size_t{0});
  std::size_t u_cursor = 0;
  std::uint64_t u_refills = 0;
  auto u_refill = [&]() {
    Rng r(mix_seed(cfg.seed, kStreamUnlabeledPool, u_refills++));
    shuffle_indices(u_order, r);
    u_cursor = 0;
  };
  if (!unlabeled.empty()) u_refill();

  auto snapshot_teacher = [&]() {
    st.teacher = st.student.clone(false);
    st.teacher_active = true;
  };
  if (!st.teacher_active && start_epoch >= cfg.burn_in_epochs) snapshot_teacher();

  std::vector<EpochMetrics> history;
  history.reserve(cfg.epochs);

  for (int epoch = start_epoch; epoch < cfg.epochs; ++epoch) {
    st.epoch = epoch;
    std::vector<std::size_t> order(labeled.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    {
      Rng r(mix_seed(cfg.seed, kStreamLabeledShuffle, static_cast<std::uint64_t>(epoch)));
      shuffle_indices(order, r);
    }

    double acc_ls = 0.0, acc_lpc = 0.0, acc_lic = 0.0;
    double acc_w_pc = 0.0, acc_w_ic = 0.0;
    long unsup_iters = 0;

    for (long bi = 0; bi < iters_per_epoch; ++bi) {
      Rng it_rng(mix_seed(cfg.seed, kStreamIteration, static_cast<std::uint64_t>(st.iter)));

      // supervised half: weak-augmented labeled batch
      std::vector<Tensor> imgs, masks;
      const std::size_t lo = static_cast<std::size_t>(bi) * cfg.batch_labeled;
      const std::size_t hi = std::min(lo + cfg.batch_labeled, labeled.size());
      for (std::size_t s = lo; s < hi; ++s) {
        const Sample& smp = labeled[order[s]];
        WeakResult wr = weak_augment(smp.image, smp.mask, cfg.weak, it_rng);
        imgs.push_back(wr.image);
        masks.push_back(wr.mask);
      }
      Tensor pred = model_forward(st.student, stack0(imgs));
      Tensor l_s = bce(pred, stack0(masks));

      // unsupervised half once the teacher exists
      Tensor l_pc = Tensor::scalar(0.0);
      Tensor l_ic = Tensor::scalar(0.0);
      const bool unsup = st.teacher_active && !unlabeled.empty() && cfg.batch_unlabeled > 0;
      if (unsup) {
        std::vector<Tensor> batch_u;
        for (int k = 0; k < cfg.batch_unlabeled; ++k) {
          if (u_cursor == u_order.size()) u_refill();
          batch_u.push_back(unlabeled[u_order[u_cursor++]].image);
        }
        UnsupLosses ul = unsupervised_step(batch_u, st.student, st.teacher, cfg, it_rng);
        if (ul.diag.used > 0) {
          l_pc = ul.l_pc;
          l_ic = ul.l_ic;
          acc_w_pc += ul.diag.mean_w_pc;
          acc_w_ic += ul.diag.mean_w_ic;
          ++unsup_iters;
        }
      }

      Tensor total = total_loss(l_s, l_pc, l_ic, cfg.loss_weights);
      const double loss_value = total.item();
      if (!std::isfinite(loss_value)) throw DivergedError(st.iter);
      acc_ls += l_s.item();
      acc_lpc += l_pc.item();
      acc_lic += l_ic.item();

      total.backward();
      std::vector<Tensor> grads;
      grads.reserve(st.student.tensors.size());
      for (const auto& p : st.student.tensors)
        grads.push_back(p.has_grad() ? Tensor::from_data(p.shape(), p.grad(), false)
                                     : Tensor::zeros(p.shape()));
      const double lr = poly_lr(st.iter, max_iter, cfg.lr0, cfg.poly_power);
      sgd_step(st.student, st.momentum, grads, lr, cfg.sgd_momentum);
      if (st.teacher_active) ema_update(st.teacher, st.student, cfg.ema_eta);
      st.iter += 1;
      if (observer) observer(st, lr, loss_value);
    }

    if (!st.teacher_active && epoch + 1 == cfg.burn_in_epochs) snapshot_teacher();

    EpochMetrics em;
    em.epoch = epoch;
    em.loss_sup = acc_ls / static_cast<double>(iters_per_epoch);
    em.loss_pc = acc_lpc / static_cast<double>(iters_per_epoch);
    em.loss_ic = acc_lic / static_cast<double>(iters_per_epoch);
    em.mean_w_pc = unsup_iters > 0 ? acc_w_pc / static_cast<double>(unsup_iters) : 0.0;
    em.mean_w_ic = unsup_iters > 0 ? acc_w_ic / static_cast<double>(unsup_iters) : 0.0;
    if (!eval_set.empty()) {
      const auto [m, f] = quick_eval(st.teacher_active ? st.teacher : st.student, eval_set);
      em.eval_mae = m;
      em.eval_f_mean = f;
    }
    history.push_back(em);
  }

  st.epoch = cfg.epochs;
  return {std::move(st), std::move(history)};
}

}  // namespace camoseg
