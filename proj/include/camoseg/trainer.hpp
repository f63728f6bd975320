#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "camoseg/augment.hpp"
#include "camoseg/dataset.hpp"
#include "camoseg/drcl.hpp"
#include "camoseg/losses.hpp"
#include "camoseg/rng.hpp"
#include "camoseg/segmodel.hpp"

namespace camoseg {

struct TrainConfig {
  int epochs = 40;
  int burn_in_epochs = 10;  // may equal epochs: that is the supervised-only baseline
  int batch_labeled = 4;
  int batch_unlabeled = 4;
  double lr0 = 0.01;
  double sgd_momentum = 0.9;
  double poly_power = 0.9;
  double ema_eta = 0.996;
  double rotation_lo_deg = -90.0;
  double rotation_hi_deg = 90.0;
  // true = plain mean-teacher: pixel and instance weights pinned to 1
  bool uniform_weights = false;
  PixelWeightConfig pixel_weight;
  InstanceWeightConfig instance_weight;
  LossWeights loss_weights;
  WeakAugmentConfig weak;
  StrongAugmentConfig strong;
  std::uint64_t seed = 0;

  void validate() const;  // throws ConfigError naming the offending field
};

struct EpochMetrics {
  int epoch = 0;
  double loss_sup = 0.0;
  double loss_pc = 0.0;
  double loss_ic = 0.0;
  double mean_w_pc = 0.0;  // mean pixel weight over joint-valid pixels, horizontal frame
  double mean_w_ic = 0.0;
  double eval_mae = std::numeric_limits<double>::quiet_NaN();
  double eval_f_mean = std::numeric_limits<double>::quiet_NaN();
};

struct TrainState {
  ModelParams student;
  ModelParams teacher;        // tracked by EMA only; never sees the optimizer
  bool teacher_active = false;
  std::vector<Tensor> momentum;  // aligned with student.tensors
  long iter = 0;                 // optimizer steps taken
  int epoch = 0;
  std::uint64_t seed = 0;
};

// Fresh student (seeded init), teacher = inactive copy, zero momentum.
TrainState init_train_state(std::uint64_t seed);

// lr0 * (1 - iter/max_iter)^power
double poly_lr(long iter, long max_iter, double lr0, double power);

// buf <- m*buf + g; theta <- theta - lr*buf. Parameters are replaced by fresh
// leaf tensors (values are immutable once created).
void sgd_step(ModelParams& params, std::vector<Tensor>& momentum,
              const std::vector<Tensor>& grads, double lr, double sgd_momentum);

// Every teacher tensor <- eta*teacher + (1-eta)*student, elementwise, exactly.
void ema_update(ModelParams& teacher, const ModelParams& student, double eta);

// Everything derived from one unlabeled image and a rotation pair: the view-1
// inputs/targets the student trains on, plus horizontal-frame maps kept for
// diagnostics and analysis.
struct DualRotationSample {
  Tensor r1_image;    // weak image rotated by theta1 (pre strong augmentation)
  Tensor teacher_r1;  // teacher prediction in the r1 frame, detached
  Tensor w_pc_r1;     // pixel weights rotated into the r1 frame
  Mask v_r1;          // joint validity carried into the r1 frame
  double w_ic = 1.0;
  Tensor h1, h2;  // de-rotated teacher predictions (horizontal frame)
  Tensor y_h;     // (h1+h2)/2
  Tensor delta;   // |h1-h2| on v_h
  Mask v_h;
  double theta1 = 0.0, theta2 = 0.0;
  double mean_w_pc = 0.0;  // mean pixel weight over v_h
};

// Runs the teacher dual-rotation pipeline for one weak-augmented image.
// uniform_weights skips the second forward pass (weights are constant 1;
// validity still accounts for both angles so the footprint matches).
// Throws InsufficientValidArea when no usable pixels/windows remain.
DualRotationSample dual_rotation_views(const Tensor& weak_image, const ModelParams& teacher,
                                       double theta1, double theta2,
                                       const PixelWeightConfig& pixel_cfg,
                                       const InstanceWeightConfig& instance_cfg,
                                       bool uniform_weights);

struct UnsupDiagnostics {
  int used = 0;
  int skipped = 0;
  double mean_w_pc = 0.0;
  double mean_w_ic = 0.0;
  double mean_valid_fraction = 0.0;
};

struct UnsupLosses {
  Tensor l_pc;  // undefined when diag.used == 0
  Tensor l_ic;
  UnsupDiagnostics diag;
};

// Full unlabeled step for a batch of raw images: weak-augment each once, draw
// the two rotations, run the teacher pipeline, strong-augment view 1, student
// forward, weighted losses (averaged over usable samples). Samples without
// enough valid area are skipped, shrinking the batch.
UnsupLosses unsupervised_step(const std::vector<Tensor>& batch_u, const ModelParams& student,
                              const ModelParams& teacher, const TrainConfig& cfg, Rng& rng);

struct TrainResult {
  TrainState state;
  std::vector<EpochMetrics> history;
};

// Read-only peek after each optimizer step (state already updated).
using TrainObserver = std::function<void(const TrainState& state, double lr, double loss)>;

// Burn-in epochs train on labeled data only; when they end the teacher
// becomes an exact student copy and every later iteration adds the weighted
// unlabeled losses plus one EMA update. eval_set (when nonempty) is scored
// each epoch with the teacher once active, the student before.
// Deterministic for a fixed (data, cfg.seed). `resume` continues from a
// saved state (same cfg assumed; the unlabeled stream restarts).
TrainResult train(const std::vector<Sample>& labeled, const std::vector<Sample>& unlabeled,
                  const std::vector<Sample>& eval_set, const TrainConfig& cfg,
                  const TrainObserver& observer = {}, const TrainState* resume = nullptr);

}  // namespace camoseg
