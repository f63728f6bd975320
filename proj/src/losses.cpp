#include "camoseg/losses.hpp"

#include <stdexcept>

namespace camoseg {

namespace {

void check_aligned(const Tensor& pred, const Tensor& other, const char* who, const char* what) {
  if (!other.defined()) return;
  if (other.shape() != pred.shape())
    throw std::invalid_argument(std::string(who) + ": " + what + " shape " +
                                shape_str(other.shape()) + " does not match pred " +
                                shape_str(pred.shape()));
  if (other.requires_grad())
    throw std::invalid_argument(std::string(who) + ": " + what +
                                " must be detached (no gradient may flow into it)");
}

// Count of contributing pixels: mask sum if given, else every element.
double valid_count(const Tensor& pred, const Tensor& valid01, const char* who) {
  if (!valid01.defined()) return static_cast<double>(pred.size());
  double n = 0.0;
  for (double v : valid01.data()) n += v;
  if (n <= 0.0) throw std::invalid_argument(std::string(who) + ": no valid pixels");
  return n;
}

}  // namespace

Tensor bce(const Tensor& pred, const Tensor& target, const Tensor& weight,
           const Tensor& valid01) {
  if (!pred.defined() || !target.defined())
    throw std::invalid_argument("bce: undefined tensor");
  check_aligned(pred, target, "bce", "target");
  check_aligned(pred, weight, "bce", "weight");
  check_aligned(pred, valid01, "bce", "valid mask");
  const double n = valid_count(pred, valid01, "bce");

  Tensor p = clamp(pred, kLossEps, 1.0 - kLossEps);
  Tensor term = add(mul(target, log(p)), mul(sub(1.0, target), log(sub(1.0, p))));
  if (weight.defined()) term = mul(term, weight);
  if (valid01.defined()) term = mul(term, valid01);
  return mul(sum(term), -1.0 / n);
}

Tensor bce(const Tensor& pred, const Tensor& target) {
  return bce(pred, target, Tensor(), Tensor());
}

Tensor soft_iou(const Tensor& pred, const Tensor& target, double instance_weight,
                const Tensor& valid01) {
  if (!pred.defined() || !target.defined())
    throw std::invalid_argument("soft_iou: undefined tensor");
  check_aligned(pred, target, "soft_iou", "target");
  check_aligned(pred, valid01, "soft_iou", "valid mask");
  if (instance_weight < 0.0)
    throw std::invalid_argument("soft_iou: negative instance weight " +
                                std::to_string(instance_weight));
  const double n = valid_count(pred, valid01, "soft_iou");

  Tensor inter = mul(pred, target);
  Tensor uni = sub(add(pred, target), inter);
  Tensor frac = div(add(inter, kLossEps), add(uni, kLossEps));
  Tensor px = sub(1.0, frac);
  if (valid01.defined()) px = mul(px, valid01);
  return mul(sum(px), instance_weight / n);
}

Tensor total_loss(const Tensor& l_s, const Tensor& l_pc, const Tensor& l_ic,
                  const LossWeights& w) {
  return add(l_s, add(mul(l_pc, w.lambda_pc), mul(l_ic, w.lambda_ic)));
}

}  // namespace camoseg
