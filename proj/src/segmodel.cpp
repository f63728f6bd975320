#include "camoseg/segmodel.hpp"

#include <cmath>
#include <stdexcept>

#include "camoseg/rng.hpp"

namespace camoseg {

namespace {

struct LayerSpec {
  const char* name;
  int in_c, out_c, k, stride;
  bool upsample_before;  // nearest x2 before the conv
};

constexpr LayerSpec kLayers[] = {
    {"conv1", 3, 16, 3, 1, false},
    {"conv2", 16, 32, 3, 2, false},
    {"conv3", 32, 64, 3, 2, false},
    {"conv4", 64, 64, 3, 1, false},
    {"conv5", 64, 32, 3, 1, true},
    {"conv6", 32, 16, 3, 1, true},
    {"conv7", 16, 1, 1, 1, false},
};
constexpr int kLayerCount = static_cast<int>(sizeof(kLayers) / sizeof(kLayers[0]));
constexpr double kLeakySlope = 0.1;

}  // namespace

std::size_t model_param_count() {
  std::size_t n = 0;
  for (const auto& l : kLayers)
    n += static_cast<std::size_t>(l.out_c) * l.in_c * l.k * l.k + l.out_c;
  return n;
}

ModelParams ModelParams::init(std::uint64_t seed, bool requires_grad) {
  ModelParams p;
  Rng rng(mix_seed(seed, 0x6d6f64656cULL));  // independent init stream
  for (const auto& l : kLayers) {
    const int fan_in = l.in_c * l.k * l.k;
    const double bound = std::sqrt(6.0 / fan_in);
    std::vector<double> w(static_cast<std::size_t>(l.out_c) * l.in_c * l.k * l.k);
    for (double& v : w) v = rng.uniform(-bound, bound);
    p.tensors.push_back(
        Tensor::from_data({l.out_c, l.in_c, l.k, l.k}, std::move(w), requires_grad));
    p.names.push_back(std::string(l.name) + ".weight");
    p.tensors.push_back(Tensor::zeros({l.out_c}, requires_grad));
    p.names.push_back(std::string(l.name) + ".bias");
  }
  return p;
}

std::size_t ModelParams::total_params() const {
  std::size_t n = 0;
  for (const auto& t : tensors) n += t.size();
  return n;
}

ModelParams ModelParams::clone(bool requires_grad) const {
  ModelParams p;
  p.names = names;
  p.tensors.reserve(tensors.size());
  for (const auto& t : tensors) p.tensors.push_back(t.clone(requires_grad));
  return p;
}

Tensor model_forward(const ModelParams& params, const Tensor& image) {
  if (image.ndim() != 4 || image.dim(1) != 3)
    throw std::invalid_argument("model_forward: expected [N,3,H,W], got " +
                                shape_str(image.shape()));
  const int h = image.dim(2), w = image.dim(3);
  if (h % 4 != 0 || w % 4 != 0)
    throw std::invalid_argument("model_forward: H and W must be divisible by 4, got " +
                                shape_str(image.shape()));
  if (params.tensors.size() != static_cast<std::size_t>(2 * kLayerCount))
    throw std::invalid_argument("model_forward: parameter list has " +
                                std::to_string(params.tensors.size()) + " tensors, expected " +
                                std::to_string(2 * kLayerCount));

  Tensor x = image;
  for (int i = 0; i < kLayerCount; ++i) {
    const auto& l = kLayers[i];
    if (l.upsample_before) x = upsample_nearest(x, 2);
    x = conv2d(x, params.tensors[2 * i], params.tensors[2 * i + 1], l.stride, l.k / 2);
    if (i + 1 < kLayerCount)
      x = leaky_relu(x, kLeakySlope);
    else
      x = sigmoid(x);
  }
  return reshape(x, {image.dim(0), h, w});
}

}  // namespace camoseg
