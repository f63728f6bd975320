#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace camoseg {

std::string shape_str(const std::vector<int>& shape);

// pow with correctly-rounded results for the exponents the weighting math
// uses: 0.25 and 0.5 go through sqrt (exactly rounded per IEEE-754), so e.g.
// 0.0625^(1/4) is exactly 0.5 on every libm.
double pow_rounded(double x, double p);

namespace detail {

struct TensorImpl {
  std::vector<int> shape;
  std::vector<double> data;
  bool requires_grad = false;
  // autograd tape: inputs this value was computed from, plus a closure that
  // reads this node's grad and accumulates into the parents' grads.
  std::vector<std::shared_ptr<TensorImpl>> parents;
  std::function<void(TensorImpl&)> backward_fn;
  std::vector<double> grad;
  bool backward_done = false;

  std::size_t numel() const {
    std::size_t n = 1;
    for (int d : shape) n *= static_cast<std::size_t>(d);
    return n;
  }
};

}  // namespace detail

// Dense row-major float64 tensor with reverse-mode autodiff. Values are
// immutable after creation; gradients accumulate into a separate buffer
// during backward(). Single-threaded, deterministic evaluation order.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
  static Tensor full(std::vector<int> shape, double value, bool requires_grad = false);
  static Tensor from_data(std::vector<int> shape, std::vector<double> data,
                          bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const std::vector<int>& shape() const;
  int ndim() const;
  int dim(int i) const;
  std::size_t size() const;
  const std::vector<double>& data() const;
  double item() const;
  double at(const std::vector<int>& index) const;
  bool requires_grad() const;

  // New leaf sharing nothing with the graph: same values, no gradient flow.
  Tensor detach() const;
  // Deep copy as a fresh leaf.
  Tensor clone(bool requires_grad) const;

  bool has_grad() const;
  const std::vector<double>& grad() const;

  // Reverse-mode sweep from a scalar. A second call on the same value errors:
  // gradients would silently double-accumulate.
  void backward() const;

  std::shared_ptr<detail::TensorImpl> impl() const { return impl_; }
  explicit Tensor(std::shared_ptr<detail::TensorImpl> impl) : impl_(std::move(impl)) {}

 private:
  std::shared_ptr<detail::TensorImpl> impl_;
};

// ---- elementwise (binary forms require exactly matching shapes) ----
Tensor add(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, double s);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, double s);
Tensor sub(double s, const Tensor& a);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, double s);
Tensor div(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, double s);
Tensor pow_scalar(const Tensor& a, double p);
Tensor abs(const Tensor& a);
Tensor log(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor leaky_relu(const Tensor& a, double slope);
Tensor clamp(const Tensor& a, double lo, double hi);

// ---- reductions ----
Tensor sum(const Tensor& a);
Tensor sum(const Tensor& a, const std::vector<int>& axes);
Tensor mean(const Tensor& a);
Tensor mean(const Tensor& a, const std::vector<int>& axes);

// ---- shape / structure ----
Tensor reshape(const Tensor& a, std::vector<int> shape);
// Batch plain data tensors along a new leading axis. Inputs must not require
// grad (this is a data-assembly helper, not a differentiable op).
Tensor stack0(const std::vector<Tensor>& items);

// ---- neural ops ----
// input [N,C,H,W], kernel [F,C,k,k] with odd k, optional bias [F].
// Cross-correlation with zero padding.
Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias, int stride,
              int padding);
Tensor conv2d(const Tensor& input, const Tensor& kernel, int stride, int padding);
Tensor upsample_nearest(const Tensor& a, int factor);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator*(const Tensor& a, double s) { return mul(a, s); }
inline Tensor operator*(double s, const Tensor& a) { return mul(a, s); }

}  // namespace camoseg
