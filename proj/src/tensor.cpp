#include "camoseg/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <unordered_set>

namespace camoseg {

using detail::TensorImpl;

std::string shape_str(const std::vector<int>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

double pow_rounded(double x, double p) {
  if (p == 1.0) return x;
  if (p == 2.0) return x * x;
  if (p == 0.5) return std::sqrt(x);
  if (p == 0.25) return std::sqrt(std::sqrt(x));
  return std::pow(x, p);
}

namespace {

std::size_t shape_numel(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  return n;
}

void check_shape(const std::vector<int>& shape, const char* who) {
  for (int d : shape) {
    if (d < 0)
      throw std::invalid_argument(std::string(who) + ": negative dimension in " + shape_str(shape));
  }
}

std::shared_ptr<TensorImpl> make_impl(std::vector<int> shape, std::vector<double> data,
                                      bool requires_grad) {
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = std::move(shape);
  impl->data = std::move(data);
  impl->requires_grad = requires_grad;
  return impl;
}

std::vector<double>& grad_of(TensorImpl& t) {
  if (t.grad.empty()) t.grad.assign(t.numel(), 0.0);
  return t.grad;
}

// Result node for an op. Records parents + backward closure only when some
// input actually requires grad, so no-grad forwards build no graph at all.
Tensor make_op(std::vector<int> shape, std::vector<double> data,
               std::vector<std::shared_ptr<TensorImpl>> parents,
               std::function<void(TensorImpl&)> backward_fn) {
  bool needs = false;
  for (const auto& p : parents)
    if (p->requires_grad) needs = true;
  auto impl = make_impl(std::move(shape), std::move(data), needs);
  if (needs) {
    impl->parents = std::move(parents);
    impl->backward_fn = std::move(backward_fn);
  }
  return Tensor(std::move(impl));
}

const std::vector<double>& need_data(const Tensor& t, const char* who) {
  if (!t.defined()) throw std::invalid_argument(std::string(who) + ": undefined tensor");
  return t.data();
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* who) {
  if (a.shape() != b.shape())
    throw std::invalid_argument(std::string(who) + ": shape mismatch " + shape_str(a.shape()) +
                                " vs " + shape_str(b.shape()));
}

// Elementwise binary op helper. fwd(a,b) -> value; bwd accumulates into both.
template <class Fwd, class Bwd>
Tensor ew_binary(const Tensor& a, const Tensor& b, const char* who, Fwd fwd, Bwd bwd) {
  need_data(a, who);
  need_data(b, who);
  check_same_shape(a, b, who);
  const auto& av = a.data();
  const auto& bv = b.data();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = fwd(av[i], bv[i]);
  auto pa = a.impl();
  auto pb = b.impl();
  return make_op(a.shape(), std::move(out), {pa, pb}, [pa, pb, bwd](TensorImpl& self) {
    const auto& g = self.grad;
    double* ga = pa->requires_grad ? grad_of(*pa).data() : nullptr;
    double* gb = pb->requires_grad ? grad_of(*pb).data() : nullptr;
    for (std::size_t i = 0; i < g.size(); ++i)
      bwd(g[i], pa->data[i], pb->data[i], self.data[i], ga ? ga + i : nullptr,
          gb ? gb + i : nullptr);
  });
}

// Elementwise unary op. dfn(x, y) -> local derivative dy/dx.
template <class Fwd, class Dfn>
Tensor ew_unary(const Tensor& a, const char* who, Fwd fwd, Dfn dfn) {
  need_data(a, who);
  const auto& av = a.data();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = fwd(av[i]);
  auto pa = a.impl();
  return make_op(a.shape(), std::move(out), {pa}, [pa, dfn](TensorImpl& self) {
    auto& ga = grad_of(*pa);
    const auto& g = self.grad;
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * dfn(pa->data[i], self.data[i]);
  });
}

}  // namespace

// ---- Tensor members ----

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
  check_shape(shape, "zeros");
  std::size_t n = shape_numel(shape);
  return Tensor(make_impl(std::move(shape), std::vector<double>(n, 0.0), requires_grad));
}

Tensor Tensor::full(std::vector<int> shape, double value, bool requires_grad) {
  check_shape(shape, "full");
  std::size_t n = shape_numel(shape);
  return Tensor(make_impl(std::move(shape), std::vector<double>(n, value), requires_grad));
}

Tensor Tensor::from_data(std::vector<int> shape, std::vector<double> data, bool requires_grad) {
  check_shape(shape, "from_data");
  if (shape_numel(shape) != data.size())
    throw std::invalid_argument("from_data: shape " + shape_str(shape) + " wants " +
                                std::to_string(shape_numel(shape)) + " values, got " +
                                std::to_string(data.size()));
  return Tensor(make_impl(std::move(shape), std::move(data), requires_grad));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return Tensor(make_impl({}, {value}, requires_grad));
}

const std::vector<int>& Tensor::shape() const {
  if (!impl_) throw std::logic_error("shape: undefined tensor");
  return impl_->shape;
}

int Tensor::ndim() const { return static_cast<int>(shape().size()); }

int Tensor::dim(int i) const {
  const auto& s = shape();
  if (i < 0 || i >= static_cast<int>(s.size()))
    throw std::out_of_range("dim: axis " + std::to_string(i) + " out of range for " +
                            shape_str(s));
  return s[i];
}

std::size_t Tensor::size() const {
  if (!impl_) return 0;
  return impl_->numel();
}

const std::vector<double>& Tensor::data() const {
  if (!impl_) throw std::logic_error("data: undefined tensor");
  return impl_->data;
}

double Tensor::item() const {
  if (size() != 1)
    throw std::invalid_argument("item: tensor has shape " + shape_str(shape()) + ", not scalar");
  return impl_->data[0];
}

double Tensor::at(const std::vector<int>& index) const {
  const auto& s = shape();
  if (index.size() != s.size())
    throw std::invalid_argument("at: rank mismatch for " + shape_str(s));
  std::size_t flat = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (index[i] < 0 || index[i] >= s[i])
      throw std::out_of_range("at: index out of range for " + shape_str(s));
    flat = flat * static_cast<std::size_t>(s[i]) + static_cast<std::size_t>(index[i]);
  }
  return impl_->data[flat];
}

bool Tensor::requires_grad() const { return impl_ && impl_->requires_grad; }

Tensor Tensor::detach() const {
  if (!impl_) return Tensor();
  return Tensor(make_impl(impl_->shape, impl_->data, false));
}

Tensor Tensor::clone(bool requires_grad) const {
  if (!impl_) return Tensor();
  return Tensor(make_impl(impl_->shape, impl_->data, requires_grad));
}

bool Tensor::has_grad() const { return impl_ && !impl_->grad.empty(); }

const std::vector<double>& Tensor::grad() const {
  if (!has_grad())
    throw std::logic_error("grad: no gradient recorded (was backward() run and does this "
                           "tensor require grad?)");
  return impl_->grad;
}

void Tensor::backward() const {
  if (!impl_) throw std::logic_error("backward: undefined tensor");
  if (size() != 1)
    throw std::invalid_argument("backward: loss must be scalar, got shape " + shape_str(shape()));
  if (!impl_->requires_grad)
    throw std::invalid_argument("backward: tensor does not require grad");
  if (impl_->backward_done)
    throw std::logic_error("backward: already invoked on this value; gradients would "
                           "double-accumulate");
  impl_->backward_done = true;

  // Iterative post-order DFS over parents; reverse gives topological order
  // with the root first. Deterministic: children visited in parent-list order.
  std::vector<TensorImpl*> order;
  std::unordered_set<TensorImpl*> seen;
  std::vector<std::pair<TensorImpl*, std::size_t>> stack;
  stack.emplace_back(impl_.get(), 0);
  seen.insert(impl_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      TensorImpl* p = node->parents[next++].get();
      if (p->requires_grad && !seen.count(p)) {
        seen.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  grad_of(*impl_)[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorImpl* node = *it;
    if (node->backward_fn && !node->grad.empty()) node->backward_fn(*node);
  }
}

// ---- elementwise ----

Tensor add(const Tensor& a, const Tensor& b) {
  return ew_binary(
      a, b, "add", [](double x, double y) { return x + y; },
      [](double g, double, double, double, double* ga, double* gb) {
        if (ga) *ga += g;
        if (gb) *gb += g;
      });
}

Tensor add(const Tensor& a, double s) {
  return ew_unary(
      a, "add", [s](double x) { return x + s; }, [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return ew_binary(
      a, b, "sub", [](double x, double y) { return x - y; },
      [](double g, double, double, double, double* ga, double* gb) {
        if (ga) *ga += g;
        if (gb) *gb -= g;
      });
}

Tensor sub(const Tensor& a, double s) { return add(a, -s); }

Tensor sub(double s, const Tensor& a) {
  return ew_unary(
      a, "sub", [s](double x) { return s - x; }, [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return ew_binary(
      a, b, "mul", [](double x, double y) { return x * y; },
      [](double g, double x, double y, double, double* ga, double* gb) {
        if (ga) *ga += g * y;
        if (gb) *gb += g * x;
      });
}

Tensor mul(const Tensor& a, double s) {
  return ew_unary(
      a, "mul", [s](double x) { return x * s; }, [s](double, double) { return s; });
}

Tensor div(const Tensor& a, const Tensor& b) {
  need_data(a, "div");
  need_data(b, "div");
  check_same_shape(a, b, "div");
  const auto& bv = b.data();
  for (std::size_t i = 0; i < bv.size(); ++i)
    if (bv[i] == 0.0)
      throw std::domain_error("div: zero denominator at index " + std::to_string(i));
  return ew_binary(
      a, b, "div", [](double x, double y) { return x / y; },
      [](double g, double x, double y, double, double* ga, double* gb) {
        if (ga) *ga += g / y;
        if (gb) *gb -= g * x / (y * y);
      });
}

Tensor div(const Tensor& a, double s) {
  if (s == 0.0) throw std::domain_error("div: zero scalar denominator");
  return mul(a, 1.0 / s);
}

Tensor pow_scalar(const Tensor& a, double p) {
  need_data(a, "pow_scalar");
  const auto& av = a.data();
  if (p != std::floor(p)) {
    for (std::size_t i = 0; i < av.size(); ++i)
      if (av[i] < 0.0)
        throw std::domain_error("pow_scalar: negative base " + std::to_string(av[i]) +
                                " at index " + std::to_string(i) +
                                " with fractional exponent " + std::to_string(p));
  }
  return ew_unary(
      a, "pow_scalar", [p](double x) { return pow_rounded(x, p); },
      [p](double x, double) {
        if (x == 0.0) return p == 1.0 ? 1.0 : 0.0;  // kink convention at 0
        return p * pow_rounded(x, p - 1.0);
      });
}

Tensor abs(const Tensor& a) {
  return ew_unary(
      a, "abs", [](double x) { return std::fabs(x); },
      [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Tensor log(const Tensor& a) {
  need_data(a, "log");
  const auto& av = a.data();
  for (std::size_t i = 0; i < av.size(); ++i)
    if (av[i] <= 0.0)
      throw std::domain_error("log: non-positive input " + std::to_string(av[i]) +
                              " at index " + std::to_string(i));
  return ew_unary(
      a, "log", [](double x) { return std::log(x); },
      [](double x, double) { return 1.0 / x; });
}

Tensor sigmoid(const Tensor& a) {
  return ew_unary(
      a, "sigmoid",
      [](double x) {
        // split on sign for numerical stability at large |x|
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor relu(const Tensor& a) {
  return ew_unary(
      a, "relu", [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor leaky_relu(const Tensor& a, double slope) {
  return ew_unary(
      a, "leaky_relu", [slope](double x) { return x > 0.0 ? x : slope * x; },
      [slope](double x, double) { return x > 0.0 ? 1.0 : slope; });
}

Tensor clamp(const Tensor& a, double lo, double hi) {
  if (!(lo <= hi))
    throw std::invalid_argument("clamp: lo " + std::to_string(lo) + " > hi " + std::to_string(hi));
  return ew_unary(
      a, "clamp", [lo, hi](double x) { return x < lo ? lo : (x > hi ? hi : x); },
      [lo, hi](double x, double) { return (x > lo && x < hi) ? 1.0 : 0.0; });
}

// ---- reductions ----

Tensor sum(const Tensor& a) {
  need_data(a, "sum");
  const auto& av = a.data();
  double s = 0.0;
  for (double v : av) s += v;
  auto pa = a.impl();
  return make_op({}, {s}, {pa}, [pa](TensorImpl& self) {
    auto& ga = grad_of(*pa);
    const double g = self.grad[0];
    for (double& v : ga) v += g;
  });
}

namespace {

// Generic axis reduction: returns output shape and a per-input-element map to
// the output flat index.
struct AxisPlan {
  std::vector<int> out_shape;
  std::vector<std::size_t> out_index;  // per input flat element
  std::size_t group = 1;               // elements reduced per output cell
};

AxisPlan plan_axes(const std::vector<int>& shape, const std::vector<int>& axes, const char* who) {
  const int nd = static_cast<int>(shape.size());
  std::vector<bool> reduce(nd, false);
  for (int ax : axes) {
    if (ax < 0 || ax >= nd)
      throw std::invalid_argument(std::string(who) + ": axis " + std::to_string(ax) +
                                  " out of range for " + shape_str(shape));
    if (reduce[ax])
      throw std::invalid_argument(std::string(who) + ": duplicate axis " + std::to_string(ax));
    reduce[ax] = true;
  }
  AxisPlan plan;
  plan.group = 1;
  for (int i = 0; i < nd; ++i) {
    if (reduce[i])
      plan.group *= static_cast<std::size_t>(shape[i]);
    else
      plan.out_shape.push_back(shape[i]);
  }
  const std::size_t n = shape_numel(shape);
  plan.out_index.resize(n);
  std::vector<int> idx(nd, 0);
  for (std::size_t flat = 0; flat < n; ++flat) {
    std::size_t o = 0;
    for (int i = 0; i < nd; ++i)
      if (!reduce[i]) o = o * static_cast<std::size_t>(shape[i]) + static_cast<std::size_t>(idx[i]);
    plan.out_index[flat] = o;
    for (int i = nd - 1; i >= 0; --i) {
      if (++idx[i] < shape[i]) break;
      idx[i] = 0;
    }
  }
  return plan;
}

}  // namespace

Tensor sum(const Tensor& a, const std::vector<int>& axes) {
  need_data(a, "sum");
  auto plan = plan_axes(a.shape(), axes, "sum");
  std::vector<double> out(shape_numel(plan.out_shape), 0.0);
  const auto& av = a.data();
  for (std::size_t i = 0; i < av.size(); ++i) out[plan.out_index[i]] += av[i];
  auto pa = a.impl();
  auto map = std::make_shared<std::vector<std::size_t>>(std::move(plan.out_index));
  return make_op(plan.out_shape, std::move(out), {pa}, [pa, map](TensorImpl& self) {
    auto& ga = grad_of(*pa);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += self.grad[(*map)[i]];
  });
}

Tensor mean(const Tensor& a) {
  need_data(a, "mean");
  if (a.size() == 0) throw std::invalid_argument("mean: empty reduction");
  return div(sum(a), static_cast<double>(a.size()));
}

Tensor mean(const Tensor& a, const std::vector<int>& axes) {
  need_data(a, "mean");
  auto plan = plan_axes(a.shape(), axes, "mean");
  if (plan.group == 0 || a.size() == 0) throw std::invalid_argument("mean: empty reduction");
  return div(sum(a, axes), static_cast<double>(plan.group));
}

// ---- shape / structure ----

Tensor reshape(const Tensor& a, std::vector<int> shape) {
  need_data(a, "reshape");
  check_shape(shape, "reshape");
  if (shape_numel(shape) != a.size())
    throw std::invalid_argument("reshape: cannot view " + shape_str(a.shape()) + " as " +
                                shape_str(shape));
  auto pa = a.impl();
  return make_op(std::move(shape), a.data(), {pa}, [pa](TensorImpl& self) {
    auto& ga = grad_of(*pa);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += self.grad[i];
  });
}

Tensor stack0(const std::vector<Tensor>& items) {
  if (items.empty()) throw std::invalid_argument("stack0: no tensors given");
  const auto& s0 = items[0].shape();
  for (const auto& t : items) {
    need_data(t, "stack0");
    if (t.requires_grad())
      throw std::invalid_argument("stack0: inputs must not require grad");
    if (t.shape() != s0)
      throw std::invalid_argument("stack0: shape mismatch " + shape_str(s0) + " vs " +
                                  shape_str(t.shape()));
  }
  std::vector<int> shape;
  shape.push_back(static_cast<int>(items.size()));
  shape.insert(shape.end(), s0.begin(), s0.end());
  std::vector<double> out;
  out.reserve(shape_numel(shape));
  for (const auto& t : items) out.insert(out.end(), t.data().begin(), t.data().end());
  return Tensor::from_data(std::move(shape), std::move(out), false);
}

// ---- neural ops ----

namespace {

inline int ceil_div_pos(int a, int b) {  // b > 0
  return a >= 0 ? (a + b - 1) / b : -((-a) / b);
}

struct ConvDims {
  int n, c, h, w, f, k, oh, ow, stride, pad;
};

ConvDims conv_check(const Tensor& input, const Tensor& kernel, const Tensor& bias, int stride,
                    int padding) {
  if (input.ndim() != 4)
    throw std::invalid_argument("conv2d: input must be [N,C,H,W], got " +
                                shape_str(input.shape()));
  if (kernel.ndim() != 4)
    throw std::invalid_argument("conv2d: kernel must be [F,C,k,k], got " +
                                shape_str(kernel.shape()));
  ConvDims d{};
  d.n = input.dim(0);
  d.c = input.dim(1);
  d.h = input.dim(2);
  d.w = input.dim(3);
  d.f = kernel.dim(0);
  d.k = kernel.dim(2);
  d.stride = stride;
  d.pad = padding;
  if (kernel.dim(3) != d.k)
    throw std::invalid_argument("conv2d: kernel must be square, got " + shape_str(kernel.shape()));
  if (d.k % 2 == 0)
    throw std::invalid_argument("conv2d: kernel size must be odd, got " + std::to_string(d.k));
  if (kernel.dim(1) != d.c)
    throw std::invalid_argument("conv2d: channel mismatch, input " + shape_str(input.shape()) +
                                " vs kernel " + shape_str(kernel.shape()));
  if (stride < 1) throw std::invalid_argument("conv2d: stride must be >= 1");
  if (padding < 0) throw std::invalid_argument("conv2d: padding must be >= 0");
  d.oh = (d.h + 2 * padding - d.k) / stride + 1;
  d.ow = (d.w + 2 * padding - d.k) / stride + 1;
  if (d.h + 2 * padding < d.k || d.w + 2 * padding < d.k)
    throw std::invalid_argument("conv2d: kernel " + std::to_string(d.k) +
                                " larger than padded input " + shape_str(input.shape()));
  if (bias.defined()) {
    if (bias.ndim() != 1 || bias.dim(0) != d.f)
      throw std::invalid_argument("conv2d: bias must be [" + std::to_string(d.f) + "], got " +
                                  shape_str(bias.shape()));
  }
  return d;
}

// Output-column range [ox0, ox1] such that ix = ox*stride + kx - pad stays
// inside [0, w). Shared by forward and both backward sweeps.
inline void ox_range(int kx, int w, int ow, int stride, int pad, int& ox0, int& ox1) {
  ox0 = std::max(0, ceil_div_pos(pad - kx, stride));
  const int hi = w - 1 + pad - kx;
  ox1 = hi < 0 ? -1 : std::min(ow - 1, hi / stride);
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias, int stride,
              int padding) {
  need_data(input, "conv2d");
  need_data(kernel, "conv2d");
  const ConvDims d = conv_check(input, kernel, bias, stride, padding);
  const auto& in = input.data();
  const auto& ker = kernel.data();
  std::vector<double> out(static_cast<std::size_t>(d.n) * d.f * d.oh * d.ow, 0.0);

  for (int n = 0; n < d.n; ++n) {
    for (int f = 0; f < d.f; ++f) {
      double* ob = out.data() + (static_cast<std::size_t>(n) * d.f + f) * d.oh * d.ow;
      if (bias.defined()) {
        const double bv = bias.data()[f];
        for (int i = 0; i < d.oh * d.ow; ++i) ob[i] = bv;
      }
      for (int c = 0; c < d.c; ++c) {
        const double* ib = in.data() + (static_cast<std::size_t>(n) * d.c + c) * d.h * d.w;
        const double* kb = ker.data() + (static_cast<std::size_t>(f) * d.c + c) * d.k * d.k;
        for (int ky = 0; ky < d.k; ++ky) {
          for (int kx = 0; kx < d.k; ++kx) {
            const double wv = kb[ky * d.k + kx];
            if (wv == 0.0) continue;
            int ox0, ox1;
            ox_range(kx, d.w, d.ow, d.stride, d.pad, ox0, ox1);
            for (int oy = 0; oy < d.oh; ++oy) {
              const int iy = oy * d.stride + ky - d.pad;
              if (iy < 0 || iy >= d.h) continue;
              const double* irow = ib + static_cast<std::size_t>(iy) * d.w + (kx - d.pad);
              double* orow = ob + static_cast<std::size_t>(oy) * d.ow;
              if (d.stride == 1) {
                for (int ox = ox0; ox <= ox1; ++ox) orow[ox] += wv * irow[ox];
              } else {
                for (int ox = ox0; ox <= ox1; ++ox) orow[ox] += wv * irow[ox * d.stride];
              }
            }
          }
        }
      }
    }
  }

  auto pi = input.impl();
  auto pk = kernel.impl();
  std::vector<std::shared_ptr<TensorImpl>> parents{pi, pk};
  std::shared_ptr<TensorImpl> pb;
  if (bias.defined()) {
    pb = bias.impl();
    parents.push_back(pb);
  }
  return make_op(
      {d.n, d.f, d.oh, d.ow}, std::move(out), std::move(parents),
      [pi, pk, pb, d](TensorImpl& self) {
        const auto& go = self.grad;
        const auto& in = pi->data;
        const auto& ker = pk->data;
        if (pi->requires_grad) {
          auto& gi = grad_of(*pi);
          for (int n = 0; n < d.n; ++n) {
            for (int f = 0; f < d.f; ++f) {
              const double* gob = go.data() + (static_cast<std::size_t>(n) * d.f + f) * d.oh * d.ow;
              for (int c = 0; c < d.c; ++c) {
                double* gib = gi.data() + (static_cast<std::size_t>(n) * d.c + c) * d.h * d.w;
                const double* kb = ker.data() + (static_cast<std::size_t>(f) * d.c + c) * d.k * d.k;
                for (int ky = 0; ky < d.k; ++ky) {
                  for (int kx = 0; kx < d.k; ++kx) {
                    const double wv = kb[ky * d.k + kx];
                    if (wv == 0.0) continue;
                    int ox0, ox1;
                    ox_range(kx, d.w, d.ow, d.stride, d.pad, ox0, ox1);
                    for (int oy = 0; oy < d.oh; ++oy) {
                      const int iy = oy * d.stride + ky - d.pad;
                      if (iy < 0 || iy >= d.h) continue;
                      double* girow = gib + static_cast<std::size_t>(iy) * d.w + (kx - d.pad);
                      const double* gorow = gob + static_cast<std::size_t>(oy) * d.ow;
                      if (d.stride == 1) {
                        for (int ox = ox0; ox <= ox1; ++ox) girow[ox] += wv * gorow[ox];
                      } else {
                        for (int ox = ox0; ox <= ox1; ++ox) girow[ox * d.stride] += wv * gorow[ox];
                      }
                    }
                  }
                }
              }
            }
          }
        }
        if (pk->requires_grad) {
          auto& gk = grad_of(*pk);
          for (int n = 0; n < d.n; ++n) {
            for (int f = 0; f < d.f; ++f) {
              const double* gob = go.data() + (static_cast<std::size_t>(n) * d.f + f) * d.oh * d.ow;
              for (int c = 0; c < d.c; ++c) {
                const double* ib = in.data() + (static_cast<std::size_t>(n) * d.c + c) * d.h * d.w;
                double* gkb = gk.data() + (static_cast<std::size_t>(f) * d.c + c) * d.k * d.k;
                for (int ky = 0; ky < d.k; ++ky) {
                  for (int kx = 0; kx < d.k; ++kx) {
                    int ox0, ox1;
                    ox_range(kx, d.w, d.ow, d.stride, d.pad, ox0, ox1);
                    double acc = 0.0;
                    for (int oy = 0; oy < d.oh; ++oy) {
                      const int iy = oy * d.stride + ky - d.pad;
                      if (iy < 0 || iy >= d.h) continue;
                      const double* irow = ib + static_cast<std::size_t>(iy) * d.w + (kx - d.pad);
                      const double* gorow = gob + static_cast<std::size_t>(oy) * d.ow;
                      if (d.stride == 1) {
                        for (int ox = ox0; ox <= ox1; ++ox) acc += gorow[ox] * irow[ox];
                      } else {
                        for (int ox = ox0; ox <= ox1; ++ox)
                          acc += gorow[ox] * irow[ox * d.stride];
                      }
                    }
                    gkb[ky * d.k + kx] += acc;
                  }
                }
              }
            }
          }
        }
        if (pb && pb->requires_grad) {
          auto& gb = grad_of(*pb);
          for (int n = 0; n < d.n; ++n)
            for (int f = 0; f < d.f; ++f) {
              const double* gob = go.data() + (static_cast<std::size_t>(n) * d.f + f) * d.oh * d.ow;
              double acc = 0.0;
              for (int i = 0; i < d.oh * d.ow; ++i) acc += gob[i];
              gb[f] += acc;
            }
        }
      });
}

Tensor conv2d(const Tensor& input, const Tensor& kernel, int stride, int padding) {
  return conv2d(input, kernel, Tensor(), stride, padding);
}

Tensor upsample_nearest(const Tensor& a, int factor) {
  need_data(a, "upsample_nearest");
  if (factor < 1) throw std::invalid_argument("upsample_nearest: factor must be >= 1");
  if (a.ndim() != 4)
    throw std::invalid_argument("upsample_nearest: input must be [N,C,H,W], got " +
                                shape_str(a.shape()));
  const int n = a.dim(0), c = a.dim(1), h = a.dim(2), w = a.dim(3);
  const int oh = h * factor, ow = w * factor;
  const auto& av = a.data();
  std::vector<double> out(static_cast<std::size_t>(n) * c * oh * ow);
  for (int i = 0; i < n * c; ++i) {
    const double* ib = av.data() + static_cast<std::size_t>(i) * h * w;
    double* ob = out.data() + static_cast<std::size_t>(i) * oh * ow;
    for (int y = 0; y < oh; ++y) {
      const double* irow = ib + static_cast<std::size_t>(y / factor) * w;
      double* orow = ob + static_cast<std::size_t>(y) * ow;
      for (int x = 0; x < ow; ++x) orow[x] = irow[x / factor];
    }
  }
  auto pa = a.impl();
  return make_op({n, c, oh, ow}, std::move(out), {pa}, [pa, n, c, h, w, factor](TensorImpl& self) {
    auto& ga = grad_of(*pa);
    const int oh = h * factor, ow = w * factor;
    for (int i = 0; i < n * c; ++i) {
      double* gib = ga.data() + static_cast<std::size_t>(i) * h * w;
      const double* gob = self.grad.data() + static_cast<std::size_t>(i) * oh * ow;
      for (int y = 0; y < oh; ++y) {
        double* girow = gib + static_cast<std::size_t>(y / factor) * w;
        const double* gorow = gob + static_cast<std::size_t>(y) * ow;
        for (int x = 0; x < ow; ++x) girow[x / factor] += gorow[x];
      }
    }
  });
}

}  // namespace camoseg
