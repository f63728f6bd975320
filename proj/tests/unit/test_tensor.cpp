#include <cmath>
#include <stdexcept>
#include <vector>

#include <doctest.h>

#include "camoseg/tensor.hpp"
#include "helpers.hpp"

using namespace camoseg;
using testutil::fd_max_rel_err;
using testutil::random_tensor;
using testutil::random_values;

TEST_SUITE("tensor") {

TEST_CASE("construction and accessors") {
  Tensor z = Tensor::zeros({2, 3});
  CHECK(z.size() == 6);
  CHECK(z.ndim() == 2);
  CHECK(z.dim(1) == 3);
  for (double v : z.data()) CHECK(v == 0.0);

  Tensor f = Tensor::full({2}, 1.5);
  CHECK(f.data()[0] == 1.5);
  CHECK(f.data()[1] == 1.5);

  Tensor s = Tensor::scalar(4.25);
  CHECK(s.item() == 4.25);

  Tensor m = Tensor::from_data({2, 2}, {1, 2, 3, 4});
  CHECK(m.at({0, 1}) == 2.0);
  CHECK(m.at({1, 0}) == 3.0);

  CHECK_THROWS_AS(Tensor::from_data({2, 2}, {1, 2, 3}), std::invalid_argument);
  CHECK_THROWS_AS(m.item(), std::logic_error);
}

TEST_CASE("elementwise forward values") {
  CHECK(sigmoid(Tensor::scalar(0.0)).item() == 0.5);

  Tensor a = abs(Tensor::from_data({2}, {-1.0, 2.0}));
  CHECK(a.data()[0] == 1.0);
  CHECK(a.data()[1] == 2.0);

  // exponent 1/4 routes through two exact square roots
  CHECK(pow_scalar(Tensor::from_data({1}, {0.0625}), 0.25).item() == 0.5);
  CHECK(pow_rounded(0.0625, 0.25) == 0.5);
  CHECK(pow_rounded(0.25, 0.5) == 0.5);

  Tensor r = relu(Tensor::from_data({3}, {-2.0, 0.0, 3.0}));
  CHECK(r.data()[0] == 0.0);
  CHECK(r.data()[2] == 3.0);

  Tensor l = leaky_relu(Tensor::from_data({2}, {-2.0, 3.0}), 0.1);
  CHECK(l.data()[0] == -0.2);
  CHECK(l.data()[1] == 3.0);

  Tensor c = clamp(Tensor::from_data({3}, {-0.5, 0.25, 1.5}), 0.0, 1.0);
  CHECK(c.data()[0] == 0.0);
  CHECK(c.data()[1] == 0.25);
  CHECK(c.data()[2] == 1.0);

  CHECK_THROWS_AS(add(Tensor::zeros({2}), Tensor::zeros({3})), std::invalid_argument);
}

TEST_CASE("reductions") {
  CHECK(mean(Tensor::from_data({2}, {0.0, 1.0})).item() == 0.5);
  CHECK(sum(Tensor::full({2, 2}, 1.0)).item() == 4.0);

  Tensor m = Tensor::from_data({2, 3}, {1, 2, 3, 4, 5, 6});
  Tensor rows = sum(m, {1});
  CHECK(rows.shape() == std::vector<int>{2});
  CHECK(rows.data()[0] == 6.0);
  CHECK(rows.data()[1] == 15.0);
  Tensor cols = mean(m, {0});
  CHECK(cols.data()[0] == 2.5);
  CHECK(cols.data()[2] == 4.5);

  CHECK_THROWS_WITH_AS(mean(Tensor::zeros({0})), "mean: empty reduction",
                       std::invalid_argument);
  CHECK_THROWS_AS(sum(m, {2}), std::invalid_argument);
}

TEST_CASE("conv2d forward values") {
  // all-ones 3x3 kernel over all-ones 3x3 input, no padding: one output = 9
  Tensor img = Tensor::full({1, 1, 3, 3}, 1.0);
  Tensor ker = Tensor::full({1, 1, 3, 3}, 1.0);
  Tensor out = conv2d(img, ker, 1, 0);
  CHECK(out.shape() == std::vector<int>{1, 1, 1, 1});
  CHECK(out.item() == 9.0);

  // identity kernel with padding preserves the input exactly
  Rng rng(7);
  Tensor x = random_tensor(rng, {1, 1, 5, 5}, -1.0, 1.0);
  std::vector<double> id(9, 0.0);
  id[4] = 1.0;
  Tensor idk = Tensor::from_data({1, 1, 3, 3}, id);
  Tensor y = conv2d(x, idk, 1, 1);
  CHECK(y.shape() == x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(y.data()[i] == x.data()[i]);

  // stride-2 output geometry
  Tensor s2 = conv2d(Tensor::zeros({1, 1, 8, 8}), idk, 2, 1);
  CHECK(s2.shape() == std::vector<int>{1, 1, 4, 4});

  CHECK_THROWS_AS(conv2d(Tensor::zeros({1, 2, 4, 4}), Tensor::zeros({1, 3, 3, 3}), 1, 1),
                  std::invalid_argument);
}

TEST_CASE("upsample_nearest forward") {
  Tensor x = Tensor::from_data({1, 1, 2, 2}, {1, 2, 3, 4});
  Tensor y = upsample_nearest(x, 2);
  CHECK(y.shape() == std::vector<int>{1, 1, 4, 4});
  const std::vector<double> want = {1, 1, 2, 2, 1, 1, 2, 2, 3, 3, 4, 4, 3, 3, 4, 4};
  CHECK(y.data() == want);

  Tensor same = upsample_nearest(x, 1);
  CHECK(same.data() == x.data());

  CHECK_THROWS_AS(upsample_nearest(x, 0), std::invalid_argument);
}

TEST_CASE("backward basics") {
  Tensor x = Tensor::from_data({3}, {1, 2, 3}, true);
  sum(x).backward();
  CHECK(x.grad() == std::vector<double>{1, 1, 1});

  Tensor x2 = Tensor::from_data({1}, {2.0}, true);
  sum(mul(x2, x2)).backward();
  CHECK(x2.grad()[0] == 4.0);

  Tensor x3 = Tensor::from_data({2}, {-1.0, 2.0}, true);
  sum(abs(x3)).backward();
  CHECK(x3.grad() == std::vector<double>{-1.0, 1.0});
}

TEST_CASE("backward error paths") {
  Tensor x = Tensor::from_data({2}, {1, 2}, true);
  Tensor loss = sum(x);
  loss.backward();
  CHECK_THROWS_AS(loss.backward(), std::logic_error);

  Tensor y = mul(Tensor::from_data({2}, {1, 2}, true), 2.0);
  CHECK_THROWS_AS(y.backward(), std::invalid_argument);  // non-scalar

  Tensor plain = Tensor::from_data({1}, {1.0});
  CHECK_THROWS_AS(sum(plain).backward(), std::invalid_argument);  // no grad anywhere
}

TEST_CASE("detached values get no gradient") {
  Tensor x = Tensor::from_data({3}, {0.2, 0.5, 0.9}, true);
  Tensor d = x.detach();
  CHECK_FALSE(d.requires_grad());
  sum(mul(x, d)).backward();
  CHECK(x.grad() == d.data());
  CHECK_FALSE(d.has_grad());
}

TEST_CASE("stack0 assembles plain data and rejects graph tensors") {
  Tensor a = Tensor::from_data({2}, {1, 2});
  Tensor b = Tensor::from_data({2}, {3, 4});
  Tensor s = stack0({a, b});
  CHECK(s.shape() == std::vector<int>{2, 2});
  CHECK(s.data() == std::vector<double>{1, 2, 3, 4});

  Tensor g = Tensor::from_data({2}, {1, 2}, true);
  CHECK_THROWS_AS(stack0({g, b}), std::invalid_argument);
}

TEST_CASE("upsample backward counts replicated cells") {
  Tensor x = Tensor::from_data({1, 1, 2, 2}, {1, 2, 3, 4}, true);
  sum(upsample_nearest(x, 2)).backward();
  for (double g : x.grad()) CHECK(g == 4.0);
}

TEST_CASE("conv2d kernel gradient vs finite differences") {
  Rng rng(11);
  Tensor input = random_tensor(rng, {1, 2, 5, 5}, -1.0, 1.0);
  std::vector<double> k0 = random_values(rng, 3 * 2 * 3 * 3, -0.5, 0.5);
  std::vector<double> b0 = random_values(rng, 3, -0.5, 0.5);
  std::vector<double> coeff = random_values(rng, 1 * 3 * 5 * 5, -1.0, 1.0);
  Tensor cf = Tensor::from_data({1, 3, 5, 5}, coeff);

  auto loss_at = [&](const std::vector<double>& kv, const std::vector<double>& bv, bool grad,
                     Tensor* kout, Tensor* bout) {
    Tensor k = Tensor::from_data({3, 2, 3, 3}, kv, grad);
    Tensor b = Tensor::from_data({3}, bv, grad);
    if (kout) *kout = k;
    if (bout) *bout = b;
    return sum(mul(conv2d(input, k, b, 1, 1), cf));
  };

  Tensor k, b;
  loss_at(k0, b0, true, &k, &b).backward();

  auto f_k = [&](const std::vector<double>& kv) {
    return loss_at(kv, b0, false, nullptr, nullptr).item();
  };
  CHECK(fd_max_rel_err(f_k, k0, k.grad()) < 1e-4);

  auto f_b = [&](const std::vector<double>& bv) {
    return loss_at(k0, bv, false, nullptr, nullptr).item();
  };
  CHECK(fd_max_rel_err(f_b, b0, b.grad()) < 1e-4);
}

// Every differentiable op, checked against central differences on randomized
// inputs. Input ranges keep a safe margin from the non-smooth points (abs and
// the rectifiers at 0, clamp at its edges) so the difference quotient sees a
// single smooth branch.
TEST_CASE("per-op gradients vs finite differences over 100 seeds") {
  struct OpCase {
    const char* name;
    double lo, hi;
    std::function<Tensor(const Tensor&)> apply;
  };
  const std::vector<OpCase> cases = {
      {"add_scalar", -2.0, 2.0, [](const Tensor& x) { return add(x, 0.7); }},
      {"sub_scalar", -2.0, 2.0, [](const Tensor& x) { return sub(x, 0.7); }},
      {"rsub_scalar", -2.0, 2.0, [](const Tensor& x) { return sub(0.7, x); }},
      {"mul_scalar", -2.0, 2.0, [](const Tensor& x) { return mul(x, -1.3); }},
      {"div_scalar", -2.0, 2.0, [](const Tensor& x) { return div(x, 1.7); }},
      {"pow_2.3", 0.5, 2.0, [](const Tensor& x) { return pow_scalar(x, 2.3); }},
      {"pow_0.25", 0.5, 2.0, [](const Tensor& x) { return pow_scalar(x, 0.25); }},
      {"abs", 0.1, 2.0, [](const Tensor& x) { return abs(x); }},
      {"abs_neg", -2.0, -0.1, [](const Tensor& x) { return abs(x); }},
      {"log", 0.5, 2.0, [](const Tensor& x) { return log(x); }},
      {"sigmoid", -3.0, 3.0, [](const Tensor& x) { return sigmoid(x); }},
      {"relu_pos", 0.1, 2.0, [](const Tensor& x) { return relu(x); }},
      {"leaky", 0.1, 2.0, [](const Tensor& x) { return leaky_relu(x, 0.1); }},
      {"leaky_neg", -2.0, -0.1, [](const Tensor& x) { return leaky_relu(x, 0.1); }},
      {"clamp_inside", 0.2, 0.8, [](const Tensor& x) { return clamp(x, 0.0, 1.0); }},
      {"mean_all", -2.0, 2.0, [](const Tensor& x) { return reshape(mean(x), {1}); }},
      {"mean_axis0", -2.0, 2.0, [](const Tensor& x) { return mean(x, {0}); }},
      {"sum_axis1", -2.0, 2.0, [](const Tensor& x) { return sum(x, {1}); }},
      {"reshape", -2.0, 2.0, [](const Tensor& x) { return reshape(x, {3, 2}); }},
  };

  for (const auto& c : cases) {
    CAPTURE(c.name);
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      Rng rng(mix_seed(991, seed));
      const std::vector<double> x0 = random_values(rng, 6, c.lo, c.hi);
      const std::vector<double> cf = random_values(rng, 6, -1.0, 1.0);

      auto run = [&](const std::vector<double>& xv, bool grad, Tensor* xout) {
        Tensor x = Tensor::from_data({2, 3}, xv, grad);
        if (xout) *xout = x;
        Tensor y = c.apply(x);
        std::size_t n = y.size();
        Tensor cfit = Tensor::from_data(y.shape(), std::vector<double>(cf.begin(),
                                                                       cf.begin() + n));
        return sum(mul(y, cfit));
      };
      Tensor x;
      run(x0, true, &x).backward();
      auto f = [&](const std::vector<double>& xv) { return run(xv, false, nullptr).item(); };
      worst = std::max(worst, fd_max_rel_err(f, x0, x.grad()));
    }
    CHECK(worst < 1e-3);
  }
}

TEST_CASE("binary op gradients vs finite differences") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(mix_seed(992, seed));
    const std::vector<double> a0 = random_values(rng, 6, 0.5, 2.0);
    const std::vector<double> b0 = random_values(rng, 6, 0.5, 2.0);
    const std::vector<double> cf = random_values(rng, 6, -1.0, 1.0);
    const int which = static_cast<int>(seed % 4);

    auto run = [&](const std::vector<double>& av, const std::vector<double>& bv, bool grad,
                   Tensor* aout, Tensor* bout) {
      Tensor a = Tensor::from_data({2, 3}, av, grad);
      Tensor b = Tensor::from_data({2, 3}, bv, grad);
      if (aout) *aout = a;
      if (bout) *bout = b;
      Tensor y;
      switch (which) {
        case 0: y = add(a, b); break;
        case 1: y = sub(a, b); break;
        case 2: y = mul(a, b); break;
        default: y = div(a, b); break;
      }
      return sum(mul(y, Tensor::from_data({2, 3}, cf)));
    };

    Tensor a, b;
    run(a0, b0, true, &a, &b).backward();
    auto fa = [&](const std::vector<double>& av) { return run(av, b0, false, nullptr, nullptr).item(); };
    auto fb = [&](const std::vector<double>& bv) { return run(a0, bv, false, nullptr, nullptr).item(); };
    CHECK(fd_max_rel_err(fa, a0, a.grad()) < 1e-3);
    CHECK(fd_max_rel_err(fb, b0, b.grad()) < 1e-3);
  }
}

TEST_CASE("conv2d and upsample input gradients vs finite differences") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(mix_seed(993, seed));
    const std::vector<double> x0 = random_values(rng, 2 * 4 * 4, -1.0, 1.0);
    const std::vector<double> kv = random_values(rng, 2 * 2 * 3 * 3, -0.5, 0.5);
    const int stride = (seed % 2 == 0) ? 1 : 2;
    // stride 1 keeps 4x4 and is then upsampled to 8x8; stride 2 halves to 2x2
    const std::size_t out_n = (stride == 1) ? 2 * 8 * 8 : 2 * 2 * 2;
    const std::vector<double> cf = random_values(rng, out_n, -1.0, 1.0);

    auto run = [&](const std::vector<double>& xv, bool grad, Tensor* xout) {
      Tensor x = Tensor::from_data({1, 2, 4, 4}, xv, grad);
      if (xout) *xout = x;
      Tensor y = conv2d(x, Tensor::from_data({2, 2, 3, 3}, kv), stride, 1);
      if (stride == 1) y = upsample_nearest(y, 2);
      Tensor cfit = Tensor::from_data(y.shape(),
                                      std::vector<double>(cf.begin(), cf.begin() + y.size()));
      return sum(mul(y, cfit));
    };

    Tensor x;
    run(x0, true, &x).backward();
    auto f = [&](const std::vector<double>& xv) { return run(xv, false, nullptr).item(); };
    CHECK(fd_max_rel_err(f, x0, x.grad()) < 1e-3);
  }
}

TEST_CASE("forward is bitwise deterministic") {
  Rng rng(5);
  Tensor x = random_tensor(rng, {1, 3, 8, 8}, 0.0, 1.0);
  Rng r2(5);
  Tensor y = random_tensor(r2, {1, 3, 8, 8}, 0.0, 1.0);
  CHECK(x.data() == y.data());
  Tensor k = Tensor::full({4, 3, 3, 3}, 0.1);
  CHECK(conv2d(x, k, 1, 1).data() == conv2d(y, k, 1, 1).data());
}

}  // TEST_SUITE
