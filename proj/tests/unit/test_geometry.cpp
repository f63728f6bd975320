#include <cmath>
#include <stdexcept>
#include <vector>

#include <doctest.h>

#include "camoseg/geometry.hpp"
#include "helpers.hpp"

using namespace camoseg;
using testutil::gaussian_bump;
using testutil::polygon_area;
using testutil::polygon_perimeter;
using testutil::random_tensor;
using testutil::rotated_square;
using testutil::smooth_noise;

namespace {

// np.rot90-style exact quarter turns for the permutation checks.
Tensor rot90_oracle(const Tensor& m, int quarter_turns) {
  int h = m.dim(0), w = m.dim(1);
  Tensor cur = m;
  for (int t = 0; t < ((quarter_turns % 4) + 4) % 4; ++t) {
    std::vector<double> out(static_cast<std::size_t>(h) * w);
    // ccw: out[r][c] = in[c][w-1-r] with out shape (w, h)
    for (int r = 0; r < w; ++r)
      for (int c = 0; c < h; ++c)
        out[static_cast<std::size_t>(r) * h + c] =
            cur.data()[static_cast<std::size_t>(c) * w + (w - 1 - r)];
    cur = Tensor::from_data({w, h}, std::move(out));
    std::swap(h, w);
  }
  return cur;
}

double max_abs_diff_on(const Tensor& a, const Tensor& b, const Mask& valid) {
  double worst = 0.0;
  for (int r = 0; r < valid.h; ++r)
    for (int c = 0; c < valid.w; ++c)
      if (valid.get(r, c))
        worst = std::max(worst, std::fabs(a.at({r, c}) - b.at({r, c})));
  return worst;
}

double mean_abs_diff_on(const Tensor& a, const Tensor& b, const Mask& valid) {
  double s = 0.0;
  std::size_t n = 0;
  for (int r = 0; r < valid.h; ++r)
    for (int c = 0; c < valid.w; ++c)
      if (valid.get(r, c)) {
        s += std::fabs(a.at({r, c}) - b.at({r, c}));
        ++n;
      }
  return s / static_cast<double>(n);
}

}  // namespace

TEST_SUITE("geometry") {

TEST_CASE("angle zero is the identity") {
  Rng rng(3);
  Tensor m = random_tensor(rng, {9, 7}, 0.0, 1.0);
  RotatedView v = rotate(m, 0.0);
  CHECK(v.data.data() == m.data());
  CHECK(v.valid.all());

  RotatedView back = unrotate(v);
  CHECK(back.data.data() == m.data());
  CHECK(back.valid.all());
}

TEST_CASE("quarter turn on 2x2 is the documented permutation") {
  Tensor m = Tensor::from_data({2, 2}, {1, 2, 3, 4});
  RotatedView v = rotate(m, 90.0);
  CHECK(v.valid.all());
  CHECK(v.data.data() == std::vector<double>{2, 4, 1, 3});
}

TEST_CASE("90-degree multiples are exact permutations") {
  Rng rng(17);
  Tensor sq = random_tensor(rng, {7, 7}, 0.0, 1.0);
  for (int turns : {1, 2, 3}) {
    RotatedView v = rotate(sq, 90.0 * turns);
    CHECK(v.valid.all());
    CHECK(v.data.data() == rot90_oracle(sq, turns).data());
  }
  // negative and wrapped angles hit the same path
  CHECK(rotate(sq, -90.0).data.data() == rot90_oracle(sq, 3).data());
  CHECK(rotate(sq, 450.0).data.data() == rot90_oracle(sq, 1).data());

  // 180 degrees stays exact on non-square maps
  Tensor rect = random_tensor(rng, {5, 8}, 0.0, 1.0);
  RotatedView flip = rotate(rect, 180.0);
  CHECK(flip.valid.all());
  CHECK(flip.data.data() == rot90_oracle(rect, 2).data());

  Tensor chan = random_tensor(rng, {3, 4, 4}, 0.0, 1.0);
  RotatedView cv = rotate(chan, 90.0);
  CHECK(cv.valid.all());
}

TEST_CASE("exact quarter-turn round trip") {
  Rng rng(23);
  Tensor m = random_tensor(rng, {6, 6}, 0.0, 1.0);
  RotatedView back = unrotate(rotate(m, 90.0));
  CHECK(back.data.data() == m.data());
  CHECK(back.valid.all());
}

TEST_CASE("gaussian bump round trip stays within bilinear tolerance") {
  Tensor m = gaussian_bump(33, 33, 6.0);
  for (double angle : {37.0, -37.0, 25.0, 61.0}) {
    RotatedView back = unrotate(rotate(m, angle));
    CHECK(back.valid.any());
    CHECK(max_abs_diff_on(m, back.data, back.valid) < 0.02);
  }
}

TEST_CASE("band-limited round trip mean error stays small") {
  for (std::uint64_t seed : {1ULL, 2ULL}) {
    Tensor m = smooth_noise(48, 48, 1.5, seed);
    for (double angle : {17.0, -33.0, 71.0}) {
      RotatedView back = unrotate(rotate(m, angle));
      CHECK(mean_abs_diff_on(m, back.data, back.valid) <= 0.015);
    }
  }
}

TEST_CASE("validity depends only on angle and shape") {
  Rng rng(31);
  Tensor a = random_tensor(rng, {20, 14}, 0.0, 1.0);
  Tensor b = random_tensor(rng, {20, 14}, 0.0, 1.0);
  REQUIRE(a.data() != b.data());
  for (double angle : {13.0, -48.5, 90.0, 77.0}) {
    CHECK(rotate(a, angle).valid == rotate(b, angle).valid);
    CHECK(unrotate(rotate(a, angle)).valid == unrotate(rotate(b, angle)).valid);
  }
}

TEST_CASE("invalid pixels are zero and interior pixels survive") {
  Tensor m = Tensor::full({16, 16}, 0.7);
  RotatedView v = rotate(m, 45.0);
  CHECK_FALSE(v.valid.all());
  CHECK(v.valid.any());
  for (int r = 0; r < 16; ++r)
    for (int c = 0; c < 16; ++c)
      if (!v.valid.get(r, c)) CHECK(v.data.at({r, c}) == 0.0);
  // the center always survives rotation about itself
  CHECK(v.valid.get(8, 8));
}

TEST_CASE("round-trip footprint matches the polygon-intersection oracle") {
  const int n = 65;
  Tensor m = Tensor::full({n, n}, 1.0);
  for (double angle : {25.0, 40.0, -25.0}) {
    RotatedView back = unrotate(rotate(m, angle));
    const double measured = back.valid.fraction();
    CHECK(measured < 1.0);

    // Continuous-footprint area of square ∩ rotated square, in pixel units.
    const double half = n / 2.0;
    const auto inter =
        testutil::clip_convex(rotated_square(0.0, 0.0, half, angle * M_PI / 180.0),
                              rotated_square(0.0, 0.0, half, 0.0));
    const double oracle_frac = polygon_area(inter) / (static_cast<double>(n) * n);

    // The implementation is conservative: the 4-neighbor bilinear rule plus
    // the mask erosion on the way back discard up to ~2.5 px along the
    // footprint boundary.
    const double band = 2.5 * polygon_perimeter(inter) / (static_cast<double>(n) * n);
    CHECK(measured <= oracle_frac + 1e-9);
    CHECK(measured >= oracle_frac - band);
  }
}

TEST_CASE("rotate_mask agrees with rotate on all-valid input and erodes holes") {
  const int n = 24;
  Mask full = Mask::all_valid(n, n);
  Rng rng(5);
  Tensor m = random_tensor(rng, {n, n}, 0.0, 1.0);
  for (double angle : {0.0, 18.0, -52.0, 90.0}) {
    CHECK(rotate_mask(full, angle) == rotate(m, angle).valid);
  }

  Mask holed = Mask::all_valid(n, n);
  holed.set(12, 12, false);
  Mask r = rotate_mask(holed, 30.0);
  Mask rfull = rotate_mask(full, 30.0);
  CHECK(r.count() < rfull.count());
  // conservative: every pixel valid in the holed rotation is valid in the full one
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (r.get(i, j)) CHECK(rfull.get(i, j));
}

TEST_CASE("joint_valid is the pixelwise AND") {
  const int n = 64;
  Tensor m = Tensor::full({n, n}, 0.5);
  RotatedView a = unrotate(rotate(m, 10.0));
  RotatedView b = unrotate(rotate(m, 80.0));
  Mask j = joint_valid(a, b);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c)
      CHECK(j.get(r, c) == (a.valid.get(r, c) && b.valid.get(r, c)));
  // strictly smaller than either single footprint
  CHECK(j.count() < a.valid.count());
  CHECK(j.count() < b.valid.count());

  RotatedView small = unrotate(rotate(Tensor::full({8, 8}, 0.5), 10.0));
  CHECK_THROWS_AS(joint_valid(a, small), std::invalid_argument);
}

TEST_CASE("mask helpers") {
  Mask m = Mask::none(2, 3);
  CHECK(m.count() == 0);
  CHECK_FALSE(m.any());
  m.set(1, 2, true);
  CHECK(m.count() == 1);
  CHECK(m.fraction() == doctest::Approx(1.0 / 6.0));
  Tensor t = m.to_tensor();
  CHECK(t.shape() == std::vector<int>{2, 3});
  CHECK(t.at({1, 2}) == 1.0);
  CHECK(t.at({0, 0}) == 0.0);

  Mask all = Mask::all_valid(2, 3);
  CHECK(all.and_with(m) == m);
}

TEST_CASE("degenerate shapes are rejected") {
  CHECK_THROWS_AS(rotate(Tensor::zeros({1, 5}), 10.0), std::invalid_argument);
  CHECK_THROWS_AS(rotate(Tensor::scalar(1.0), 10.0), std::invalid_argument);
}

}  // TEST_SUITE
