#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "finloc/errors.hpp"
#include "finloc/geometry.hpp"
#include "finloc/numeric.hpp"

using namespace finloc;

TEST_CASE("box validity") {
  CHECK(is_valid_box({10, 10, 2, 3}));
  CHECK_FALSE(is_valid_box({10, 10, 0, 3}));
  CHECK_FALSE(is_valid_box({10, 10, 2, -1}));
  CHECK_FALSE(is_valid_box({std::numeric_limits<double>::quiet_NaN(), 0, 1, 1}));
  CHECK_FALSE(is_valid_box({0, std::numeric_limits<double>::infinity(), 1, 1}));
}

TEST_CASE("edge distances round-trip through the box form") {
  const BoxCxCyWh box{12.5, -3.0, 7.0, 9.0};
  const EdgeDistances d = to_edge_distances(box);
  CHECK(d.top == 4.5);
  CHECK(d.bottom == 4.5);
  CHECK(d.left == 3.5);
  CHECK(d.right == 3.5);
  CHECK(d.anchor_x == 12.5);
  CHECK(d.anchor_y == -3.0);

  const BoxCxCyWh back = from_edge_distances(d);
  CHECK(back.cx == box.cx);
  CHECK(back.cy == box.cy);
  CHECK(back.w == box.w);
  CHECK(back.h == box.h);
}

TEST_CASE("asymmetric distances move the center off the anchor") {
  // anchor at (0, 0), top edge 1 above, bottom 3 below -> center y = +1
  const EdgeDistances d{1, 3, 2, 2, 0, 0};
  const BoxCxCyWh box = from_edge_distances(d);
  CHECK(box.cy == 1.0);
  CHECK(box.cx == 0.0);
  CHECK(box.h == 4.0);
  CHECK(box.w == 4.0);
}

TEST_CASE("negative distance keeps a valid box while the edge crosses the anchor") {
  // top edge 1 below the anchor; height still positive
  const EdgeDistances d{-1, 3, 2, 2, 0, 0};
  const BoxCxCyWh box = from_edge_distances(d);
  CHECK(box.h == 2.0);
  CHECK(box.cy == 2.0);
}

TEST_CASE("collapsed sides are rejected") {
  CHECK_THROWS_AS(from_edge_distances({-2, 2, 1, 1, 0, 0}), DegenerateBoxError);
  CHECK_THROWS_AS(from_edge_distances({2, 2, 1, -1, 0, 0}), DegenerateBoxError);
  CHECK_THROWS_AS(from_edge_distances({-1, 1, 1, 1, 0, 0}), DegenerateBoxError);
}

TEST_CASE("iou hand values") {
  const BoxCxCyWh unit{0.5, 0.5, 1, 1};
  CHECK(iou(unit, unit) == 1.0);
  // quarter overlap of two unit squares: 0.25 / 1.75
  CHECK(iou(unit, {1.0, 1.0, 1, 1}) == doctest::Approx(1.0 / 7.0).epsilon(1e-14));
  // disjoint and exactly touching both give zero
  CHECK(iou(unit, {5, 5, 1, 1}) == 0.0);
  CHECK(iou(unit, {1.5, 0.5, 1, 1}) == 0.0);
}

TEST_CASE("giou hand values") {
  const BoxCxCyWh a{10, 10, 20, 20};
  const BoxCxCyWh b{12, 14, 18, 24};
  CHECK(giou(a, b) == doctest::Approx(0.5451190127996212).epsilon(1e-13));
  // containment: enclosing box equals the union, penalty vanishes
  const BoxCxCyWh inner{10, 10, 4, 4};
  CHECK(giou(a, inner) == iou(a, inner));
  // far apart: penalty dominates and the value goes negative
  CHECK(giou({0.5, 0.5, 1, 1}, {100, 0.5, 1, 1}) < -0.9);
}

TEST_CASE("iou and giou properties on random boxes") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 500; ++i) {
    const BoxCxCyWh a{uniform_unit(rng) * 50, uniform_unit(rng) * 50,
                      0.5 + uniform_unit(rng) * 20, 0.5 + uniform_unit(rng) * 20};
    const BoxCxCyWh b{uniform_unit(rng) * 50, uniform_unit(rng) * 50,
                      0.5 + uniform_unit(rng) * 20, 0.5 + uniform_unit(rng) * 20};
    const double i_ab = iou(a, b);
    const double g_ab = giou(a, b);
    CHECK(i_ab >= 0.0);
    CHECK(i_ab <= 1.0);
    CHECK(g_ab <= i_ab + 1e-15);
    CHECK(g_ab >= -1.0);
    CHECK(iou(b, a) == i_ab);
    CHECK(giou(b, a) == g_ab);
  }
}
