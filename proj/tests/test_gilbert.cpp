#include <doctest.h>

#include <cmath>
#include <limits>

#include "losp/errors.hpp"
#include "losp/gilbert.hpp"
#include "losp/random.hpp"

using namespace losp;

TEST_CASE("shapes: measure and membership") {
  CHECK(shape_measure(shape::Segment{}) == 2.0);
  CHECK(shape_measure(shape::Cube{3}) == 8.0);
  CHECK(shape_measure(shape::FacePair{}) == 8.0);
  CHECK(shape_measure(shape::Cross2D{0.1}) == doctest::Approx(0.8 - 0.04));
  CHECK(shape_measure(shape::SquareAnnulus{0.1}) == doctest::Approx(4.0 - 4.0 * 0.81));

  const double in[2] = {0.95, -0.05};
  const double out[2] = {0.5, 0.5};
  CHECK(shape_contains(shape::Cross2D{0.1}, in, 0));
  CHECK_FALSE(shape_contains(shape::Cross2D{0.1}, out, 0));
  CHECK(shape_contains(shape::Cube{2}, out, 0));
  CHECK_FALSE(shape_contains(shape::SquareAnnulus{0.1}, out, 0));
  CHECK(shape_contains(shape::SquareAnnulus{0.1}, in, 0));

  // Face pair: only neighbouring levels connect.
  CHECK(shape_contains(shape::FacePair{}, out, 1));
  CHECK(shape_contains(shape::FacePair{}, out, -1));
  CHECK_FALSE(shape_contains(shape::FacePair{}, out, 0));
  CHECK_FALSE(shape_contains(shape::FacePair{}, out, 2));
}

TEST_CASE("property: shapes are symmetric") {
  SplitMix64 rng(1);
  const GilbertShape shapes[] = {shape::Segment{}, shape::Cube{2}, shape::Cube{3}, shape::Cross2D{0.2},
                                 shape::SquareAnnulus{0.3}, shape::FacePair{}};
  for (const auto& s : shapes) {
    const int k = continuous_dim(s);
    for (int i = 0; i < 2000; ++i) {
      double v[kMaxGilbertDim], w[kMaxGilbertDim];
      for (int a = 0; a < k; ++a) {
        v[a] = 2.4 * rng.uniform() - 1.2;
        w[a] = -v[a];
      }
      const int level = has_levels(s) ? static_cast<int>(rng() % 5) - 2 : 0;
      REQUIRE(shape_contains(s, v, level) == shape_contains(s, w, -level));
    }
  }
}

TEST_CASE("validation") {
  CHECK_THROWS_AS(validate_shape(shape::Cube{5}), PreconditionError);
  CHECK_THROWS_AS(validate_shape(shape::Cross2D{1.0}), PreconditionError);
  TruncationPolicy t;
  t.box_half_width = 5.0;
  CHECK_THROWS_AS(t.validate(), PreconditionError);
  t = {};
  t.max_component = 10;
  CHECK_THROWS_AS(t.validate(), PreconditionError);
  CHECK_THROWS_AS(gilbert_component_size(0.0, shape::Segment{}, {}, 1), PreconditionError);
  CHECK_THROWS_AS(lambda_dr(3, 3, 0.01, 1), PreconditionError);
  CHECK_THROWS_AS(lambda_dr(1, 1, 0.01, 1), PreconditionError);
}

TEST_CASE("component size: vanishing intensity gives the singleton") {
  std::uint64_t singletons = 0;
  for (std::uint64_t s = 0; s < 10'000; ++s)
    singletons += gilbert_component_size(1e-6, shape::Cube{2}, {}, s).size == 1 ? 1 : 0;
  CHECK(singletons >= 9'990);
}

TEST_CASE("component size: escapes are rare just below the square threshold") {
  const auto est = f_estimate(0.17, shape::Cube{2}, {}, 20'000, 2);
  CHECK(est.reliable);
  CHECK(est.escape_rate < kMaxEscapeRate);
}

TEST_CASE("component size: escape handling") {
  TruncationPolicy t;
  t.box_half_width = 10.0;
  t.max_component = 1000;
  const auto censored = gilbert_component_size(2.0, shape::Cube{2}, t, 3);
  CHECK(censored.escaped);
  t.escape_action = EscapeAction::count_as_infinite;
  const auto infinite = gilbert_component_size(2.0, shape::Cube{2}, t, 3);
  CHECK(infinite.escaped);
  CHECK(infinite.size == std::numeric_limits<std::uint64_t>::max());
  const auto est = f_estimate(2.0, shape::Cube{2}, t, 50, 3);
  CHECK(std::isinf(est.value.mean));
  CHECK_FALSE(est.reliable);
}

TEST_CASE("segment: mean cluster size has the closed form 2(e^lambda - 1)") {
  const auto a = f_estimate(0.5, shape::Segment{}, {}, 200'000, 4);
  CHECK(std::abs(a.value.z_score(2.0 * std::expm1(0.5))) < 3.5);
  const auto b = f_estimate(std::log(1.5), shape::Segment{}, {}, 200'000, 5);
  CHECK(std::abs(b.value.z_score(1.0)) < 3.5);
}

TEST_CASE("square: f_2 crosses 1 near 0.1776") {
  const auto est = f_estimate(0.177635, shape::Cube{2}, {}, 100'000, 6);
  CHECK(est.reliable);
  CHECK(std::abs(est.value.mean - 1.0) < 0.02);
}

TEST_CASE("square at half intensity beats the segment") {
  for (double lambda : {0.3, 0.5}) {
    const auto f2 = f_estimate(lambda / 2.0, shape::Cube{2}, {}, 50'000, 7);
    const auto f1 = f_estimate(lambda, shape::Segment{}, {}, 50'000, 8);
    CHECK(f2.value.mean > f1.value.mean + 3.0 * combined_stderr(f2.value, f1.value));
  }
}

TEST_CASE("property: f increases with lambda") {
  double prev = 0.0;
  for (double lambda : {0.05, 0.1, 0.13, 0.16}) {
    const auto est = f_estimate(lambda, shape::Cube{2}, {}, 20'000, 9);
    CHECK(est.value.mean >= prev);
    prev = est.value.mean;
  }
}

TEST_CASE("property: a wider box does not change unescaped components") {
  TruncationPolicy narrow;
  narrow.box_half_width = 15.0;
  TruncationPolicy wide;
  wide.box_half_width = 60.0;
  for (std::uint64_t s = 0; s < 2000; ++s) {
    const auto a = gilbert_component_size(0.12, shape::Cube{2}, narrow, s);
    if (a.escaped) continue;
    REQUIRE(gilbert_component_size(0.12, shape::Cube{2}, wide, s).size == a.size);
  }
}

TEST_CASE("face pair: small components and level cap") {
  TruncationPolicy t;
  t.levels = 2;
  // With levels -2..2 any neighbour of the origin is already on the shell.
  std::uint64_t escaped = 0;
  for (std::uint64_t s = 0; s < 500; ++s) {
    const auto draw = gilbert_component_size(0.5, shape::FacePair{}, t, s);
    if (draw.size > 1) {
      CHECK(draw.escaped);
      ++escaped;
    }
  }
  CHECK(escaped > 0);
}

TEST_CASE("critical_root: one-dimensional cube") {
  RootRequest req;
  req.family = RootFamily::cube_d;
  req.d = 1;
  req.tol = 0.01;
  const auto res = critical_root(req);
  CHECK(res.ci_low <= std::log(1.5) + 0.01);
  CHECK(res.ci_high >= std::log(1.5) - 0.01);
  CHECK(std::abs(res.root - std::log(1.5)) < 0.015);
}

TEST_CASE("critical_root: budget error") {
  RootRequest req;
  req.budget = 5'000;
  req.initial_reps = 1'000;
  CHECK_THROWS_AS(critical_root(req), BudgetError);
  req = {};
  req.tol = 1e-7;
  CHECK_THROWS_AS(critical_root(req), PreconditionError);
}

TEST_CASE("lambda_dr: closed form for r = 1") {
  const auto a = lambda_dr(2, 1, 0.01, 1);
  CHECK(a.closed_form);
  CHECK(a.value == doctest::Approx(std::log(1.5)));
  CHECK(lambda_dr(3, 1, 0.01, 1).value == doctest::Approx(std::log(1.25)));
}

TEST_CASE("square crossing: coupled in lambda") {
  for (std::uint64_t s = 0; s < 30; ++s) {
    const bool lo = square_gilbert_crosses(0.8, 2.0, 12.0, s);
    const bool hi = square_gilbert_crosses(1.6, 2.0, 12.0, s);
    CHECK((!lo || hi));
  }
  CHECK(square_gilbert_crosses(2.0, 2.0, 12.0, 1));
}
