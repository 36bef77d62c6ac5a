#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "losp/branching.hpp"
#include "losp/errors.hpp"
#include "losp/estimators.hpp"
#include "losp/walk.hpp"

using namespace losp;

TEST_CASE("pc: nearest-neighbour site lattice") {
  const auto rec = estimate_pc(PercolationModel::site, 1, 256, 2, 1, 60, 1);
  CHECK(rec.estimator == "pc");
  CHECK(rec.model == "site");
  CHECK(rec.ci_low <= rec.estimate);
  CHECK(rec.estimate <= rec.ci_high);
  CHECK(rec.estimate >= 0.57);
  CHECK(rec.estimate <= 0.62);
}

TEST_CASE("pc: omega = 32 window lands near the limit") {
  const auto rec = estimate_pc(PercolationModel::site, 32, 1024, 2, 1, 40, 2);
  const double scaled = 32.0 * rec.estimate;
  CHECK(scaled >= 0.35);
  CHECK(scaled <= 0.47);
}

TEST_CASE("pc: preconditions") {
  CHECK_THROWS_AS(estimate_pc(PercolationModel::site, 4, 8, 2, 1, 10, 1), PreconditionError);
  CHECK_THROWS_AS(estimate_pc(PercolationModel::bond, 2, 64, 3, 1, 10, 1), PreconditionError);
  CHECK_THROWS_AS(estimate_pc(PercolationModel::site, 2, 64, 2, 1, 1, 1), PreconditionError);
}

TEST_CASE("pc: thresholds reproduce the crossing frequency") {
  const auto t = crossing_thresholds(PercolationModel::site, 2, 32, 2, 1, 200, 3);
  for (double p : {0.25, 0.3, 0.35}) {
    const auto freq = crossing_frequency(PercolationModel::site, 2, 32, 2, 1, p, 200, 3);
    const auto below = std::count_if(t.begin(), t.end(), [&](double x) { return x <= p; });
    CHECK(static_cast<double>(below) / 200.0 == doctest::Approx(freq.mean));
  }
}

TEST_CASE("property: crossing frequency is monotone in p") {
  double prev = 0.0;
  for (double p = 0.1; p <= 0.5; p += 0.05) {
    const auto freq = crossing_frequency(PercolationModel::site, 2, 32, 2, 1, p, 150, 4);
    CHECK(freq.mean >= prev);
    prev = freq.mean;
  }
  CHECK(prev == 1.0);
}

TEST_CASE("pc: bond thresholds are monotone too") {
  const auto t = crossing_thresholds(PercolationModel::bond, 2, 32, 2, 1, 60, 5);
  for (double p : {0.1, 0.15, 0.2}) {
    const auto freq = crossing_frequency(PercolationModel::bond, 2, 32, 2, 1, p, 60, 5);
    const auto below = std::count_if(t.begin(), t.end(), [&](double x) { return x <= p; });
    CHECK(static_cast<double>(below) / 60.0 == doctest::Approx(freq.mean));
  }
}

TEST_CASE("pc: higher dimension with r = 2") {
  const auto rec = estimate_pc(PercolationModel::site, 2, 16, 3, 2, 20, 6);
  CHECK(rec.model == "ddim");
  CHECK(rec.estimate > 0.0);
  CHECK(rec.estimate < 0.3);
}

TEST_CASE("theta: examples") {
  const auto k1 = estimate_theta(8, 1.0, 1, 100, 1);
  CHECK(k1.raw.estimate == doctest::Approx(1.0 / 8.0));
  CHECK(k1.normalized.mean == doctest::Approx(1.0));
  const auto sub = estimate_theta(16, 0.2, 500, 1000, 2);
  CHECK(sub.raw.estimate == 0.0);
  CHECK_THROWS_AS(estimate_theta(8, 1.0, 100, 10, 1, 50), PreconditionError);
  CHECK_THROWS_AS(estimate_theta(8, 9.0, 100, 10, 1), PreconditionError);
}

TEST_CASE("theta: normalized value tracks phi") {
  const auto est = estimate_theta(32, 1.0, 500, 1500, 3);
  CHECK(std::abs(est.normalized.mean - phi(1.0)) <= 3.0 * est.normalized.std_error + 0.03);
}

TEST_CASE("giant: site fraction and record fields") {
  const auto rec = estimate_giant(PercolationModel::site, 16, 512, 1.0, 6, 4);
  CHECK(rec.estimator == "giant");
  CHECK(rec.lambda == 1.0);
  CHECK(rec.p == doctest::Approx(1.0 / 16.0));
  CHECK(std::abs(rec.estimate - phi(1.0)) < 0.06);
}

TEST_CASE("restricted walk survival is close to the giant fraction at n = C omega") {
  WalkCaps caps;
  caps.max_population = 5000;
  const auto rho = restricted_survival(1.0, 4.0, 1000, 9, caps);
  const auto giant = estimate_giant(PercolationModel::site, 32, 128, 1.0, 20, 9);
  CHECK(std::abs(rho.mean - giant.estimate) <= 0.1);
}

TEST_CASE("property: results do not depend on the thread count") {
  const auto a = estimate_pc(PercolationModel::site, 2, 32, 2, 1, 30, 7, 1);
  const auto b = estimate_pc(PercolationModel::site, 2, 32, 2, 1, 30, 7, 4);
  CHECK(a.estimate == b.estimate);
  CHECK(a.ci_low == b.ci_low);
  const auto ta = estimate_theta(8, 1.0, 200, 500, 8, kDefaultWindow, 1);
  const auto tb = estimate_theta(8, 1.0, 200, 500, 8, kDefaultWindow, 3);
  CHECK(ta.raw.estimate == tb.raw.estimate);
}
