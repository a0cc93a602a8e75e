#include <doctest.h>

#include <stdexcept>

#include "fedsense/metrics.hpp"
#include "fedsense/rng.hpp"

using namespace fedsense;

namespace {

AccuracyTrace trace_of(const std::vector<double>& values) {
  AccuracyTrace t;
  for (double v : values) t.append(v);
  return t;
}

}  // namespace

TEST_CASE("running best follows the max") {
  AccuracyTrace t;
  t.append(0.5);
  t.append(0.4);
  CHECK(t.best(1) == doctest::Approx(0.5));
  CHECK(t.best(2) == doctest::Approx(0.5));  // max is monotone

  AccuracyTrace seq = trace_of({0.5, 0.6, 0.55, 0.7});
  CHECK(seq.best(1) == doctest::Approx(0.5));
  CHECK(seq.best(2) == doctest::Approx(0.6));
  CHECK(seq.best(3) == doctest::Approx(0.6));
  CHECK(seq.best(4) == doctest::Approx(0.7));
}

TEST_CASE("first append sets the best") {
  AccuracyTrace t;
  t.append(0.5);
  CHECK(t.best(1) == doctest::Approx(0.5));
}

TEST_CASE("append rejects out-of-range accuracies") {
  AccuracyTrace t;
  CHECK_THROWS_AS(t.append(-0.1), std::out_of_range);
  CHECK_THROWS_AS(t.append(1.1), std::out_of_range);
}

TEST_CASE("best is non-decreasing for random traces") {
  Rng rng(31);
  for (int rep = 0; rep < 20; ++rep) {
    AccuracyTrace t;
    for (int i = 0; i < 200; ++i) t.append(rng.uniform01());
    for (int round = 2; round <= t.size(); ++round) {
      REQUIRE(t.best(round) >= t.best(round - 1));
      REQUIRE(t.best(round) >= t.average(round));
    }
  }
}

TEST_CASE("constant trace converges at round 1") {
  ConvergenceConfig cfg;  // epsilon 0.01, window 100
  auto t = trace_of(std::vector<double>(101, 0.7));
  auto converged = check_convergence(t, cfg);
  REQUIRE(converged.has_value());
  CHECK(*converged == 1);
}

TEST_CASE("steady improvement never converges") {
  ConvergenceConfig cfg;
  AccuracyTrace t;
  double acc = 0.0;
  for (int i = 0; i < 45; ++i) {
    t.append(acc);
    acc += 0.02;
  }
  CHECK_FALSE(check_convergence(t, cfg).has_value());

  // Long slow climb: every window still gains more than epsilon.
  AccuracyTrace slow;
  for (int i = 0; i < 400; ++i) slow.append(0.1 + 0.002 * i);
  CHECK_FALSE(check_convergence(slow, cfg).has_value());
}

TEST_CASE("rise then plateau anchors at the last improvement") {
  ConvergenceConfig cfg;
  AccuracyTrace t;
  for (int round = 1; round <= 10; ++round) t.append(0.5 + 0.04 * round);  // reaches 0.9
  for (int i = 0; i < 100; ++i) t.append(0.9);
  auto converged = check_convergence(t, cfg);
  REQUIRE(converged.has_value());
  CHECK(*converged == 10);
}

TEST_CASE("window too short to decide") {
  ConvergenceConfig cfg;
  auto t = trace_of(std::vector<double>(100, 0.7));  // needs 101 entries
  CHECK_FALSE(check_convergence(t, cfg).has_value());
}

TEST_CASE("sub-epsilon improvements count toward the window") {
  ConvergenceConfig cfg{0.01, 10};
  AccuracyTrace t;
  t.append(0.5);
  for (int i = 1; i <= 10; ++i) t.append(0.5 + 0.0005 * i);  // +0.005 in total
  auto converged = check_convergence(t, cfg);
  REQUIRE(converged.has_value());
  CHECK(*converged == 1);
}

TEST_CASE("converged_at is stable under trace extension") {
  ConvergenceConfig cfg{0.01, 20};
  Rng rng(77);
  for (int rep = 0; rep < 30; ++rep) {
    AccuracyTrace t;
    double level = 0.4;
    std::optional<int> first;
    for (int i = 0; i < 200; ++i) {
      level = std::min(1.0, level + (rng.bernoulli(0.1) ? rng.uniform(0.0, 0.05) : 0.0));
      t.append(level);
      auto now = check_convergence(t, cfg);
      if (first.has_value()) {
        REQUIRE(now.has_value());
        REQUIRE(*now == *first);
      } else {
        first = now;
      }
    }
  }
}

TEST_CASE("overhead accumulates counts and bytes") {
  OverheadReport report;
  CHECK(report.total_broadcasts == 0);
  CHECK(report.bytes_transmitted == 0);

  record_overhead(report, 20, 58520);
  record_overhead(report, 17, 58520);
  CHECK(report.total_broadcasts == 37);
  CHECK(report.bytes_transmitted == 37LL * 58520);
  CHECK(report.energy_proxy == doctest::Approx(37.0));
}
