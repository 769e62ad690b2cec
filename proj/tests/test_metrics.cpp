#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "mbc/errors.hpp"
#include "mbc/metrics.hpp"
#include "mbc/rng.hpp"
#include "mbc/tape.hpp"

using namespace mbc;

namespace {

// All-pairs comparison oracle: wins + half-ties over positive-negative pairs.
double oracle_auc(const std::vector<double>& s, const std::vector<double>& y) {
  double wins = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (y[i] != 1.0) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j] != 0.0) continue;
      ++pairs;
      if (s[i] > s[j]) wins += 1.0;
      else if (s[i] == s[j]) wins += 0.5;
    }
  }
  return wins / static_cast<double>(pairs);
}

}  // namespace

TEST_CASE("auc worked and boundary examples") {
  CHECK(auc({0.1, 0.4, 0.35, 0.8}, {0, 0, 1, 1}) ==
        doctest::Approx(0.75).epsilon(1e-15));
  // perfectly ordered
  CHECK(auc({0.1, 0.2, 0.8, 0.9}, {0, 0, 1, 1}) == 1.0);
  // fully reversed
  CHECK(auc({0.9, 0.8, 0.1, 0.2}, {0, 0, 1, 1}) == 0.0);
  // all scores tied
  CHECK(auc({0.5, 0.5, 0.5, 0.5}, {0, 1, 0, 1}) == 0.5);

  CHECK_THROWS_AS(auc({0.1, 0.9}, {1, 1}), UndefinedMetricError);
  CHECK_THROWS_AS(auc({0.1, 0.9}, {0, 0}), UndefinedMetricError);
  CHECK_THROWS_AS(auc({}, {}), UndefinedMetricError);
}

TEST_CASE("auc equals the all-pairs oracle on random inputs up to 12") {
  Rng rng(41);
  int done = 0;
  while (done < 120000) {
    const std::size_t n = 2 + rng.uniform_int(11);
    std::vector<double> s(n), y(n);
    bool pos = false, neg = false;
    for (std::size_t i = 0; i < n; ++i) {
      // coarse grid makes ties common
      s[i] = 0.1 * static_cast<double>(rng.uniform_int(11));
      y[i] = rng.uniform_int(2) ? 1.0 : 0.0;
      (y[i] == 1.0 ? pos : neg) = true;
    }
    if (!pos || !neg) continue;
    const double a = auc(s, y);
    const double b = oracle_auc(s, y);
    REQUIRE(a == doctest::Approx(b).epsilon(1e-12));
    ++done;
  }
}

TEST_CASE("auc is invariant under strictly monotone transforms") {
  Rng rng(43);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 4 + rng.uniform_int(9);
    std::vector<double> s(n), y(n);
    bool pos = false, neg = false;
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = rng.uniform(-2.0, 2.0);
      y[i] = rng.uniform_int(2) ? 1.0 : 0.0;
      (y[i] == 1.0 ? pos : neg) = true;
    }
    if (!pos || !neg) continue;
    const double base = auc(s, y);
    std::vector<double> exp_s(n), aff_s(n);
    for (std::size_t i = 0; i < n; ++i) {
      exp_s[i] = std::exp(s[i]);
      aff_s[i] = 3.5 * s[i] + 11.0;
    }
    CHECK(auc(exp_s, y) == doctest::Approx(base).epsilon(1e-12));
    CHECK(auc(aff_s, y) == doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("logloss values and bit-exact consistency with bce") {
  CHECK(logloss({0.5, 0.5}, {1, 0}) ==
        doctest::Approx(0.6931471805599453).epsilon(1e-15));
  CHECK(logloss({0.999999, 0.000001}, {1, 0}) < 1e-5);

  Rng rng(47);
  std::vector<double> p(9), y(9);
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = rng.uniform(0.01, 0.99);
    y[i] = rng.uniform_int(2) ? 1.0 : 0.0;
  }
  double manual = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) manual += bce_scalar(p[i], y[i]);
  manual /= static_cast<double>(p.size());
  CHECK(logloss(p, y) == manual);

  // the clamp keeps exact 0/1 probabilities finite
  CHECK(std::isfinite(logloss({0.0, 1.0}, {1, 0})));
}
