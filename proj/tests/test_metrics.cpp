#include <doctest.h>

#include <algorithm>
#include <random>

#include "routerlab/error.hpp"
#include "routerlab/metrics.hpp"
#include "routerlab/rng.hpp"

using namespace routerlab;

namespace {
std::vector<ScoredQuery> sq(const std::vector<std::tuple<int, double, double>>& rows) {
  std::vector<ScoredQuery> v;
  int i = 0;
  for (const auto& [y, b, a] : rows) v.push_back({"q" + std::to_string(i++), y, b, a});
  return v;
}
}  // namespace

TEST_CASE("adv_asr") {
  CHECK(adv_asr(sq({{0, 0.1, 1.0}, {0, 0.2, 1.0}}), 0.9) == 1.0);
  CHECK(adv_asr(sq({{0, 0.1, 0.0}, {1, 0.2, 0.3}}), 0.0) == 1.0);
  CHECK(adv_asr(sq({{0, 0, 0.3}, {0, 0, 0.6}, {0, 0, 0.8}, {0, 0, 0.5}, {1, 0, 0.0}}), 0.55) == 0.5);
  CHECK_THROWS_AS(adv_asr(sq({{1, 0.1, 0.9}}), 0.5), ArgumentError);
}

TEST_CASE("acg") {
  CHECK(acg(sq({{0, 0.3, 0.3}, {1, 0.7, 0.7}})) == 0.0);
  CHECK(acg(sq({{0, 0.2, 0.7}, {1, 0.4, 0.5}})) == doctest::Approx(0.3));
  CHECK_THROWS_AS(acg({}), ArgumentError);
  auto v = sq({{0, 0.9, 0.1}, {1, 0.2, 0.6}, {0, 0.33, 0.34}});
  const double a = acg(v);
  std::reverse(v.begin(), v.end());
  CHECK(acg(v) == doctest::Approx(a).epsilon(1e-15));
  CHECK(a >= -1.0);
  CHECK(a <= 1.0);
}

TEST_CASE("adr") {
  CHECK(adr(0.8, 0.8) == 0.0);
  CHECK(adr(0.90, 0.85) == doctest::Approx(0.0556).epsilon(1e-3));
  CHECK(adr(0.8, 0.9) < 0.0);
  CHECK_THROWS_AS(adr(0.0, 0.5), UndefinedError);
}

TEST_CASE("tiad") {
  CHECK(tiad(0.7, 0.7) == 0.0);
  CHECK(tiad(0.88, 0.80) == doctest::Approx(0.08));
}

TEST_CASE("backdoor_asr") {
  CHECK(backdoor_asr(std::vector<double>{0, 0, 0}, 0.3) == 0.0);
  CHECK(backdoor_asr(std::vector<double>{0.9, 0.2, 0.95}, 0.5) == doctest::Approx(2.0 / 3).epsilon(1e-4));
  CHECK(backdoor_asr(std::vector<double>{0.99, 0.5}, 1.0) == 0.0);
  CHECK_THROWS_AS(backdoor_asr(std::vector<double>{}, 0.5), ArgumentError);
}

TEST_CASE("asr is non-increasing in alpha") {
  Rng rng(1);
  std::vector<ScoredQuery> v;
  std::vector<double> p;
  for (int i = 0; i < 100; ++i) {
    v.push_back({"q", static_cast<int>(i % 3 == 0), uniform01(rng), uniform01(rng)});
    p.push_back(uniform01(rng));
  }
  double prev_a = 2.0;
  double prev_b = 2.0;
  for (int k = 0; k <= 100; ++k) {
    const double a = adv_asr(v, k / 100.0);
    const double b = backdoor_asr(p, k / 100.0);
    CHECK(a <= prev_a);
    CHECK(b <= prev_b);
    prev_a = a;
    prev_b = b;
  }
}
