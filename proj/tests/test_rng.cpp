#include <doctest.h>

#include <cmath>
#include <set>

#include "gwrc/rng.hpp"

using namespace gwrc;

TEST_SUITE_BEGIN("rng");

TEST_CASE("same seed reproduces the sequence") {
  RandomStream a(42), b(42);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("unit draws stay in range") {
  RandomStream rs(7);
  for (int i = 0; i < 100000; ++i) {
    double u = rs.next_unit();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    double v = rs.next_unit_open();
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("derived keys do not collide across salts") {
  std::set<std::uint64_t> seen;
  std::uint64_t key = mix64(123);
  for (std::uint64_t salt = 0; salt < 10000; ++salt) seen.insert(derive_key(key, salt));
  CHECK(seen.size() == 10000);
}

TEST_CASE("probit inverts the normal CDF") {
  CHECK(probit(0.5) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(probit(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-10));
  CHECK(probit(0.025) == doctest::Approx(-1.959963984540054).epsilon(1e-10));
  for (double u : {1e-8, 1e-4, 0.1, 0.3, 0.7, 0.9, 0.9999, 1.0 - 1e-8}) {
    double z = probit(u);
    double back = 0.5 * std::erfc(-z / std::sqrt(2.0));
    CHECK(back == doctest::Approx(u).epsilon(1e-9));
  }
}

TEST_SUITE_END();
