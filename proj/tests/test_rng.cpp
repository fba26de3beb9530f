#include <doctest.h>

#include "ici/rng.hpp"

TEST_SUITE("rng") {

TEST_CASE("streams are reproducible") {
  ici::Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("uniform01 stays in (0,1)") {
  ici::Rng rng(7);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform01();
    CHECK(u > 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("normal moments are sane") {
  ici::Rng rng(11);
  double sum = 0.0, sum_sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sum_sq += z * z;
  }
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(std::abs(sum_sq / n - 1.0) < 0.02);
}

TEST_CASE("shuffle is a permutation") {
  ici::Rng rng(3);
  std::vector<int> v(50);
  for (int i = 0; i < 50; ++i) v[static_cast<std::size_t>(i)] = i;
  rng.shuffle(v);
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 50; ++i) CHECK(sorted[static_cast<std::size_t>(i)] == i);
}

TEST_CASE("mix_seed separates nearby inputs") {
  CHECK(ici::mix_seed(1, 0) != ici::mix_seed(0, 1));
  CHECK(ici::mix_seed(2024, 0) != ici::mix_seed(2024, 1));
}

}
