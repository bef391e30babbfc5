// test_rng.cpp

// Copyright 2026  gestaltfuse authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "gestaltfuse/rng.hpp"

using namespace gestaltfuse;

TEST_CASE("identical seeds give identical streams; different seeds diverge") {
  Xoshiro256 a(123), b(123), c(124);
  bool all_equal = true, any_equal_c = false;
  for (int i = 0; i < 1000; ++i) {
    auto va = a.next(), vb = b.next(), vc = c.next();
    all_equal = all_equal && (va == vb);
    any_equal_c = any_equal_c || (va == vc);
  }
  CHECK(all_equal);
  CHECK(!any_equal_c);  // 1000 coincidences would be miraculous
}

TEST_CASE("uniform stays in [0,1) and uniform_pos in (0,1]") {
  Xoshiro256 rng(5);
  for (int i = 0; i < 10000; ++i) {
    double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    double p = rng.uniform_pos();
    CHECK(p > 0.0);
    CHECK(p <= 1.0);
  }
}

TEST_CASE("below(n) covers the full range") {
  Xoshiro256 rng(9);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 7000; ++i) ++counts[rng.below(7)];
  for (int c : counts) CHECK(c > 700);  // crude uniformity floor
}

TEST_CASE("shuffle produces a permutation and depends on the seed") {
  std::vector<int> base(50);
  for (int i = 0; i < 50; ++i) base[i] = i;
  auto a = base, b = base, c = base;
  Xoshiro256 r1(1), r2(1), r3(2);
  r1.shuffle(a);
  r2.shuffle(b);
  r3.shuffle(c);
  CHECK(a == b);
  CHECK(a != c);
  auto sorted = a;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == base);
}

TEST_CASE("normal and exponential have roughly the right first moments") {
  Xoshiro256 rng(31);
  double sum = 0, sumsq = 0;
  const int n = 50000;
  for (int i = 0; i < n; ++i) {
    double z = rng.normal();
    sum += z;
    sumsq += z * z;
  }
  CHECK(std::abs(sum / n) < 0.02);
  CHECK(std::abs(sumsq / n - 1.0) < 0.03);

  double esum = 0;
  for (int i = 0; i < n; ++i) esum += rng.exponential(40.0);
  CHECK(std::abs(esum / n - 40.0) < 1.0);
}

TEST_CASE("derive_seed separates component streams") {
  CHECK(derive_seed(7, "split") != derive_seed(7, "factorization"));
  CHECK(derive_seed(7, "split") == derive_seed(7, "split"));
  CHECK(derive_seed(7, "split") != derive_seed(8, "split"));
}
