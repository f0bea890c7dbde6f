#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "qcert/errors.hpp"
#include "qcert/random.hpp"
#include "qcert/spectrum.hpp"

using namespace qcert;

TEST_CASE("identical seeds give identical streams") {
  Rng a(42, 7), b(42, 7), c(42, 8);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a(), y = b(), z = c();
    CHECK(x == y);
    differs |= (x != z);
  }
  CHECK(differs);
  Rng u(1), v(1);
  CHECK(haar_unitary(4, u).entries() == haar_unitary(4, v).entries());
  CHECK(stream_id(1, 2) != stream_id(2, 1));
}

TEST_CASE("haar unitary is unitary") {
  Rng rng(1);
  const CMatrix u1 = haar_unitary(1, rng);
  CHECK(std::abs(u1(0, 0)) == doctest::Approx(1.0));
  for (std::size_t d : {2u, 3u, 8u, 20u}) {
    const CMatrix u = haar_unitary(d, rng);
    CHECK((adjoint_times(u, u) - CMatrix::identity(d)).max_abs() <= 1e-10);
  }
  CHECK_THROWS_AS(haar_unitary(0, rng), ValidationError);
}

TEST_CASE("haar first moment E|U11|^2 = 1/d") {
  Rng rng(123);
  const int n = 100000;
  const std::size_t d = 4;
  double s = 0.0, s2 = 0.0;
  for (int t = 0; t < n; ++t) {
    const double x = std::norm(haar_unitary(d, rng)(0, 0));
    s += x;
    s2 += x * x;
  }
  const double mean = s / n;
  const double se = std::sqrt((s2 / n - mean * mean) / n);
  CHECK(std::abs(mean - 0.25) <= 3.0 * se);
}

TEST_CASE("haar isometry columns are orthonormal") {
  Rng rng(2);
  for (int t = 0; t < 100; ++t) {
    const std::size_t rows = 2 + t % 7, cols = 1 + t % rows;
    const CMatrix w = haar_isometry(rows, cols, rng);
    CHECK((adjoint_times(w, w) - CMatrix::identity(cols)).max_abs() <= 1e-10);
  }
  CHECK_THROWS_AS(haar_isometry(2, 3, rng), ValidationError);
}

TEST_CASE("block haar structure") {
  Rng rng(3);
  BucketDecomposition single;
  single.dim = 4;
  single.buckets[0] = {0, 1, 2, 3};
  const CMatrix u = block_haar(single, rng);
  CHECK((adjoint_times(u, u) - CMatrix::identity(4)).max_abs() <= 1e-10);

  BucketDecomposition ones;
  ones.dim = 3;
  ones.buckets[0] = {0};
  ones.buckets[1] = {1};
  ones.buckets[2] = {2};
  CHECK((block_haar(ones, rng) - CMatrix::identity(3)).max_abs() == 0.0);

  BucketDecomposition odd;
  odd.dim = 5;
  odd.buckets[1] = {0, 1, 2};
  odd.buckets[2] = {3, 4};
  const CMatrix v = block_haar(odd, rng);
  for (std::size_t k = 0; k < 5; ++k) {
    CHECK(v(2, k) == (k == 2 ? cplx(1.0) : cplx(0.0)));
    CHECK(v(k, 2) == (k == 2 ? cplx(1.0) : cplx(0.0)));
  }
  for (std::size_t a : {0u, 1u})
    for (std::size_t b : {3u, 4u}) {
      CHECK(v(a, b) == cplx(0.0));
      CHECK(v(b, a) == cplx(0.0));
    }
  CHECK((adjoint_times(v, v) - CMatrix::identity(5)).max_abs() <= 1e-10);

  BucketDecomposition bad;
  bad.dim = 2;
  bad.buckets[0] = {0, 0};
  CHECK_THROWS_AS(block_haar(bad, rng), ValidationError);
}

TEST_CASE("discrete sampling") {
  Rng rng(4);
  CHECK(sample_discrete({1.0}, rng) == 0);
  for (int i = 0; i < 100; ++i) CHECK(sample_discrete({0.0, 1.0}, rng) == 1);
  const int n = 100000;
  int ones = 0;
  for (int i = 0; i < n; ++i) ones += static_cast<int>(sample_discrete({0.3, 0.7}, rng));
  const double sd = std::sqrt(n * 0.3 * 0.7);
  CHECK(std::abs(ones - 0.7 * n) <= 3.0 * sd);
  CHECK_THROWS_AS(sample_discrete({-0.1, 1.1}, rng), ValidationError);
  CHECK_THROWS_AS(sample_discrete({0.5, 0.4}, rng), ValidationError);
}

TEST_CASE("multinomial counts") {
  Rng rng(5);
  const std::vector<double> w{0.1, 0.0, 0.6, 0.3};
  double mean2 = 0.0;
  const int reps = 2000;
  for (int r = 0; r < reps; ++r) {
    auto c = sample_multinomial(1000, w, rng);
    CHECK(c[0] + c[1] + c[2] + c[3] == 1000);
    CHECK(c[1] == 0);
    mean2 += static_cast<double>(c[2]);
  }
  mean2 /= reps;
  CHECK(std::abs(mean2 - 600.0) <= 3.0 * std::sqrt(1000 * 0.24 / reps));
}

TEST_CASE("haar invariance of a trace statistic") {
  // Tr(A U^dagger B U) and Tr(A (VU)^dagger B (VU)) have the same law.
  Rng rng(6);
  const std::size_t d = 3;
  const CMatrix a = CMatrix::diagonal({1.0, 0.0, -0.5});
  const CMatrix b = CMatrix::diagonal({0.2, 0.3, 0.5});
  const CMatrix v = haar_unitary(d, rng);
  const int n = 10000;
  std::vector<double> x(n), y(n);
  for (int t = 0; t < n; ++t) {
    const CMatrix u = haar_unitary(d, rng);
    x[t] = trace_product(a, adjoint_times(u, b * u));
    const CMatrix w = v * haar_unitary(d, rng);
    y[t] = trace_product(a, adjoint_times(w, b * w));
  }
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  double ks = 0.0;
  std::size_t i = 0, j = 0;
  while (i < x.size() && j < y.size()) {
    if (x[i] <= y[j]) ++i; else ++j;
    ks = std::max(ks, std::abs(static_cast<double>(i) - static_cast<double>(j)) / n);
  }
  const double critical = 1.628 * std::sqrt(2.0 / n);
  CHECK(ks < critical);
}
