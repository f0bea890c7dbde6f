#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "qcert/errors.hpp"
#include "qcert/instances.hpp"
#include "qcert/measurement.hpp"

using namespace qcert;

namespace {

// d x d factors W_z^dagger from the row blocks of a Haar isometry; sum_z W_z^dagger W_z = I.
Povm random_povm(std::size_t d, std::size_t outcomes, Rng& rng) {
  const CMatrix w = haar_isometry(d * outcomes, d, rng);
  std::vector<CMatrix> factors;
  for (std::size_t z = 0; z < outcomes; ++z) {
    CMatrix f(d, d);
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b) f(a, b) = std::conj(w(z * d + b, a));
    factors.push_back(f);
  }
  return Povm(factors, {}, "random");
}

DensityMatrix random_state(std::size_t d, Rng& rng) {
  const CMatrix g = ginibre(d, d, rng);
  CMatrix m = g * g.adjoint();
  m *= 1.0 / m.trace().real();
  return DensityMatrix(m);
}

DensityMatrix random_block_state(const BucketDecomposition& b, Rng& rng) {
  CMatrix m(b.dim, b.dim);
  for (const auto& [j, idx] : b.buckets) {
    const CMatrix g = ginibre(idx.size(), idx.size(), rng);
    const CMatrix blk = g * g.adjoint();
    for (std::size_t x = 0; x < idx.size(); ++x)
      for (std::size_t y = 0; y < idx.size(); ++y) m(idx[x], idx[y]) = blk(x, y);
  }
  m *= 1.0 / m.trace().real();
  return DensityMatrix(m);
}

}  // namespace

TEST_CASE("outcome distribution examples") {
  Rng rng(21);
  const auto rho = DensityMatrix::diagonal({0.5, 0.3, 0.2});
  const Povm trivial({CMatrix::identity(3)});
  CHECK(outcome_distribution(rho, trivial) == std::vector<double>{1.0});
  const auto p = outcome_distribution(rho, basis_povm(CMatrix::identity(3)));
  CHECK(p[0] == doctest::Approx(0.5));
  CHECK(p[1] == doctest::Approx(0.3));
  CHECK(p[2] == doctest::Approx(0.2));
  const auto mm = DensityMatrix::maximally_mixed(8);
  for (double x : outcome_distribution(mm, basis_povm(haar_unitary(8, rng)))) CHECK(std::abs(x - 0.125) <= 1e-10);
  CHECK_THROWS_AS(outcome_distribution(mm, trivial), ValidationError);
}

TEST_CASE("basis POVM") {
  Rng rng(22);
  const CMatrix u = haar_unitary(6, rng);
  const Povm m = basis_povm(u);
  CHECK(m.size() == 6);
  CMatrix sum(6, 6);
  for (std::size_t z = 0; z < 6; ++z) {
    const CMatrix e = m.element(z);
    CHECK((e * e - e).max_abs() <= 1e-9);
    sum += e;
  }
  CHECK((sum - CMatrix::identity(6)).max_abs() <= 1e-9);
  CMatrix bad = u;
  bad(0, 0) += 1e-6;
  CHECK_THROWS_AS(basis_povm(bad), ValidationError);
  CHECK_THROWS_AS(Povm({CMatrix::identity(2), CMatrix::identity(2)}), ValidationError);
}

TEST_CASE("POVM from elements") {
  const std::vector<HermitianMatrix> elems{HermitianMatrix(CMatrix::diagonal({0.25, 1.0})),
                                           HermitianMatrix(CMatrix::diagonal({0.75, 0.0}))};
  const Povm m = Povm::from_elements(elems);
  CHECK((m.element(0) - elems[0].matrix()).max_abs() <= 1e-12);
  CHECK(m.factor(1).cols() == 1);
  CHECK_THROWS_AS(Povm::from_elements({HermitianMatrix(CMatrix::diagonal({1.1, 1.0})),
                                       HermitianMatrix(CMatrix::diagonal({-0.1, 0.0}))}),
                  ValidationError);
}

TEST_CASE("measure on a copy source") {
  Rng rng(23);
  CopySource src(DensityMatrix::diagonal({0.6, 0.4}), 3, rng.derive(1, 0));
  CHECK(src.measure(Povm({CMatrix::identity(2)})) == 0);
  CHECK(src.copies_used() == 1);
  CopySource empty(DensityMatrix::diagonal({0.6, 0.4}), 0, rng.derive(1, 1));
  CHECK_THROWS_AS(empty.measure(Povm({CMatrix::identity(2)})), BudgetExhausted);
  CHECK(empty.copies_used() == 0);

  const auto rho = random_state(4, rng);
  const Povm m = basis_povm(haar_unitary(4, rng));
  const auto p = outcome_distribution(rho, m);
  const std::size_t n = 100000;
  CopySource big(rho, n, rng.derive(1, 2));
  std::vector<double> freq(4, 0.0);
  for (std::size_t i = 0; i < n; ++i) freq[big.measure(m)] += 1.0;
  CHECK(big.copies_used() == n);
  for (std::size_t z = 0; z < 4; ++z) {
    const double se = std::sqrt(p[z] * (1.0 - p[z]) / static_cast<double>(n));
    CHECK(std::abs(freq[z] / static_cast<double>(n) - p[z]) <= 3.0 * se);
  }
  CHECK_THROWS_AS(big.measure(m), BudgetExhausted);
}

TEST_CASE("batch measurement charges every copy") {
  Rng rng(24);
  CopySource src(DensityMatrix::maximally_mixed(4), 1000, rng);
  const Povm m = basis_povm(CMatrix::identity(4));
  const auto c = src.measure_counts(m, 600);
  std::uint64_t total = 0;
  for (auto x : c) total += x;
  CHECK(total == 600);
  CHECK(src.copies_used() == 600);
  CHECK_THROWS_AS(src.measure_counts(m, 401), BudgetExhausted);
  CHECK(src.copies_used() == 1000);
}

TEST_CASE("transcripts record one entry per copy") {
  Rng rng(25);
  CopySource src(DensityMatrix::diagonal({0.5, 0.5}), 100, rng);
  src.record_transcript(true);
  const Povm m = basis_povm(CMatrix::identity(2), "z-basis");
  src.measure(m);
  src.measure_counts(m, 7);
  src.measure_until(m, {true, false}, 3);
  CHECK(src.transcript().size() == src.copies_used());
  const auto text = transcript_jsonl(src.transcript());
  CHECK(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')) == src.copies_used());
  CHECK(text.find("\"povm\":\"z-basis\"") != std::string::npos);
}

TEST_CASE("block projection preserves distributions") {
  Rng rng(26);
  std::vector<double> v{0.3, 0.25, 0.2, 0.1, 0.1, 0.05, 0.0};
  const auto b = bucketize_entries(v);
  const Povm m = random_povm(7, 3, rng);
  const auto [pm, f] = project_povm_to_blocks(m, b);
  for (std::size_t z = 0; z < pm.size(); ++z) {
    const CMatrix e = pm.element(z);
    const std::string tag = pm.label(z).substr(0, pm.label(z).find(':'));
    for (std::size_t a = 0; a < 7; ++a)
      for (std::size_t c = 0; c < 7; ++c) {
        if (std::abs(e(a, c)) == 0.0) continue;
        const int ba = b.bucket_of[a], bc = b.bucket_of[c];
        CHECK(ba == bc);
        CHECK(tag == (ba < 0 ? std::string("rest") : std::to_string(ba)));
      }
  }
  for (int t = 0; t < 5; ++t) {
    const auto rho = random_block_state(b, rng);
    const auto lhs = pushforward(outcome_distribution(rho, pm), f, m.size());
    const auto rhs = outcome_distribution(rho, m);
    for (std::size_t z = 0; z < m.size(); ++z) CHECK(std::abs(lhs[z] - rhs[z]) <= 1e-10);
  }

  const auto single = bucketize_entries(std::vector<double>(4, 0.25));
  const Povm basis = basis_povm(haar_unitary(4, rng));
  const auto [same, g] = project_povm_to_blocks(basis, single);
  REQUIRE(same.size() == 4);
  for (std::size_t z = 0; z < 4; ++z) {
    CHECK(g[z] == z);
    CHECK((same.element(z) - basis.element(z)).max_abs() == 0.0);
    CHECK(same.label(z) == "1:" + basis.label(z));
  }
}

TEST_CASE("likelihood ratio") {
  Rng rng(27);
  const auto sigma = DensityMatrix::diagonal({0.8, 0.15, 0.05});
  const CMatrix e = CMatrix::column(haar_vector(3, rng));
  const CMatrix el = e * e.adjoint();
  CHECK(likelihood_g(el, sigma, sigma) == doctest::Approx(0.0));
  CHECK_THROWS_AS(likelihood_g(CMatrix::diagonal({0.0, 0.0, 1.0}), DensityMatrix::diagonal({0.5, 0.5, 0.0}),
                               DensityMatrix::diagonal({0.4, 0.4, 0.2})),
                  UndefinedOutcome);

  // Rank-one element in the plane of the two largest entries against the corner alternative.
  const auto inst = make_corner(Spectrum(sigma.diag()), 0.2);
  for (int u : {1, -1}) {
    const auto alt = build_corner(sigma, inst, u);
    for (int t = 0; t < 5; ++t) {
      const auto w = haar_vector(2, rng);
      std::vector<cplx> v{w[0], w[1], 0.0};
      const CMatrix col = CMatrix::column(v);
      const double eps = 0.2;
      const double vsv = 0.8 * std::norm(v[0]) + 0.15 * std::norm(v[1]);
      const double closed = (eps * u * std::real(std::conj(v[0]) * v[1]) -
                             eps * eps / 4.0 * (std::norm(v[0]) - std::norm(v[1]))) /
                            vsv;
      CHECK(likelihood_g(col * col.adjoint(), sigma, alt) == doctest::Approx(closed).epsilon(1e-12));
    }
  }
}

TEST_CASE("likelihood ratio on one bucket against a Paninski alternative") {
  Rng rng(28);
  std::vector<double> v{0.3, 0.3, 0.1, 0.1, 0.1, 0.1};
  const auto spec = Spectrum(v);
  const auto sigma = DensityMatrix::diagonal(v);
  const auto inst = tune_paninski(spec, 0.1);
  const auto rho = sample_paninski(sigma, inst, rng);
  for (const auto& [j, idx] : inst.buckets.buckets) {
    std::vector<cplx> w(6, 0.0);
    const auto h = haar_vector(idx.size(), rng);
    for (std::size_t a = 0; a < idx.size(); ++a) w[idx[a]] = h[a];
    const CMatrix col = CMatrix::column(w);
    const CMatrix hj = CMatrix::column(h);
    const CMatrix mj = hj * hj.adjoint();
    const double per_bucket = trace_product(mj, rho.matrix().select(idx, idx) - sigma.matrix().select(idx, idx)) /
                              trace_product(mj, sigma.matrix().select(idx, idx));
    CHECK(likelihood_g(col * col.adjoint(), sigma, rho) == doctest::Approx(per_bucket).epsilon(1e-10));
  }
}

TEST_CASE("phi, K and the mean of g") {
  Rng rng(29);
  std::vector<double> v{0.3, 0.3, 0.1, 0.1, 0.1, 0.1};
  const auto spec = Spectrum(v);
  const auto sigma = DensityMatrix::diagonal(v);
  const auto inst = tune_paninski(spec, 0.1);
  const auto b = inst.buckets;
  const Povm m = random_povm(6, 2, rng);
  const auto [pm, f] = project_povm_to_blocks(m, b);
  const auto ru = sample_paninski(sigma, inst, rng);
  const auto rv = sample_paninski(sigma, inst, rng);

  CHECK(phi(pm, sigma, sigma, rv) == 0.0);
  CHECK(phi(pm, sigma, ru, ru) >= 0.0);
  CHECK(phi(pm, sigma, ru, rv) == doctest::Approx(phi(pm, sigma, rv, ru)).epsilon(1e-14));
  CHECK(std::abs(g_mean(pm, sigma, ru)) <= 1e-10);
  const double k = k_quantity(pm, sigma, ru, rv);
  CHECK(k == doctest::Approx(phi(pm, sigma, ru, ru) + phi(pm, sigma, rv, rv) + 2.0 * phi(pm, sigma, ru, rv)));

  // Per-bucket route: phi = sum_j Tr(sigma_j) phi_j on the normalized blocks.
  double two_route = 0.0;
  for (const auto& [j, idx] : b.buckets) {
    const double tj = b.mass(j, v);
    std::vector<CMatrix> fj;
    for (std::size_t z = 0; z < m.size(); ++z) fj.push_back(m.factor(z).select(idx, [&] {
      std::vector<std::size_t> all(m.factor(z).cols());
      for (std::size_t k2 = 0; k2 < all.size(); ++k2) all[k2] = k2;
      return all;
    }()));
    const Povm mj(fj);
    auto norm = [&](const DensityMatrix& r) {
      CMatrix s = r.matrix().select(idx, idx);
      s *= 1.0 / tj;
      return DensityMatrix(s);
    };
    two_route += tj * phi(mj, norm(sigma), norm(ru), norm(rv));
  }
  CHECK(std::abs(phi(pm, sigma, ru, rv) - two_route) <= 1e-10);

  CHECK_THROWS_AS(phi(basis_povm(CMatrix::identity(3)), DensityMatrix::diagonal({0.5, 0.5, 0.0}),
                      DensityMatrix::diagonal({0.4, 0.4, 0.2}), DensityMatrix::diagonal({0.5, 0.5, 0.0})),
                  UndefinedOutcome);
  CHECK(phi(basis_povm(CMatrix::identity(3)), DensityMatrix::diagonal({0.5, 0.5, 0.0}),
            DensityMatrix::diagonal({0.4, 0.6, 0.0}), DensityMatrix::diagonal({0.6, 0.4, 0.0})) ==
        doctest::Approx(-0.04));
}

TEST_CASE("rotated channel measures V M V^dagger") {
  Rng rng(30);
  const auto rho = random_state(3, rng);
  const CMatrix v = haar_unitary(3, rng);
  const Povm m = basis_povm(CMatrix::identity(3));
  std::vector<double> expect(3);
  for (std::size_t z = 0; z < 3; ++z) {
    const CMatrix col = CMatrix::column(v.col(z));
    expect[z] = trace_product(col * col.adjoint(), rho.matrix());
  }
  CopySource src(rho, 200000, rng.derive(2, 0));
  RotatedChannel rot(src, v);
  const auto c = rot.measure_counts(m, 200000);
  CHECK(rot.copies_used() == 200000);
  for (std::size_t z = 0; z < 3; ++z) {
    const double se = std::sqrt(expect[z] * (1.0 - expect[z]) / 200000.0);
    CHECK(std::abs(static_cast<double>(c[z]) / 200000.0 - expect[z]) <= 4.0 * se);
  }
}

TEST_CASE("conditional channel") {
  Rng rng(31);
  SUBCASE("full projector is a pass-through") {
    CopySource src(DensityMatrix::maximally_mixed(3), 100, rng);
    ConditionalChannel cond(src, {0, 1, 2});
    cond.measure_counts(basis_povm(CMatrix::identity(3)), 50);
    CHECK(cond.discarded() == 0);
    CHECK(src.copies_used() == 50);
  }
  SUBCASE("rank one projector on an aligned pure state") {
    CopySource src(DensityMatrix::diagonal({0.0, 1.0}), 100, rng);
    ConditionalChannel cond(src, {1});
    CHECK(cond.measure(Povm({CMatrix::identity(1)})) == 0);
    CHECK(cond.discarded() == 0);
    CHECK(src.copies_used() == 1);
  }
  SUBCASE("discard rate and conditional distribution") {
    const auto rho = random_state(4, rng);
    const std::vector<std::size_t> s{1, 3};
    const double tr = rho.matrix()(1, 1).real() + rho.matrix()(3, 3).real();
    CopySource src(rho, 1000000, rng.derive(3, 0));
    ConditionalChannel cond(src, s);
    const std::uint64_t n = 10000;
    const auto c = cond.measure_counts(basis_povm(CMatrix::identity(2)), n);
    CHECK(c[0] + c[1] == n);
    CHECK(src.copies_used() == n + cond.discarded());
    const double total = static_cast<double>(src.copies_used());
    const double rate = static_cast<double>(cond.discarded()) / total;
    CHECK(std::abs(rate - (1.0 - tr)) <= 3.0 * std::sqrt(tr * (1.0 - tr) / total));
    const double q = rho.matrix()(1, 1).real() / tr;
    CHECK(std::abs(static_cast<double>(c[0]) / n - q) <= 4.0 * std::sqrt(q * (1.0 - q) / n));
  }
  SUBCASE("nested conditioning charges the root budget") {
    CopySource src(DensityMatrix::diagonal({0.25, 0.25, 0.25, 0.25}), 1000000, rng.derive(3, 1));
    ConditionalChannel outer(src, {0, 1, 2});
    ConditionalChannel inner(outer, {0});
    const auto c = inner.measure_counts(Povm({CMatrix::identity(1)}), 5000);
    CHECK(c[0] == 5000);
    CHECK(src.copies_used() == 5000 + outer.discarded() + inner.discarded());
    const double rate = 5000.0 / static_cast<double>(src.copies_used());
    CHECK(rate == doctest::Approx(0.25).epsilon(0.1));
  }
  SUBCASE("exhaustion inside a conditional view") {
    CopySource src(DensityMatrix::diagonal({0.999, 0.001}), 100, rng.derive(3, 2));
    ConditionalChannel cond(src, {1});
    CHECK_THROWS_AS(cond.measure_counts(Povm({CMatrix::identity(1)}), 50), BudgetExhausted);
    CHECK(src.copies_used() == 100);
    CopySource zero(DensityMatrix::diagonal({1.0, 0.0}), 100, rng.derive(3, 3));
    ConditionalChannel never(zero, {1});
    CHECK_THROWS_AS(never.measure(Povm({CMatrix::identity(1)})), BudgetExhausted);
  }
  CopySource small(DensityMatrix::maximally_mixed(2), 1, rng);
  CHECK_THROWS_AS(ConditionalChannel(small, {2}), ValidationError);
  CHECK_THROWS_AS(ConditionalChannel(small, {0, 0}), ValidationError);
}
