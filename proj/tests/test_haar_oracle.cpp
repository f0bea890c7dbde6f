#include <doctest.h>

#include <cmath>

#include "qcert/errors.hpp"
#include "qcert/haar_oracle.hpp"
#include "qcert/instances.hpp"

using namespace qcert;

namespace {

HermitianMatrix random_hermitian(std::size_t d, Rng& rng) {
  const CMatrix g = ginibre(d, d, rng);
  return HermitianMatrix(g + g.adjoint());
}

HermitianMatrix traceless(const HermitianMatrix& h) {
  const double shift = h.trace() / static_cast<double>(h.dim());
  CMatrix m = h.matrix();
  for (std::size_t i = 0; i < h.dim(); ++i) m(i, i) -= shift;
  return HermitianMatrix(m);
}

}  // namespace

TEST_CASE("permutations") {
  const Permutation p({1, 2, 0, 4, 3});
  CHECK(p.cycle_type() == std::vector<int>{3, 2});
  CHECK(p * p.inverse() == Permutation::identity(5));
  CHECK(all_permutations(4).size() == 24);
  CHECK(all_permutations(0).size() == 1);
  CHECK_THROWS_AS(Permutation({0, 0}), ValidationError);
  CHECK_THROWS_AS(all_permutations(7), UnsupportedRange);
}

TEST_CASE("Weingarten values") {
  for (std::size_t d = 1; d <= 8; ++d) CHECK(weingarten_table(1, d)(Permutation::identity(1)) == doctest::Approx(1.0 / d));
  for (std::size_t d = 2; d <= 8; ++d) {
    const double dd = static_cast<double>(d);
    const auto wg = weingarten_table(2, d);
    CHECK(std::abs(wg(Permutation({0, 1})) - 1.0 / (dd * dd - 1.0)) <= 1e-12);
    CHECK(std::abs(wg(Permutation({1, 0})) + 1.0 / (dd * (dd * dd - 1.0))) <= 1e-12);
  }
  // Known closed form for the 3-cycle class at l = 3.
  const double d = 5.0;
  CHECK(weingarten_table(3, 5)(Permutation({1, 2, 0})) ==
        doctest::Approx(2.0 / (d * (d * d - 1.0) * (d * d - 4.0))).epsilon(1e-12));
  for (std::size_t l = 1; l <= 4; ++l)
    for (std::size_t dd = 4; dd <= 8; ++dd) CHECK(weingarten_orthogonality_residual(weingarten_table(l, dd)) <= 1e-10);
  CHECK(weingarten_orthogonality_residual(weingarten_table(6, 6)) <= 1e-10);
  CHECK_THROWS_AS(weingarten_table(3, 2), UnsupportedRange);
  CHECK_THROWS_AS(weingarten_table(7, 8), UnsupportedRange);
}

TEST_CASE("Haar moments") {
  Rng rng(51);
  const HermitianMatrix id(CMatrix::identity(5));
  CHECK(haar_moment(id, id, 1) == doctest::Approx(5.0));
  for (std::size_t d : {2u, 3u, 6u}) {
    const auto m = random_hermitian(d, rng);
    const double dd = static_cast<double>(d);
    const double tr = m.trace(), tr2 = m.matrix().hs_norm() * m.matrix().hs_norm();
    const HermitianMatrix proj(CMatrix::diagonal([&] {
      std::vector<double> v(d, 0.0);
      v[0] = 1.0;
      return v;
    }()));
    CHECK(haar_moment(proj, m, 2) == doctest::Approx((tr * tr + tr2) / (dd * (dd + 1.0))).epsilon(1e-10));
    const auto t = traceless(m);
    const auto wg = weingarten_table(2, d);
    const double t2 = t.matrix().hs_norm() * t.matrix().hs_norm();
    CHECK(haar_moment(proj, t, 2) ==
          doctest::Approx(t2 * (wg(Permutation({0, 1})) + wg(Permutation({1, 0})))).epsilon(1e-10));
  }
  for (int c = 0; c < 3; ++c) {
    const std::size_t d = 2 + static_cast<std::size_t>(c);
    const auto a = random_hermitian(d, rng), b = random_hermitian(d, rng);
    const std::size_t l = 1 + static_cast<std::size_t>(c);
    const auto mc = haar_moment_mc(a, b, l, 100000, rng);
    CHECK(std::abs(mc.mean - haar_moment(a, b, l)) <= 4.0 * mc.std_error);
  }
}

TEST_CASE("moments of the basic statistic") {
  Rng rng(52);
  const auto r = verify_moments_basic(HermitianMatrix(CMatrix::diagonal({1.0, -1.0})), 100000, rng);
  CHECK(r.first_expected == doctest::Approx(2.0 / 3.0));
  CHECK(r.first_pass);
  CHECK(r.second.mean >= r.jensen_floor - 3.0 * r.second.std_error);
  const auto zero = verify_moments_basic(HermitianMatrix(CMatrix(3, 3)), 10, rng);
  CHECK(zero.first.mean == 0.0);
  CHECK(zero.second.mean == 0.0);
  CHECK(zero.second_pass);
}

TEST_CASE("exact transcript divergences") {
  Rng rng(53);
  const auto sigma = DensityMatrix::diagonal({0.75, 0.25});
  NonadaptiveSchedule none;
  const auto inst = make_corner(Spectrum(sigma.diag()), 0.3);
  const auto ens = StateEnsemble::uniform({build_corner(sigma, inst, 1), build_corner(sigma, inst, -1)});
  auto r = exact_transcript_divergence(sigma, ens, none);
  CHECK(r.tv == 0.0);
  CHECK(r.chi2 == 0.0);
  CHECK(r.kl == 0.0);

  NonadaptiveSchedule sched;
  for (int t = 0; t < 5; ++t) sched.povms.push_back(basis_povm(haar_unitary(2, rng)));
  r = exact_transcript_divergence(sigma, StateEnsemble::uniform({sigma}), sched);
  CHECK(r.tv <= 1e-15);
  CHECK(r.chi2 <= 1e-15);

  r = exact_transcript_divergence(sigma, ens, sched);
  CHECK(r.transcripts == 32);
  const double floor = std::pow(1.0 - 32.0 * 0.09 / 9.0, 2.5);
  CHECK(r.min_likelihood_ratio >= floor - 1e-12);
  CHECK(r.tv <= 1.0 - floor);
  CHECK(2.0 * r.tv * r.tv <= r.chi2);
  CHECK(r.kl <= std::log1p(r.chi2));

  NonadaptiveSchedule big;
  for (int t = 0; t < 20; ++t) big.povms.push_back(basis_povm(CMatrix::identity(2)));
  CHECK_THROWS_AS(exact_transcript_divergence(sigma, ens, big), UnsupportedRange);
}

TEST_CASE("Ingster bound") {
  CHECK(ingster_bound(std::vector<double>(10, 0.0), 7).bound == 0.0);
  CHECK(ingster_bound(std::vector<double>(10, 0.1), 3).bound == doctest::Approx(std::pow(1.1, 3) - 1.0));
  CHECK_THROWS_AS(ingster_bound(std::vector<double>{-1.0}, 2), ValidationError);

  Rng rng(54);
  const auto sigma = DensityMatrix::diagonal({0.75, 0.25});
  const auto inst = make_corner(Spectrum(sigma.diag()), 0.3);
  const std::vector<DensityMatrix> alts{build_corner(sigma, inst, 1), build_corner(sigma, inst, -1)};
  for (std::size_t n = 1; n <= 4; ++n) {
    NonadaptiveSchedule sched;
    std::vector<std::vector<double>> phis;
    for (std::size_t t = 0; t < n; ++t) {
      sched.povms.push_back(basis_povm(haar_unitary(2, rng)));
      std::vector<double> step;
      for (const auto& a : alts)
        for (const auto& b : alts) step.push_back(phi(sched.povms.back(), sigma, a, b));
      phis.push_back(step);
    }
    const double chi = exact_transcript_divergence(sigma, StateEnsemble::uniform(alts), sched).chi2;
    const auto ing = ingster_bound(phis, n);
    CHECK(chi <= ing.bound + 1e-12);

    NonadaptiveSchedule repeated;
    for (std::size_t t = 0; t < n; ++t) repeated.povms.push_back(sched.povms.front());
    const double chi_rep = exact_transcript_divergence(sigma, StateEnsemble::uniform(alts), repeated).chi2;
    CHECK(chi_rep == doctest::Approx(ingster_bound(phis.front(), n).bound).epsilon(1e-10));
  }
}
