#include <doctest.h>

#include <cmath>

#include "qcert/errors.hpp"
#include "qcert/instances.hpp"

using namespace qcert;

namespace {

Spectrum uniform(std::size_t d) { return Spectrum(std::vector<double>(d, 1.0 / static_cast<double>(d))); }

double bucket_sum(const PaninskiInstance& inst) {
  double s = 0.0;
  for (const auto& [j, ej] : inst.eps_j) s += 2.0 * static_cast<double>(inst.buckets.size(j) / 2) * ej;
  return s;
}

}  // namespace

TEST_CASE("paninski tuning on the maximally mixed state") {
  const auto inst = tune_paninski(uniform(4), 0.2);
  REQUIRE(inst.eps_j.size() == 1);
  CHECK(inst.eps_j.at(1) == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(inst.residual <= 1e-10);
}

TEST_CASE("paninski tuning at saturation") {
  const auto spec = uniform(4);
  const double sat = paninski_saturation(bucketize(spec));
  CHECK(sat == doctest::Approx(1.0));
  const auto inst = tune_paninski(spec, sat);
  CHECK(inst.eps_j.at(1) == 0.25);
  CHECK_THROWS_AS(tune_paninski(spec, sat + 0.01), InfeasibleError);
  try {
    tune_paninski(spec, 1.5);
  } catch (const InfeasibleError& e) {
    CHECK(e.max_feasible() == doctest::Approx(1.0));
  }
  CHECK_THROWS_AS(tune_paninski(Spectrum({0.7, 0.3}), 0.1), UnavailableError);
}

TEST_CASE("paninski two-bucket tuning residual") {
  // d = 16: four entries of mass 1/8 and twelve of mass 1/24.
  std::vector<double> v(16, 0.5 / 12.0);
  for (int i = 0; i < 4; ++i) v[i] = 0.125;
  const auto inst = tune_paninski(Spectrum(v), 0.1);
  CHECK(inst.eps_j.size() == 2);
  CHECK(bucket_sum(inst) == doctest::Approx(0.1).epsilon(1e-10));
  for (const auto& [j, ej] : inst.eps_j) CHECK(ej <= std::exp2(-j - 1.0));
}

TEST_CASE("paninski samples") {
  Rng rng(8);
  const auto spec = uniform(4);
  const auto sigma = DensityMatrix::diagonal(spec.values());
  const auto zero = tune_paninski(spec, 0.0);
  CHECK((sample_paninski(sigma, zero, rng).matrix() - sigma.matrix()).max_abs() <= 1e-15);
  const auto inst = tune_paninski(spec, 0.2);
  for (int t = 0; t < 20; ++t) {
    const auto rho = sample_paninski(sigma, inst, rng);
    const auto e = eigenvalues(rho.hermitian());
    CHECK(e[0] == doctest::Approx(0.2).epsilon(1e-10));
    CHECK(e[1] == doctest::Approx(0.2).epsilon(1e-10));
    CHECK(e[2] == doctest::Approx(0.3).epsilon(1e-10));
    CHECK(e[3] == doctest::Approx(0.3).epsilon(1e-10));
    CHECK(trace_distance(sigma, rho) == doctest::Approx(0.2).epsilon(1e-8));
  }
}

TEST_CASE("paninski block structure follows buckets") {
  Rng rng(9);
  std::vector<double> v{0.3, 0.3, 0.1, 0.1, 0.1, 0.1};
  const auto spec = Spectrum(v);
  const auto inst = tune_paninski(spec, 0.1);
  const auto rho = sample_paninski(DensityMatrix::diagonal(v), inst, rng);
  for (std::size_t a : {0u, 1u})
    for (std::size_t b = 2; b < 6; ++b) CHECK(std::abs(rho.matrix()(a, b)) <= 1e-15);
}

TEST_CASE("off-diagonal 2x2 example") {
  Rng rng(10);
  const auto spec = Spectrum({0.5, 0.5});
  const auto inst = make_offdiag(spec, 0.4);
  CHECK(inst.j == inst.jp);
  CHECK(inst.rows.size() == 1);
  CHECK(inst.cols.size() == 1);
  const auto rho = build_offdiag(DensityMatrix::diagonal(spec.values()), inst, rng);
  CHECK(std::abs(rho.matrix()(0, 1)) == doctest::Approx(0.2));
  const auto e = eigenvalues(rho.hermitian());
  CHECK(e[0] == doctest::Approx(0.3));
  CHECK(e[1] == doctest::Approx(0.7));
  CHECK(trace_distance(rho, DensityMatrix::diagonal(spec.values())) == doctest::Approx(0.4).epsilon(1e-10));
}

TEST_CASE("off-diagonal split and boundary feasibility") {
  Rng rng(11);
  // Bucket 2 of size 4 at its lower edge 1/8; bucket 3 of size 4 at 1/16; remaining mass in bucket 1.
  std::vector<double> v{0.125, 0.125, 0.125, 0.125, 0.0625, 0.0625, 0.0625, 0.0625, 0.25};
  const auto spec = Spectrum(v);
  const auto sigma = DensityMatrix::diagonal(v);
  const auto same = make_offdiag(spec, 0.1, 2, 2);
  CHECK(same.rows == std::vector<std::size_t>{0, 1});
  CHECK(same.cols == std::vector<std::size_t>{2, 3});
  const auto rho = build_offdiag(sigma, same, rng);
  for (std::size_t a = 0; a < 9; ++a)
    for (std::size_t b = 0; b < 9; ++b) {
      const bool allowed = a == b || (a < 2 && b >= 2 && b < 4) || (b < 2 && a >= 2 && a < 4);
      if (!allowed) CHECK(std::abs(rho.matrix()(a, b)) == 0.0);
    }

  const auto cross = make_offdiag(spec, 0.1, 2, 3);
  const double boundary = cross.max_feasible;
  CHECK(boundary == doctest::Approx(4.0 * std::exp2(-2.5)));
  const auto edge = make_offdiag(spec, boundary, 2, 3);
  const CMatrix w = haar_isometry(4, 4, rng);
  const CMatrix m = sigma.matrix() + offdiag_perturbation(9, edge, w);
  const auto e = eigenvalues(HermitianMatrix(m));
  CHECK(e.front() >= -1e-12);
  CHECK_THROWS_AS(make_offdiag(spec, boundary * 1.01, 2, 3), InfeasibleError);
  CHECK_THROWS_AS(make_offdiag(spec, 0.1, 1, 2), ValidationError);
}

TEST_CASE("off-diagonal perturbation is traceless and has trace norm eps") {
  Rng rng(12);
  std::vector<double> v{0.2, 0.2, 0.2, 0.1, 0.1, 0.1, 0.1};
  const auto spec = Spectrum(v);
  const auto inst = make_offdiag(spec, 0.15);
  const auto rho = build_offdiag(DensityMatrix::diagonal(v), inst, rng);
  CHECK(std::abs((rho.matrix() - DensityMatrix::diagonal(v).matrix()).trace()) == 0.0);
  CHECK(trace_distance(rho, DensityMatrix::diagonal(v)) == doctest::Approx(0.15).epsilon(1e-8));
}

TEST_CASE("corner instance") {
  const auto spec = Spectrum({0.75, 0.25});
  const auto sigma = DensityMatrix::diagonal(spec.values());
  const auto inst = make_corner(spec, 0.2);
  const auto plus = build_corner(sigma, inst, 1);
  CHECK(plus.matrix()(0, 0).real() == doctest::Approx(0.74));
  CHECK(plus.matrix()(1, 1).real() == doctest::Approx(0.26));
  CHECK(plus.matrix()(0, 1).real() == doctest::Approx(0.1));
  CHECK(trace_distance(sigma, plus) == doctest::Approx(0.20100).epsilon(1e-4));
  CHECK(trace_distance(sigma, plus) == doctest::Approx(corner_trace_distance(0.2)).epsilon(1e-12));
  const auto minus = build_corner(sigma, inst, -1);
  CHECK(minus.matrix()(0, 1).real() == doctest::Approx(-0.1));
  const auto ep = eigenvalues(plus.hermitian()), em = eigenvalues(minus.hermitian());
  CHECK(ep[0] == doctest::Approx(em[0]));
  CHECK(((plus.matrix() + minus.matrix())(0, 1)) == cplx(0.0));
  const double det = (0.75 - 0.01) * (0.25 + 0.01) - 0.01;
  CHECK(det >= 0.0);
  CHECK_THROWS_AS(make_corner(Spectrum({0.6, 0.4}), 0.2), ValidationError);
  CHECK_THROWS_AS(make_corner(spec, 0.6), ValidationError);
  CHECK_THROWS_AS(make_corner(Spectrum({1.0, 0.0}), 0.2), InfeasibleError);
  CHECK_THROWS_AS(build_corner(sigma, inst, 0), ValidationError);
}
