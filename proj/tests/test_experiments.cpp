#include <doctest.h>

#include <cmath>
#include <fstream>

#include "qcert/errors.hpp"
#include "qcert/experiments.hpp"

using namespace qcert;

TEST_CASE("parallel_for covers every index and rethrows") {
  std::vector<int> hits(100, 0);
  parallel_for(100, 4, [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) CHECK(h == 1);
  CHECK_THROWS_AS(parallel_for(10, 3, [](std::size_t i) {
                    if (i == 7) throw ValidationError("boom");
                  }),
                  ValidationError);
}

TEST_CASE("HS-far states sit at the requested distance") {
  Rng rng(5);
  for (std::size_t d : {2, 5, 16}) {
    const auto rho = hs_far_from_mixed(d, 0.3, rng);
    const auto mm = DensityMatrix::maximally_mixed(d);
    const CMatrix diff = rho.matrix() - mm.matrix();
    CHECK(std::sqrt(trace_product(diff, diff)) == doctest::Approx(0.3).epsilon(1e-10));
  }
  CHECK_THROWS_AS(hs_far_from_mixed(2, 1.0, rng), InfeasibleError);
}

TEST_CASE("tail alternative") {
  const std::vector<double> v{0.002, 0.002, 0.249, 0.249, 0.249, 0.083, 0.083, 0.083};
  const auto rho = tail_alternative(v, 0.3);
  const auto sigma = DensityMatrix::diagonal(v);
  CHECK(trace_distance(rho, sigma) == doctest::Approx(0.3).epsilon(1e-12));
  for (double x : rho.diag()) CHECK(x >= 0.0);
  CHECK_THROWS_AS(tail_alternative(std::vector<double>(4, 0.25), 0.3), UnavailableError);
}

TEST_CASE("family names round trip") {
  for (auto f : {HiddenFamily::Null, HiddenFamily::HsFar, HiddenFamily::OffDiagonal, HiddenFamily::Tail,
                 HiddenFamily::Paninski})
    CHECK(hidden_family_from_string(to_string(f)) == f);
  CHECK_THROWS_AS(hidden_family_from_string("nope"), ValidationError);
}

TEST_CASE("trial rows do not depend on the thread count") {
  TrialPlan plan{DensityMatrix::maximally_mixed(4), HiddenFamily::HsFar, false, 0.3, std::nullopt, std::nullopt};
  CertifyConfig cfg;
  cfg.rounds = 3;
  const auto a = run_trials(plan, cfg, 12, 99, 1);
  const auto b = run_trials(plan, cfg, 12, 99, 3);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].seed == b[i].seed);
    CHECK(a[i].answer == b[i].answer);
    CHECK(a[i].copies == b[i].copies);
  }
  const auto c = run_trials(plan, cfg, 12, 100, 1);
  CHECK(a[0].seed != c[0].seed);
}

TEST_CASE("log-log fit") {
  const std::vector<double> x{4, 8, 16, 32};
  std::vector<double> y;
  for (double v : x) y.push_back(3.0 * std::pow(v, 1.5));
  const auto f = fit_loglog(x, y);
  CHECK(f.defined);
  CHECK(f.slope == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(f.std_error <= 1e-10);
  CHECK_FALSE(fit_loglog({4}, {1}).defined);
  CHECK_THROWS_AS(fit_loglog({1, 2}, {0, 1}), ValidationError);
}

TEST_CASE("sweep defaults match the shipped configuration") {
  std::ifstream in(std::string(QCERT_SOURCE_DIR) + "/config/sweep.json");
  REQUIRE(in.good());
  const auto file = nlohmann::json::parse(in);
  CHECK(file == to_json(SweepSettings{}));
  CHECK(to_json(sweep_settings_from_json(file)) == file);
  CHECK_THROWS_AS(sweep_settings_from_json(nlohmann::json{{"dims", std::vector<int>{}}}), ValidationError);
}

TEST_CASE("spectrum families") {
  CHECK(family_spectrum({"mm", 4, 1, 0.5}) == std::vector<double>(4, 0.25));
  CHECK(family_spectrum({"rank", 4, 2, 0.5}) == std::vector<double>{0.5, 0.5, 0.0, 0.0});
  const auto s = family_spectrum({"spiked", 4, 1, 0.5});
  REQUIRE(s.size() == 5);
  CHECK(s[0] == doctest::Approx(0.75));
  CHECK(s[4] == doctest::Approx(0.0625));
  const auto g = family_spectrum({"geometric", 3, 1, 0.5});
  CHECK(g[0] == doctest::Approx(4.0 / 7.0));
  CHECK(g[2] == doctest::Approx(1.0 / 7.0));
  CHECK_THROWS_AS(family_spectrum({"rank", 4, 5, 0.5}), ValidationError);
  CHECK_THROWS_AS(family_spectrum({"bogus", 4, 1, 0.5}), ValidationError);
  CHECK(spectrum_from_json(nlohmann::json{{"lambdas", {1, 3}}}) == std::vector<double>{0.25, 0.75});
  CHECK_THROWS_AS(spectrum_from_json(nlohmann::json::array({0, 0})), ValidationError);
  CHECK_THROWS_AS(spectrum_from_json(nlohmann::json::array({-1, 2})), ValidationError);
}
