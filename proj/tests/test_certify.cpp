#include <doctest.h>

#include <cmath>
#include <fstream>

#include "qcert/certify.hpp"
#include "qcert/errors.hpp"
#include "qcert/experiments.hpp"
#include "qcert/instances.hpp"

using namespace qcert;

namespace {

const std::vector<double> kTwoBucket{0.002, 0.002, 0.249, 0.249, 0.249, 0.083, 0.083, 0.083};

}  // namespace

TEST_CASE("basic certification on one dimension is trivial") {
  CopySource src(DensityMatrix::maximally_mixed(1), 0, Rng(1));
  const auto v = basic_certify(src, DensityMatrix::maximally_mixed(1), 0.3, 0.1, CertifyConfig{});
  CHECK(v.answer == Answer::Yes);
  CHECK(v.copies_used == 0);
}

TEST_CASE("basic certification null and alternative") {
  const std::size_t d = 8;
  const auto sigma = DensityMatrix::maximally_mixed(d);
  CertifyConfig cfg;
  int yes_null = 0, no_alt = 0;
  const int trials = 30;
  for (int t = 0; t < trials; ++t) {
    cfg.seed = stream_id(7, static_cast<std::uint64_t>(t));
    CopySource null_src(sigma, 1u << 30, Rng(cfg.seed, 100));
    const auto a = basic_certify(null_src, sigma, 0.3, 0.1, cfg);
    CHECK(a.copies_used == null_src.copies_used());
    if (a.answer == Answer::Yes) ++yes_null;
    Rng alt_rng(cfg.seed, 200);
    CopySource alt_src(hs_far_from_mixed(d, 0.3, alt_rng), 1u << 30, Rng(cfg.seed, 101));
    if (basic_certify(alt_src, sigma, 0.3, 0.1, cfg).answer == Answer::No) ++no_alt;
  }
  CHECK(yes_null >= trials - 3);
  CHECK(no_alt >= trials - 3);
}

TEST_CASE("basic certification is deterministic and reports exhaustion") {
  const auto sigma = DensityMatrix::maximally_mixed(4);
  CertifyConfig cfg;
  cfg.seed = 99;
  CopySource a(sigma, 1u << 30, Rng(5)), b(sigma, 1u << 30, Rng(5));
  const auto va = basic_certify(a, sigma, 0.3, 0.1, cfg), vb = basic_certify(b, sigma, 0.3, 0.1, cfg);
  CHECK(va.answer == vb.answer);
  CHECK(va.copies_used == vb.copies_used);
  CHECK(va.checks.front().rejections == vb.checks.front().rejections);
  CopySource poor(sigma, 100, Rng(5));
  const auto vp = basic_certify(poor, sigma, 0.3, 0.1, cfg);
  CHECK(vp.answer == Answer::Inconclusive);
  CHECK(vp.copies_used == 100);
  CHECK_THROWS_AS(basic_certify(poor, sigma, 2.5, 0.1, cfg), ValidationError);
}

TEST_CASE("certify on a two-bucket state") {
  const auto sigma = DensityMatrix::diagonal(kTwoBucket);
  CertifyConfig cfg;
  cfg.eps = 0.3;
  cfg.delta = 0.2;
  const int trials = 10;
  int yes = 0, no_off = 0, no_tail = 0;
  for (int t = 0; t < trials; ++t) {
    cfg.seed = stream_id(11, static_cast<std::uint64_t>(t));
    CopySource src(sigma, ~std::uint64_t{0}, Rng(cfg.seed, 1));
    const auto v = certify(src, sigma, cfg);
    CHECK(v.copies_used == src.copies_used());
    if (v.answer == Answer::Yes) ++yes;

    Rng inst_rng(cfg.seed, 2);
    const auto off = build_offdiag(sigma, make_offdiag(Spectrum(kTwoBucket), 0.3, 2, 3), inst_rng);
    CopySource off_src(off, ~std::uint64_t{0}, Rng(cfg.seed, 3));
    if (certify(off_src, sigma, cfg).answer == Answer::No) ++no_off;

    auto tail = kTwoBucket;
    tail[0] += 0.01125;
    tail[1] += 0.01125;
    tail[2] -= 0.0225;
    CopySource tail_src(DensityMatrix::diagonal(tail), ~std::uint64_t{0}, Rng(cfg.seed, 4));
    const auto vt = certify(tail_src, sigma, cfg);
    if (vt.answer == Answer::No && vt.fired == "tail") ++no_tail;
  }
  CHECK(yes >= trials - 1);
  CHECK(no_off >= trials - 1);
  CHECK(no_tail >= trials - 1);
}

TEST_CASE("certify rotates a non-diagonal sigma") {
  Rng rng(12);
  const CMatrix v = haar_unitary(4, rng);
  const CMatrix sig = v * CMatrix::diagonal({0.4, 0.3, 0.2, 0.1}) * v.adjoint();
  const DensityMatrix sigma(sig);
  CertifyConfig cfg;
  cfg.eps = 0.3;
  cfg.delta = 0.2;
  cfg.seed = 3;
  CopySource same(sigma, ~std::uint64_t{0}, Rng(4));
  CHECK(certify(same, sigma, cfg).answer == Answer::Yes);
  // Swap two eigenvalues in the same basis: trace distance 0.4.
  const DensityMatrix other(CMatrix(v * CMatrix::diagonal({0.2, 0.3, 0.4, 0.1}) * v.adjoint()));
  CopySource far(other, ~std::uint64_t{0}, Rng(5));
  CHECK(certify(far, sigma, cfg).answer == Answer::No);
}

TEST_CASE("certify determinism, budget and JSON") {
  const auto sigma = DensityMatrix::diagonal(kTwoBucket);
  CertifyConfig cfg;
  cfg.seed = 21;
  CopySource a(sigma, ~std::uint64_t{0}, Rng(8)), b(sigma, ~std::uint64_t{0}, Rng(8));
  const auto va = certify(a, sigma, cfg), vb = certify(b, sigma, cfg);
  CHECK(to_json(va).dump() == to_json(vb).dump());
  CopySource poor(sigma, 1000, Rng(8));
  const auto vp = certify(poor, sigma, cfg);
  CHECK(vp.answer == Answer::Inconclusive);
  CHECK(vp.copies_used == 1000);
  const auto j = to_json(va);
  CHECK(j["answer"] == "YES");
  CHECK(j["checks"].size() == va.checks.size());
  cfg.eps = 1.0;
  CHECK_THROWS_AS(certify(a, sigma, cfg), ValidationError);
  const auto round = config_from_json(to_json(CertifyConfig{}));
  CHECK(round.c_basic == CertifyConfig{}.c_basic);
}

TEST_CASE("code defaults match the shipped configuration") {
  std::ifstream in(std::string(QCERT_SOURCE_DIR) + "/config/certify.json");
  REQUIRE(in.good());
  const auto file = nlohmann::json::parse(in);
  CHECK(file == to_json(CertifyConfig{}));
}
