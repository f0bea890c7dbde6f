#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qcert/experiments.hpp"

namespace qcert {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::size_t cases = 0;
  nlohmann::json metrics = nlohmann::json::object();
  std::string summary;  // one line of the key numbers
};

nlohmann::json to_json(const CheckResult& r);

struct VerifyOptions {
  std::uint64_t seed = 20240601;
  std::size_t threads = 1;
  CertifyConfig certify;   // constants for the certification checks
  SweepSettings sweep;     // minimal-N sweep inputs
};

// Moment identities of Z = sum_i (U_i^dagger M U_i)^2 on random traceless M, one per d.
CheckResult check_moments(const std::vector<std::size_t>& dims, std::size_t samples, std::uint64_t seed);
// Exact l = 2 Weingarten values for d = 2..8 and haar_moment against Monte Carlo on fuzzed (A, B, l <= 3).
CheckResult check_weingarten(std::size_t cases, std::size_t mc_samples, std::uint64_t seed, std::size_t threads);
// PSD, unit trace and trace distance of Paninski, off-diagonal and corner draws.
CheckResult check_instances(std::size_t draws, std::uint64_t seed);
// Likelihood-ratio floor and TV bound for the corner ensemble on random rank-one schedules.
CheckResult check_corner(std::size_t schedules, double eps, std::size_t n, std::uint64_t seed);
// Exact chi-squared of the corner ensemble against the per-step Ingster bound for N = 1..n_max.
CheckResult check_ingster(std::size_t schedules, double eps, std::size_t n_max, std::uint64_t seed);
// Null and HS-far error rates of basic_certify.
CheckResult check_basic_power(std::size_t d, std::size_t trials, const CertifyConfig& cfg, std::uint64_t seed,
                              std::size_t threads);
// Fitted exponent of the minimal-N sweep.
CheckResult check_basic_sweep(const SweepSettings& s, double slope_lo, double slope_hi, std::size_t threads);
// certify on the two-bucket d = 8 state against the null, off-diagonal and tail alternatives.
CheckResult check_certify_two_bucket(std::size_t trials, const CertifyConfig& cfg, std::uint64_t seed,
                                     std::size_t threads);
// Exponent of certify copies on the maximally mixed state.
CheckResult check_certify_scaling(const std::vector<std::size_t>& dims, std::size_t trials, const CertifyConfig& cfg,
                                  std::uint64_t seed, std::size_t threads);
// predicted_bounds on the maximally mixed and spiked families.
CheckResult check_bounds();
// Block-projected POVMs reproduce outcome laws on block-diagonal states.
CheckResult check_pushforward(std::size_t cases, std::uint64_t seed);

CheckResult check_tracepsd(std::size_t cases, std::uint64_t seed);
CheckResult check_schur(std::size_t cases, std::uint64_t seed);
CheckResult check_optimize(std::size_t cases, std::uint64_t seed);
CheckResult check_geoseries(std::size_t cases, std::uint64_t seed);
CheckResult check_sort_mix(std::size_t cases, std::uint64_t seed);
// Exact E_U[g^2] for bucket-restricted elements against Paninski alternatives.
CheckResult check_phi_second_moment(std::size_t cases, std::uint64_t seed);

// E_{z,U}[g^2] for the off-diagonal ensemble against C eps^2 / (d_j'^2 2^{-j'}).
CheckResult check_offdiag_second_moment(std::size_t cases, std::size_t draws, double c, std::uint64_t seed);
// Mean of g over Paninski draws at a fixed outcome.
CheckResult check_paninski_mean(std::size_t draws, std::uint64_t seed);
// Empirical tail of phi^{U,V} for the Paninski ensemble around I/d.
CheckResult check_phi_tail(std::size_t d, std::size_t pairs, std::uint64_t seed);

struct NamedCheck {
  std::string name;
  std::string group;  // "acceptance", "scaling", "property" or "measurement"
  std::function<CheckResult(const VerifyOptions&)> run;
};

// Every check at its acceptance-scale parameters, in a stable order.
const std::vector<NamedCheck>& verification_battery();
const NamedCheck& find_check(const std::string& name);

}  // namespace qcert
