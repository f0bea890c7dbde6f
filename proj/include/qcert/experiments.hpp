#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qcert/certify.hpp"

namespace qcert {

// Runs body(i) for i in [0, n) on up to `threads` workers. Results must be written by index.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& body);

// (1 - s) I/d + s |psi><psi| with Haar psi and s set so that |rho - I/d|_HS = hs.
DensityMatrix hs_far_from_mixed(std::size_t d, double hs, Rng& rng);

struct TrialRecord {
  std::uint64_t seed = 0;
  std::string family;
  Answer answer = Answer::Yes;
  std::uint64_t copies = 0;
  double wall_ms = 0.0;
  std::string fired;
};

struct RateSummary {
  std::size_t trials = 0;
  std::size_t yes = 0;
  std::size_t no = 0;
  std::size_t inconclusive = 0;
  double mean_copies = 0.0;
  double yes_rate() const { return trials ? static_cast<double>(yes) / static_cast<double>(trials) : 0.0; }
  double no_rate() const { return trials ? static_cast<double>(no) / static_cast<double>(trials) : 0.0; }
};

RateSummary summarize(const std::vector<TrialRecord>& rows);

// Hidden-state families for certification trials against a fixed sigma.
enum class HiddenFamily { Null, HsFar, OffDiagonal, Tail, Paninski };
std::string to_string(HiddenFamily f);
HiddenFamily hidden_family_from_string(const std::string& s);

struct TrialPlan {
  DensityMatrix sigma;
  HiddenFamily family = HiddenFamily::Null;
  bool full = true;          // certify (true) or basic_certify (false)
  double alt_eps = 0.3;      // HS gap for HsFar, trace distance for OffDiagonal / Paninski, eps for Tail
  std::optional<int> j;      // off-diagonal buckets
  std::optional<int> jp;
  std::uint64_t budget = ~std::uint64_t{0};
  std::uint64_t experiment = 0;
};

// Tail alternative: moves eps/2 of mass evenly onto the upper-removal tail, taken proportionally from the
// other entries, so |rho - sigma|_1 = eps.
DensityMatrix tail_alternative(const std::vector<double>& lambdas, double eps);
DensityMatrix draw_hidden_state(const TrialPlan& plan, Rng& rng);

std::vector<TrialRecord> run_trials(const TrialPlan& plan, const CertifyConfig& cfg, std::size_t trials,
                                    std::uint64_t master_seed, std::size_t threads);

struct SinglePower {
  double c_basic = 0.0;
  double null_accept = 0.0;
  double alt_reject = 0.0;
};

struct CalibrationResult {
  std::size_t d = 0;
  double eps = 0.0;
  double c_l2 = 1.0;
  std::size_t trials = 0;
  std::vector<SinglePower> grid;
  std::optional<double> chosen;  // smallest grid value with single-round power >= target on both sides
};

// Single-round rates of basic_certify against hs_far_from_mixed over a grid of c_basic values.
CalibrationResult calibrate_basic(std::size_t d, double eps, double c_l2, const std::vector<double>& grid,
                                  std::size_t trials, std::uint64_t seed, double target, std::size_t threads);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double std_error = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  bool defined = false;
};

// Least-squares fit of log y = a + b log x with a 95% t-interval for b.
SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

struct SweepPoint {
  std::size_t d = 0;
  std::uint64_t min_copies = 0;     // per round (basic) or total observed copies (full)
  double null_accept = 0.0;
  double alt_reject = 0.0;
  std::size_t evaluations = 0;
};

struct SweepResult {
  std::vector<SweepPoint> points;
  SlopeFit fit;
};

// Minimal per-round copies N such that basic_certify reaches `target` YES-rate on I/d and NO-rate
// on hs_far_from_mixed, by doubling then binary search; common random numbers across N.
SweepResult sweep_basic(const std::vector<std::size_t>& dims, const CertifyConfig& cfg, std::size_t trials,
                        std::uint64_t seed, double target, std::size_t threads);

// Mean total copies of certify on the maximally mixed state for each d, with the fitted exponent.
SweepResult sweep_certify_mixed(const std::vector<std::size_t>& dims, const CertifyConfig& cfg, std::size_t trials,
                                std::uint64_t seed, std::size_t threads);

// Inputs of a minimal-N sweep of basic_certify; defaults match config/sweep.json.
struct SweepSettings {
  std::vector<std::size_t> dims{4, 8, 16, 32};
  double eps = 0.3;
  double delta = 0.1;
  double target = 0.9;
  std::size_t trials = 400;
  std::uint64_t seed = 3;
  std::optional<std::size_t> rounds = 1;
  double c_l2 = 0.45;
};

nlohmann::json to_json(const SweepSettings& s);
SweepSettings sweep_settings_from_json(const nlohmann::json& j, SweepSettings base = {});
SweepResult run_sweep(const SweepSettings& s, std::size_t threads);

// Named spectrum families: "mm" (I/d), "rank" (uniform over the first `rank` entries), "spiked"
// (1 - 1/d followed by d entries 1/d^2, dimension d + 1) and "geometric" (entries proportional to ratio^i).
struct SigmaSpec {
  std::string family = "mm";
  std::size_t d = 4;
  std::size_t rank = 1;
  double ratio = 0.5;
};
std::vector<double> family_spectrum(const SigmaSpec& s);
nlohmann::json to_json(const SigmaSpec& s);
// Accepts {"lambdas": [...]} or a bare array; nonnegative entries are normalized to sum 1.
std::vector<double> spectrum_from_json(const nlohmann::json& j);

nlohmann::json to_json(const SweepResult& r);
nlohmann::json to_json(const CalibrationResult& r);

}  // namespace qcert
