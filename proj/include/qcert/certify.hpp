#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qcert/linalg.hpp"
#include "qcert/measurement.hpp"
#include "qcert/random.hpp"

namespace qcert {

enum class BucketCountMode {
  Observed,     // m = max(1, number of surviving buckets)
  Logarithmic,  // m = max(1, ln(10 d / eps^2))
};

struct CertifyConfig {
  double eps = 0.3;
  double delta = 0.1;
  double c_basic = 16.0;  // copies per round: ceil(c_basic sqrt(d) / eps_hs^2)
  double c_l2 = 0.7;      // l2 threshold: c_l2 eps_hs / sqrt(d)
  double c_trace = 1.0;   // multiplier on the Hoeffding copy count of each trace gate
  double c_tail = 50.0;   // tail gate copies: ceil(c_tail ln(3/delta) / eps^2)
  BucketCountMode m_mode = BucketCountMode::Observed;
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> copies_per_round;  // overrides the basic round size
  std::optional<std::size_t> rounds;              // overrides the majority round count

  void validate() const;
};

nlohmann::json to_json(const CertifyConfig& cfg);
CertifyConfig config_from_json(const nlohmann::json& j, CertifyConfig base = {});

enum class Answer { Yes, No, Inconclusive };
std::string to_string(Answer a);

struct CheckRecord {
  std::string name;     // "tail", "bucket", "pair", "basic"
  std::vector<int> buckets;
  std::string outcome;  // "pass", "reject", "skipped-*"
  double sigma_trace = 0.0;
  double observed_fraction = 0.0;
  double threshold = 0.0;
  std::uint64_t copies = 0;
  double eps_hs = 0.0;
  std::uint64_t copies_per_round = 0;
  std::size_t rounds = 0;
  std::size_t rejections = 0;
};

struct Verdict {
  Answer answer = Answer::Yes;
  std::uint64_t copies_used = 0;
  std::string fired;  // first check that rejected, or the reason for an inconclusive run
  double m = 1.0;
  std::vector<CheckRecord> checks;
};

nlohmann::json to_json(const Verdict& v);

// Distinguishes rho = sigma from |rho - sigma|_HS > eps_hs with Haar-basis measurements and
// the l2 two-sample tester.
Verdict basic_certify(MeasurementChannel& channel, const DensityMatrix& sigma, double eps_hs, double delta,
                      const CertifyConfig& cfg, Rng& rng);
Verdict basic_certify(MeasurementChannel& channel, const DensityMatrix& sigma, double eps_hs, double delta,
                      const CertifyConfig& cfg);

// Distinguishes rho = sigma from |rho - sigma|_1 > eps through tail, per-bucket and per-pair checks.
Verdict certify(MeasurementChannel& channel, const DensityMatrix& sigma, const CertifyConfig& cfg);

}  // namespace qcert
