#include "qcert/certify.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "qcert/classical.hpp"
#include "qcert/errors.hpp"
#include "qcert/spectrum.hpp"

namespace qcert {

namespace {

constexpr std::uint64_t kBasicStream = 1;
constexpr std::uint64_t kCertifyStream = 2;

std::uint64_t ceil_count(double x) {
  if (!(x < 9.0e18)) throw ValidationError("requested copy count overflows");
  return static_cast<std::uint64_t>(std::ceil(std::max(1.0, x)));
}

// Hoeffding count for estimating a fraction to within `margin` with failure probability delta.
std::uint64_t gate_copies(double margin, double delta, double c_trace) {
  return ceil_count(c_trace * std::log(2.0 / delta) / (2.0 * margin * margin));
}

std::vector<double> diagonal_spectrum(const DensityMatrix& sigma, CMatrix* basis) {
  if (sigma.is_diagonal()) {
    if (basis) *basis = CMatrix::identity(sigma.dim());
    return sigma.diag();
  }
  const auto eig = hermitian_eig(sigma.hermitian());
  if (basis) *basis = eig.vectors;
  std::vector<double> lam = eig.values;
  double top = 0.0;
  for (double x : lam) top = std::max(top, x);
  double s = 0.0;
  for (double& x : lam) {
    if (x < 1e-13 * top) x = 0.0;
    s += x;
  }
  for (double& x : lam) x /= s;
  return lam;
}

DensityMatrix conditional_sigma(const std::vector<double>& lam, const std::vector<std::size_t>& idx, double& trace) {
  std::vector<double> sub;
  trace = 0.0;
  for (std::size_t i : idx) {
    sub.push_back(lam[i]);
    trace += lam[i];
  }
  for (double& x : sub) x /= trace;
  return DensityMatrix::diagonal(sub);
}

}  // namespace

void CertifyConfig::validate() const {
  if (!(eps > 0.0)) throw ValidationError("eps must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("delta must lie in (0, 1)");
  if (!(c_basic > 0.0 && c_l2 > 0.0 && c_trace > 0.0 && c_tail > 0.0))
    throw ValidationError("certification constants must be positive");
  if (copies_per_round && *copies_per_round == 0) throw ValidationError("copies per round must be positive");
  if (rounds && *rounds == 0) throw ValidationError("round count must be positive");
}

nlohmann::json to_json(const CertifyConfig& cfg) {
  nlohmann::json j{{"eps", cfg.eps},         {"delta", cfg.delta},     {"c_basic", cfg.c_basic},
                   {"c_l2", cfg.c_l2},       {"c_trace", cfg.c_trace}, {"c_tail", cfg.c_tail},
                   {"m_mode", cfg.m_mode == BucketCountMode::Observed ? "observed" : "logarithmic"},
                   {"seed", cfg.seed}};
  if (cfg.copies_per_round) j["copies_per_round"] = *cfg.copies_per_round;
  if (cfg.rounds) j["rounds"] = *cfg.rounds;
  return j;
}

CertifyConfig config_from_json(const nlohmann::json& j, CertifyConfig base) {
  auto take = [&](const char* key, double& dst) {
    if (j.contains(key)) dst = j.at(key).get<double>();
  };
  take("eps", base.eps);
  take("delta", base.delta);
  take("c_basic", base.c_basic);
  take("c_l2", base.c_l2);
  take("c_trace", base.c_trace);
  take("c_tail", base.c_tail);
  if (j.contains("seed")) base.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("m_mode")) {
    const auto mode = j.at("m_mode").get<std::string>();
    if (mode == "observed") base.m_mode = BucketCountMode::Observed;
    else if (mode == "logarithmic") base.m_mode = BucketCountMode::Logarithmic;
    else throw ValidationError("unknown m_mode: " + mode);
  }
  if (j.contains("copies_per_round")) base.copies_per_round = j.at("copies_per_round").get<std::uint64_t>();
  if (j.contains("rounds")) base.rounds = j.at("rounds").get<std::size_t>();
  base.validate();
  return base;
}

std::string to_string(Answer a) {
  switch (a) {
    case Answer::Yes: return "YES";
    case Answer::No: return "NO";
    case Answer::Inconclusive: return "INCONCLUSIVE";
  }
  return "?";
}

nlohmann::json to_json(const Verdict& v) {
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : v.checks) {
    checks.push_back({{"name", c.name},
                      {"buckets", c.buckets},
                      {"outcome", c.outcome},
                      {"sigma_trace", c.sigma_trace},
                      {"observed_fraction", c.observed_fraction},
                      {"threshold", c.threshold},
                      {"copies", c.copies},
                      {"eps_hs", c.eps_hs},
                      {"copies_per_round", c.copies_per_round},
                      {"rounds", c.rounds},
                      {"rejections", c.rejections}});
  }
  return {{"answer", to_string(v.answer)}, {"copies_used", v.copies_used}, {"fired", v.fired}, {"m", v.m},
          {"checks", checks}};
}

Verdict basic_certify(MeasurementChannel& channel, const DensityMatrix& sigma, double eps_hs, double delta,
                      const CertifyConfig& cfg, Rng& rng) {
  cfg.validate();
  if (!(eps_hs > 0.0 && eps_hs <= 2.0)) throw ValidationError("basic certification needs eps in (0, 2]");
  if (sigma.dim() != channel.dim()) throw ValidationError("sigma dimension does not match the channel");
  const std::size_t d = sigma.dim();
  const std::uint64_t start = channel.copies_used();
  Verdict v;
  CheckRecord rec;
  rec.name = "basic";
  rec.eps_hs = eps_hs;
  if (d == 1) {
    rec.outcome = "pass";
    v.checks.push_back(rec);
    return v;
  }
  const double sd = std::sqrt(static_cast<double>(d));
  const std::uint64_t n = cfg.copies_per_round.value_or(ceil_count(cfg.c_basic * sd / (eps_hs * eps_hs)));
  const std::size_t rounds = cfg.rounds.value_or(majority_rounds(delta));
  const double eps_l2 = cfg.c_l2 * eps_hs / sd;
  rec.copies_per_round = n;
  rec.rounds = rounds;
  rec.threshold = eps_l2;
  try {
    for (std::size_t t = 0; t < rounds; ++t) {
      const Povm m = basis_povm(haar_unitary(d, rng), "haar-basis");
      const SampleCounts x(channel.measure_counts(m, n));
      const SampleCounts y(sample_multinomial(n, outcome_distribution(sigma, m), rng));
      if (l2_round_rejects(x, y, eps_l2)) ++rec.rejections;
    }
  } catch (const BudgetExhausted&) {
    rec.outcome = "budget-exhausted";
    rec.copies = channel.copies_used() - start;
    v.answer = Answer::Inconclusive;
    v.fired = "budget";
    v.copies_used = rec.copies;
    v.checks.push_back(rec);
    return v;
  }
  rec.copies = channel.copies_used() - start;
  const bool accept = 2 * rec.rejections <= rounds;
  rec.outcome = accept ? "pass" : "reject";
  v.answer = accept ? Answer::Yes : Answer::No;
  if (!accept) v.fired = "basic";
  v.copies_used = rec.copies;
  v.checks.push_back(rec);
  return v;
}

Verdict basic_certify(MeasurementChannel& channel, const DensityMatrix& sigma, double eps_hs, double delta,
                      const CertifyConfig& cfg) {
  Rng rng(cfg.seed, kBasicStream);
  return basic_certify(channel, sigma, eps_hs, delta, cfg, rng);
}

Verdict certify(MeasurementChannel& channel, const DensityMatrix& sigma, const CertifyConfig& cfg) {
  cfg.validate();
  if (!(cfg.eps < 1.0)) throw ValidationError("certify needs eps in (0, 1)");
  if (sigma.dim() != channel.dim()) throw ValidationError("sigma dimension does not match the channel");
  const std::size_t d = sigma.dim();
  const double eps = cfg.eps, delta = cfg.delta;
  Rng rng(cfg.seed, kCertifyStream);
  const std::uint64_t start = channel.copies_used();

  CMatrix basis;
  const auto lam = diagonal_spectrum(sigma, &basis);
  RotatedChannel rotated(channel, basis);
  const auto removal = remove_mass_upper(Spectrum(lam), eps);
  const auto& buckets = removal.surviving_buckets;
  const std::vector<int> active = buckets.active();

  Verdict v;
  v.m = cfg.m_mode == BucketCountMode::Observed
            ? std::max(1.0, static_cast<double>(active.size()))
            : std::max(1.0, std::log(10.0 * static_cast<double>(d) / (eps * eps)));
  const double m2 = v.m * v.m;

  auto finish = [&](Answer a, const std::string& fired) {
    v.answer = a;
    v.fired = fired;
    v.copies_used = channel.copies_used() - start;
    return v;
  };

  // Fraction of copies landing in `coords`; NO when it reaches the threshold.
  auto gate = [&](CheckRecord& rec, const std::vector<std::size_t>& coords, std::uint64_t n) {
    const std::uint64_t before = channel.copies_used();
    const auto counts = rotated.measure_counts(projector_povm(d, coords, "projector"), n);
    rec.copies = channel.copies_used() - before;
    rec.observed_fraction = static_cast<double>(counts[0]) / static_cast<double>(n);
    return rec.observed_fraction >= rec.threshold;
  };

  auto run_basic = [&](CheckRecord& rec, const std::vector<std::size_t>& coords, double eps_hs, double dlt) {
    double tr = 0.0;
    const DensityMatrix sig = conditional_sigma(lam, coords, tr);
    ConditionalChannel cond(rotated, coords);
    const Verdict b = basic_certify(cond, sig, std::min(2.0, eps_hs), dlt, cfg, rng);
    const CheckRecord& br = b.checks.front();
    rec.eps_hs = br.eps_hs;
    rec.copies_per_round = br.copies_per_round;
    rec.rounds = br.rounds;
    rec.rejections = br.rejections;
    rec.copies += br.copies;
    return b.answer;
  };

  try {
    // Tail: the removed entries together with the kernel of sigma.
    {
      std::vector<std::size_t> tail = removal.tail;
      for (std::size_t i = 0; i < d; ++i)
        if (lam[i] == 0.0) tail.push_back(i);
      std::sort(tail.begin(), tail.end());
      CheckRecord rec;
      rec.name = "tail";
      for (std::size_t i : tail) rec.sigma_trace += lam[i];
      rec.threshold = eps * eps / 5.0;
      if (tail.empty()) {
        rec.outcome = "skipped-empty";
        v.checks.push_back(rec);
      } else {
        const bool reject = gate(rec, tail, ceil_count(cfg.c_tail * std::log(3.0 / delta) / (eps * eps)));
        rec.outcome = reject ? "reject" : "pass";
        v.checks.push_back(rec);
        if (reject) return finish(Answer::No, "tail");
      }
    }

    // Single buckets, ascending j.
    const double delta3 = delta / (3.0 * v.m);
    for (int j : active) {
      const auto& idx = buckets.buckets.at(j);
      CheckRecord rec;
      rec.name = "bucket";
      rec.buckets = {j};
      rec.sigma_trace = buckets.mass(j, lam);
      const double margin = eps / (40.0 * m2);
      rec.threshold = rec.sigma_trace + margin;
      const bool reject = gate(rec, idx, gate_copies(margin, delta3, cfg.c_trace));
      if (reject) {
        rec.outcome = "reject";
        v.checks.push_back(rec);
        return finish(Answer::No, "bucket:" + std::to_string(j));
      }
      if (rec.sigma_trace < eps / (10.0 * m2)) {
        rec.outcome = "skipped-small-trace";
      } else if (rec.observed_fraction < margin) {
        rec.outcome = "skipped-conditional-floor";
      } else if (idx.size() == 1) {
        rec.outcome = "skipped-singleton";
      } else {
        const double eps_tr = eps / (20.0 * m2 * rec.sigma_trace);
        const double dj = static_cast<double>(idx.size());
        const Answer a = run_basic(rec, idx, eps_tr / std::sqrt(dj), delta3);
        if (a == Answer::Inconclusive) {
          rec.outcome = "budget-exhausted";
          v.checks.push_back(rec);
          return finish(Answer::Inconclusive, "budget");
        }
        rec.outcome = a == Answer::No ? "reject" : "pass";
        if (a == Answer::No) {
          v.checks.push_back(rec);
          return finish(Answer::No, "bucket-basic:" + std::to_string(j));
        }
      }
      v.checks.push_back(rec);
    }

    // Bucket pairs with d_j >= d_j'; ties put the smaller j first; lexicographic order.
    std::vector<std::pair<int, int>> pairs;
    for (std::size_t a = 0; a < active.size(); ++a)
      for (std::size_t b = a + 1; b < active.size(); ++b) {
        int j = active[a], jp = active[b];
        if (buckets.size(jp) > buckets.size(j)) std::swap(j, jp);
        pairs.emplace_back(j, jp);
      }
    std::sort(pairs.begin(), pairs.end());
    const double delta4 = delta / (3.0 * m2);
    for (const auto& [j, jp] : pairs) {
      std::vector<std::size_t> idx = buckets.buckets.at(j);
      const auto& other = buckets.buckets.at(jp);
      idx.insert(idx.end(), other.begin(), other.end());
      std::sort(idx.begin(), idx.end());
      CheckRecord rec;
      rec.name = "pair";
      rec.buckets = {j, jp};
      rec.sigma_trace = buckets.mass(j, lam) + buckets.mass(jp, lam);
      const double margin = eps / (20.0 * m2);
      rec.threshold = rec.sigma_trace + margin;
      const bool reject = gate(rec, idx, gate_copies(margin, delta4, cfg.c_trace));
      const std::string tag = std::to_string(j) + "," + std::to_string(jp);
      if (reject) {
        rec.outcome = "reject";
        v.checks.push_back(rec);
        return finish(Answer::No, "pair:" + tag);
      }
      if (rec.sigma_trace < eps / (5.0 * m2)) {
        rec.outcome = "skipped-small-trace";
      } else if (rec.observed_fraction < margin) {
        rec.outcome = "skipped-conditional-floor";
      } else {
        const double eps_tr = eps / (10.0 * m2 * rec.sigma_trace);
        const Answer a = run_basic(rec, idx, eps_tr / std::sqrt(static_cast<double>(idx.size())), delta4);
        if (a == Answer::Inconclusive) {
          rec.outcome = "budget-exhausted";
          v.checks.push_back(rec);
          return finish(Answer::Inconclusive, "budget");
        }
        rec.outcome = a == Answer::No ? "reject" : "pass";
        if (a == Answer::No) {
          v.checks.push_back(rec);
          return finish(Answer::No, "pair-basic:" + tag);
        }
      }
      v.checks.push_back(rec);
    }
  } catch (const BudgetExhausted&) {
    return finish(Answer::Inconclusive, "budget");
  }
  return finish(Answer::Yes, "");
}

}  // namespace qcert
