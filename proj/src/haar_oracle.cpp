#include "qcert/haar_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "qcert/classical.hpp"
#include "qcert/errors.hpp"

namespace qcert {

namespace {

// Dense real solve with partial pivoting.
std::vector<double> solve(std::vector<std::vector<double>> a, std::vector<double> b) {
  const std::size_t n = b.size();
  double scale = 0.0;
  for (const auto& row : a)
    for (double x : row) scale = std::max(scale, std::abs(x));
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    if (std::abs(a[piv][c]) <= 1e-12 * scale) throw UnsupportedRange("Weingarten Gram matrix is singular");
    std::swap(a[c], a[piv]);
    std::swap(b[c], b[piv]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
      b[r] -= f * b[c];
    }
  }
  std::vector<double> x(n);
  for (std::size_t c = n; c-- > 0;) {
    double s = b[c];
    for (std::size_t k = c + 1; k < n; ++k) s -= a[c][k] * x[k];
    x[c] = s / a[c][c];
  }
  return x;
}

}  // namespace

Permutation::Permutation(std::vector<int> image) : image_(std::move(image)) {
  const std::size_t l = image_.size();
  if (l > kMaxSize) throw UnsupportedRange("permutations are limited to 6 symbols");
  std::vector<bool> seen(l, false);
  for (int v : image_) {
    if (v < 0 || static_cast<std::size_t>(v) >= l || seen[v]) throw ValidationError("not a permutation");
    seen[v] = true;
  }
  std::fill(seen.begin(), seen.end(), false);
  for (std::size_t i = 0; i < l; ++i) {
    if (seen[i]) continue;
    int len = 0;
    for (std::size_t k = i; !seen[k]; k = static_cast<std::size_t>(image_[k])) {
      seen[k] = true;
      ++len;
    }
    cycle_type_.push_back(len);
  }
  std::sort(cycle_type_.rbegin(), cycle_type_.rend());
}

Permutation Permutation::identity(std::size_t l) {
  std::vector<int> v(l);
  std::iota(v.begin(), v.end(), 0);
  return Permutation(v);
}

Permutation Permutation::inverse() const {
  std::vector<int> v(image_.size());
  for (std::size_t i = 0; i < image_.size(); ++i) v[image_[i]] = static_cast<int>(i);
  return Permutation(v);
}

Permutation operator*(const Permutation& a, const Permutation& b) {
  if (a.size() != b.size()) throw ValidationError("permutation sizes differ");
  std::vector<int> v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) v[i] = a(static_cast<std::size_t>(b(i)));
  return Permutation(v);
}

std::vector<Permutation> all_permutations(std::size_t l) {
  if (l > Permutation::kMaxSize) throw UnsupportedRange("permutations are limited to 6 symbols");
  std::vector<int> v(l);
  std::iota(v.begin(), v.end(), 0);
  std::vector<Permutation> out;
  do {
    out.emplace_back(v);
  } while (std::next_permutation(v.begin(), v.end()));
  return out;
}

WeingartenTable weingarten_table(std::size_t l, std::size_t d) {
  if (l == 0 || l > Permutation::kMaxSize) throw UnsupportedRange("Weingarten values need 1 <= l <= 6");
  if (d < l) {
    std::ostringstream os;
    os << "Weingarten Gram matrix is singular for d = " << d << " < l = " << l;
    throw UnsupportedRange(os.str());
  }
  const auto perms = all_permutations(l);
  std::map<std::vector<int>, std::size_t> class_index;
  std::vector<const Permutation*> reps;
  for (const auto& p : perms)
    if (class_index.emplace(p.cycle_type(), reps.size()).second) reps.push_back(&p);
  const std::size_t k = reps.size();
  // Class function equation: for each class representative s, sum_t d^{c(s t^-1)} Wg(class of t) = [s = e].
  std::vector<std::vector<double>> a(k, std::vector<double>(k, 0.0));
  std::vector<double> rhs(k, 0.0);
  const double dd = static_cast<double>(d);
  for (std::size_t r = 0; r < k; ++r) {
    for (const auto& t : perms) {
      const Permutation st = *reps[r] * t.inverse();
      a[r][class_index.at(t.cycle_type())] += std::pow(dd, static_cast<double>(st.cycles()));
    }
    if (reps[r]->cycles() == l) rhs[r] = 1.0;
  }
  const auto x = solve(a, rhs);
  std::map<std::vector<int>, double> by_class;
  for (const auto& [type, idx] : class_index) by_class[type] = x[idx];
  return WeingartenTable(l, d, std::move(by_class));
}

double weingarten_orthogonality_residual(const WeingartenTable& wg) {
  const auto perms = all_permutations(wg.l());
  const double dd = static_cast<double>(wg.d());
  double worst = 0.0;
  for (const auto& s : perms) {
    double sum = 0.0;
    for (const auto& t : perms) sum += std::pow(dd, static_cast<double>((s * t.inverse()).cycles())) * wg(t);
    const double target = s.cycles() == wg.l() ? 1.0 : 0.0;
    worst = std::max(worst, std::abs(sum - target));
  }
  return worst;
}

std::vector<double> power_traces(const HermitianMatrix& a, std::size_t l) {
  std::vector<double> t(l + 1, 0.0);
  t[0] = static_cast<double>(a.dim());
  CMatrix p = CMatrix::identity(a.dim());
  for (std::size_t k = 1; k <= l; ++k) {
    p = p * a.matrix();
    t[k] = p.trace().real();
  }
  return t;
}

double cycle_trace(const Permutation& p, const std::vector<double>& traces) {
  double v = 1.0;
  for (int len : p.cycle_type()) v *= traces.at(static_cast<std::size_t>(len));
  return v;
}

double haar_moment(const HermitianMatrix& a, const HermitianMatrix& b, std::size_t l) {
  if (a.dim() != b.dim()) throw ValidationError("haar_moment: dimension mismatch");
  const auto wg = weingarten_table(l, a.dim());
  const auto perms = all_permutations(l);
  const auto ta = power_traces(a, l), tb = power_traces(b, l);
  std::vector<double> ca, cb;
  for (const auto& p : perms) {
    ca.push_back(cycle_trace(p, ta));
    cb.push_back(cycle_trace(p, tb));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < perms.size(); ++i) {
    if (ca[i] == 0.0) continue;
    for (std::size_t j = 0; j < perms.size(); ++j) {
      if (cb[j] == 0.0) continue;
      s += ca[i] * cb[j] * wg(perms[i] * perms[j].inverse());
    }
  }
  return s;
}

MonteCarloEstimate haar_moment_mc(const HermitianMatrix& a, const HermitianMatrix& b, std::size_t l,
                                  std::size_t samples, Rng& rng) {
  if (a.dim() != b.dim()) throw ValidationError("haar_moment_mc: dimension mismatch");
  if (samples < 2) throw ValidationError("Monte Carlo needs at least two samples");
  const std::size_t d = a.dim();
  double s = 0.0, s2 = 0.0;
  for (std::size_t k = 0; k < samples; ++k) {
    const CMatrix u = haar_unitary(d, rng);
    const double t = trace_product(a.matrix(), adjoint_times(u, b.matrix() * u));
    const double v = std::pow(t, static_cast<double>(l));
    s += v;
    s2 += v * v;
  }
  MonteCarloEstimate e;
  e.samples = samples;
  e.mean = s / static_cast<double>(samples);
  const double var = std::max(0.0, s2 / static_cast<double>(samples) - e.mean * e.mean);
  e.std_error = std::sqrt(var / static_cast<double>(samples - 1));
  return e;
}

MomentsReport verify_moments_basic(const HermitianMatrix& m, std::size_t samples, Rng& rng) {
  if (samples < 2) throw ValidationError("Monte Carlo needs at least two samples");
  const std::size_t d = m.dim();
  MomentsReport r;
  r.d = d;
  const double tr = m.trace();
  r.hs_norm_sq = m.matrix().hs_norm() * m.matrix().hs_norm();
  r.first_expected = (tr * tr + r.hs_norm_sq) / (static_cast<double>(d) + 1.0);
  double s = 0.0, s2 = 0.0, q = 0.0, q2 = 0.0;
  for (std::size_t k = 0; k < samples; ++k) {
    const CMatrix u = haar_unitary(d, rng);
    double z = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double x = quadratic_form(m.matrix(), u.col(i)).real();
      z += x * x;
    }
    s += z;
    s2 += z * z;
    q += z * z;
    q2 += z * z * z * z;
  }
  const double n = static_cast<double>(samples);
  auto finish = [n](double sum, double sum2) {
    MonteCarloEstimate e;
    e.samples = static_cast<std::size_t>(n);
    e.mean = sum / n;
    e.std_error = std::sqrt(std::max(0.0, sum2 / n - e.mean * e.mean) / (n - 1.0));
    return e;
  };
  r.first = finish(s, s2);
  r.second = finish(q, q2);
  r.first_pass = std::abs(r.first.mean - r.first_expected) <= 3.0 * r.first.std_error + 1e-12;
  const double d4 = std::pow(static_cast<double>(d), 4.0);
  r.second_bound = 1.5 * r.hs_norm_sq * r.hs_norm_sq / d4;
  r.second_pass = std::abs(tr) <= 1e-9 && r.second.mean <= r.second_bound;
  r.jensen_floor = r.first_expected * r.first_expected;
  r.second_ratio_d2 = r.hs_norm_sq > 0.0
                          ? r.second.mean * static_cast<double>(d) * static_cast<double>(d) / (r.hs_norm_sq * r.hs_norm_sq)
                          : 0.0;
  return r;
}

StateEnsemble StateEnsemble::uniform(std::vector<DensityMatrix> members) {
  StateEnsemble e;
  e.weights.assign(members.size(), 1.0 / static_cast<double>(members.size()));
  e.members = std::move(members);
  return e;
}

DivergenceRecord exact_transcript_divergence(const DensityMatrix& sigma, const StateEnsemble& ensemble,
                                             const NonadaptiveSchedule& schedule) {
  if (ensemble.members.empty() || ensemble.members.size() != ensemble.weights.size())
    throw ValidationError("ensemble needs members with matching weights");
  validate_distribution(ensemble.weights);
  std::uint64_t total = 1;
  for (const auto& m : schedule.povms) {
    if (m.dim() != sigma.dim()) throw ValidationError("schedule dimension does not match sigma");
    if (total > kMaxTranscripts / m.size()) throw UnsupportedRange("transcript space exceeds 10^6");
    total *= m.size();
  }
  const std::size_t steps = schedule.size(), k = ensemble.members.size();
  std::vector<std::vector<double>> p0(steps);
  std::vector<std::vector<std::vector<double>>> pk(k, std::vector<std::vector<double>>(steps));
  for (std::size_t t = 0; t < steps; ++t) {
    p0[t] = outcome_distribution(sigma, schedule.povms[t]);
    for (std::size_t m = 0; m < k; ++m) pk[m][t] = outcome_distribution(ensemble.members[m], schedule.povms[t]);
  }

  DivergenceRecord r;
  r.transcripts = total;
  double l1 = 0.0, chi = 0.0, kl = 0.0, min_ratio = std::numeric_limits<double>::infinity();
  std::vector<double> prod(k);
  std::function<void(std::size_t, double, std::vector<double>&)> walk = [&](std::size_t t, double q0,
                                                                          std::vector<double>& qk) {
    if (t == steps) {
      double q1 = 0.0;
      for (std::size_t m = 0; m < k; ++m) q1 += ensemble.weights[m] * qk[m];
      l1 += std::abs(q1 - q0);
      if (q0 > 0.0) {
        chi += (q1 - q0) * (q1 - q0) / q0;
        min_ratio = std::min(min_ratio, q1 / q0);
        if (q1 > 0.0) kl += q1 * std::log(q1 / q0);
      } else if (q1 > 1e-300) {
        chi = std::numeric_limits<double>::infinity();
        kl = std::numeric_limits<double>::infinity();
      }
      return;
    }
    std::vector<double> next(k);
    for (std::size_t z = 0; z < p0[t].size(); ++z) {
      for (std::size_t m = 0; m < k; ++m) next[m] = qk[m] * pk[m][t][z];
      walk(t + 1, q0 * p0[t][z], next);
    }
  };
  std::vector<double> start(k, 1.0);
  walk(0, 1.0, start);
  r.tv = std::min(1.0, 0.5 * l1);
  r.chi2 = chi;
  r.kl = std::max(0.0, kl);
  r.min_likelihood_ratio = min_ratio;
  return r;
}

IngsterEstimate ingster_bound(const std::vector<double>& phi_samples, std::size_t n) {
  return ingster_bound(std::vector<std::vector<double>>{phi_samples}, n);
}

IngsterEstimate ingster_bound(const std::vector<std::vector<double>>& phi_by_step, std::size_t n) {
  if (phi_by_step.empty()) throw ValidationError("Ingster bound needs phi samples");
  IngsterEstimate best;
  for (std::size_t t = 0; t < phi_by_step.size(); ++t) {
    const auto& samples = phi_by_step[t];
    if (samples.empty()) throw ValidationError("Ingster bound needs phi samples");
    double s = 0.0, s2 = 0.0;
    for (double p : samples) {
      if (!(1.0 + p > 0.0)) throw ValidationError("Ingster bound needs 1 + phi > 0");
      const double v = std::pow(1.0 + p, static_cast<double>(n));
      s += v;
      s2 += v * v;
    }
    const double cnt = static_cast<double>(samples.size());
    const double mean = s / cnt;
    const double se = cnt > 1.0 ? std::sqrt(std::max(0.0, s2 / cnt - mean * mean) / (cnt - 1.0)) : 0.0;
    if (t == 0 || mean - 1.0 > best.bound) {
      best.bound = mean - 1.0;
      best.std_error = se;
      best.argmax_step = t;
    }
  }
  return best;
}

}  // namespace qcert
