#include "qcert/classical.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qcert/errors.hpp"

namespace qcert {

namespace {

void require_same_domain(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw ValidationError("distributions have different domains");
  validate_distribution(p);
  validate_distribution(q);
}

}  // namespace

SampleCounts::SampleCounts(std::vector<std::uint64_t> c) : counts(std::move(c)) {
  total = std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

void validate_distribution(const std::vector<double>& p, double tol) {
  if (p.empty()) throw ValidationError("empty distribution");
  double s = 0.0;
  for (double x : p) {
    if (!(x >= -tol)) throw ValidationError("distribution has a negative entry");
    s += x;
  }
  if (std::abs(s - 1.0) > tol) throw ValidationError("distribution does not sum to one");
}

double l2_statistic(const SampleCounts& x, const SampleCounts& y) {
  if (x.domain() != y.domain()) throw ValidationError("sample domains differ");
  double z = 0.0;
  for (std::size_t i = 0; i < x.domain(); ++i) {
    const double a = static_cast<double>(x.counts[i]), b = static_cast<double>(y.counts[i]);
    z += (a - b) * (a - b) - a - b;
  }
  return z;
}

bool l2_round_rejects(const SampleCounts& x, const SampleCounts& y, double eps) {
  if (!(eps > 0.0)) throw ValidationError("l2 tester needs eps > 0");
  if (x.total != y.total) throw ValidationError("l2 tester needs equal sample sizes");
  const double n = static_cast<double>(x.total);
  return l2_statistic(x, y) > n * n * eps * eps / 2.0;
}

L2TestResult l2_two_sample_test(const std::vector<SampleCounts>& x, const std::vector<SampleCounts>& y, double eps) {
  if (x.size() != y.size() || x.empty()) throw ValidationError("l2 tester needs matching nonempty round lists");
  L2TestResult r;
  const double n = static_cast<double>(x.front().total);
  r.threshold = n * n * eps * eps / 2.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (x[k].total != x.front().total) throw ValidationError("l2 tester needs equal sample sizes");
    if (l2_round_rejects(x[k], y[k], eps)) ++r.rejections;
    r.statistics.push_back(l2_statistic(x[k], y[k]));
  }
  r.accept = 2 * r.rejections <= x.size();
  return r;
}

std::size_t majority_rounds(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("delta must lie in (0, 1)");
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(18.0 * std::log(1.0 / delta))));
}

double l2_distance(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw ValidationError("distributions have different domains");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += (p[i] - q[i]) * (p[i] - q[i]);
  return std::sqrt(s);
}

double tv_distance(const std::vector<double>& p, const std::vector<double>& q) {
  require_same_domain(p, q);
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return std::min(1.0, 0.5 * s);
}

double chi_squared(const std::vector<double>& p, const std::vector<double>& q) {
  require_same_domain(p, q);
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (q[i] <= 0.0) {
      if (p[i] > 0.0) throw ValidationError("chi-squared: p charges a point outside the support of q");
      continue;
    }
    s += (p[i] - q[i]) * (p[i] - q[i]) / q[i];
  }
  return s;
}

double kl_divergence(const std::vector<double>& p, const std::vector<double>& q) {
  require_same_domain(p, q);
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    if (q[i] <= 0.0) throw ValidationError("KL: p charges a point outside the support of q");
    s += p[i] * std::log(p[i] / q[i]);
  }
  return std::max(0.0, s);
}

double l23_functional(const std::vector<double>& p, double eps) {
  validate_distribution(p);
  if (!(eps >= 0.0)) throw ValidationError("eps must be nonnegative");
  std::vector<double> v(p);
  std::sort(v.begin(), v.end());
  v.back() = 0.0;
  double removed = 0.0;
  for (std::size_t i = 0; i + 1 < v.size(); ++i) {
    if (removed + v[i] > eps + 1e-12) break;
    removed += v[i];
    v[i] = 0.0;
  }
  double s = 0.0;
  for (double x : v)
    if (x > 0.0) s += std::pow(x, 2.0 / 3.0);
  return std::pow(s, 1.5);
}

}  // namespace qcert
