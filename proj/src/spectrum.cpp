#include "qcert/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qcert/errors.hpp"
#include "qcert/linalg.hpp"

namespace qcert {

namespace {

constexpr double kCapSlack = 1e-12;

void check_eps(double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw ValidationError("eps must lie in (0, 1)");
}

std::vector<std::size_t> positive_indices(const std::vector<double>& v) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i] > 0.0) idx.push_back(i);
  return idx;
}

// Longest prefix of `order` whose mass stays within `cap`.
std::vector<std::size_t> capped_prefix(const std::vector<std::size_t>& order, const std::vector<double>& v,
                                       double cap) {
  std::vector<std::size_t> out;
  double acc = 0.0;
  for (std::size_t i : order) {
    if (acc + v[i] > cap + kCapSlack) break;
    acc += v[i];
    out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> ascending_by_value(const std::vector<double>& v) {
  auto idx = positive_indices(v);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  return idx;
}

std::size_t argmax(const std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

std::vector<double> zeroed(std::vector<double> v, const std::vector<std::size_t>& idx) {
  for (std::size_t i : idx) v[i] = 0.0;
  return v;
}

std::size_t nonzero_count(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::count_if(v.begin(), v.end(), [](double x) { return x > 0.0; }));
}

double total(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

}  // namespace

Spectrum::Spectrum(std::vector<double> lambdas, double tol) : lambdas_(std::move(lambdas)) {
  if (lambdas_.empty()) throw ValidationError("spectrum must be nonempty");
  double s = 0.0;
  for (double x : lambdas_) {
    if (!(x >= 0.0)) throw ValidationError("spectrum entries must be nonnegative");
    s += x;
  }
  if (std::abs(s - 1.0) > tol) throw ValidationError("spectrum must sum to 1, got " + std::to_string(s));
}

int bucket_index(double lambda) {
  if (!(lambda > 0.0)) throw ValidationError("bucket_index needs a positive value");
  int e = 0;
  std::frexp(lambda, &e);  // lambda in [2^{e-1}, 2^e)
  return std::max(0, -e);
}

std::size_t BucketDecomposition::size(int j) const {
  auto it = buckets.find(j);
  return it == buckets.end() ? 0 : it->second.size();
}

std::vector<int> BucketDecomposition::active() const {
  std::vector<int> out;
  for (const auto& [j, idx] : buckets) out.push_back(j);
  return out;
}

double BucketDecomposition::mass(int j, const std::vector<double>& lambdas) const {
  double s = 0.0;
  auto it = buckets.find(j);
  if (it == buckets.end()) return 0.0;
  for (std::size_t i : it->second) s += lambdas[i];
  return s;
}

BucketDecomposition bucketize_entries(const std::vector<double>& lambdas) {
  BucketDecomposition b;
  b.dim = lambdas.size();
  b.bucket_of.assign(lambdas.size(), -1);
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    if (!(lambdas[i] > 0.0)) continue;
    const int j = bucket_index(lambdas[i]);
    b.bucket_of[i] = j;
    b.buckets[j].push_back(i);
  }
  return b;
}

BucketDecomposition bucketize(const Spectrum& spec) { return bucketize_entries(spec.values()); }

std::string to_string(RemovalVariant v) {
  switch (v) {
    case RemovalVariant::LowerNonadaptive:
      return "lower-nonadaptive";
    case RemovalVariant::LowerAdaptive:
      return "lower-adaptive";
    case RemovalVariant::Upper:
      return "upper";
  }
  return "unknown";
}

const std::vector<double>& MassRemovalResult::survivors() const {
  switch (variant) {
    case RemovalVariant::LowerNonadaptive:
      return sigma_2star;
    case RemovalVariant::LowerAdaptive:
      return sigma_star;
    case RemovalVariant::Upper:
      return sigma_prime;
  }
  return sigma_prime;
}

double log_factor(std::size_t d, double eps) {
  return std::max(1.0, std::log(static_cast<double>(d) / eps));
}

MassRemovalResult remove_mass_lower_nonadaptive(const Spectrum& spec, double eps) {
  check_eps(eps);
  const auto& lam = spec.values();
  const auto buckets = bucketize(spec);
  MassRemovalResult r;
  r.variant = RemovalVariant::LowerNonadaptive;
  r.eps = eps;

  auto order = positive_indices(lam);
  auto key = [&](std::size_t i) {
    const double dj = static_cast<double>(buckets.size(buckets.bucket_of[i]));
    return lam[i] / (dj * dj);
  };
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key(a) < key(b); });
  r.tail = capped_prefix(order, lam, 3.0 * eps);
  std::sort(r.tail.begin(), r.tail.end());

  std::vector<char> in_tail(lam.size(), 0);
  for (std::size_t i : r.tail) in_tail[i] = 1;
  std::map<int, double> remaining;
  for (std::size_t i : positive_indices(lam))
    if (!in_tail[i]) remaining[buckets.bucket_of[i]] += lam[i];
  const double light_cap = 2.0 * eps / log_factor(lam.size(), eps);
  for (std::size_t i : positive_indices(lam))
    if (!in_tail[i] && remaining[buckets.bucket_of[i]] <= light_cap) r.light.push_back(i);

  r.largest = argmax(lam);
  auto prime_removed = r.tail;
  prime_removed.push_back(*r.largest);
  r.sigma_prime = zeroed(lam, prime_removed);

  auto star_removed = r.tail;
  star_removed.insert(star_removed.end(), r.light.begin(), r.light.end());
  r.sigma_star = zeroed(lam, star_removed);

  r.extra = capped_prefix(ascending_by_value(r.sigma_star), r.sigma_star, 2.0 * eps);
  std::sort(r.extra.begin(), r.extra.end());
  r.sigma_2star = zeroed(r.sigma_star, r.extra);

  r.d_eff = nonzero_count(r.sigma_2star);
  r.removed_mass = total(lam) - total(r.sigma_2star);
  r.surviving_buckets = bucketize_entries(r.sigma_2star);
  return r;
}

MassRemovalResult remove_mass_adaptive(const Spectrum& spec, double eps) {
  check_eps(eps);
  const auto& lam = spec.values();
  MassRemovalResult r;
  r.variant = RemovalVariant::LowerAdaptive;
  r.eps = eps;
  r.tail = capped_prefix(ascending_by_value(lam), lam, 4.0 * eps);
  std::sort(r.tail.begin(), r.tail.end());
  r.largest = argmax(lam);
  auto removed = r.tail;
  removed.push_back(*r.largest);
  r.sigma_star = zeroed(lam, removed);
  r.d_eff = nonzero_count(r.sigma_star);
  r.removed_mass = total(lam) - total(r.sigma_star);
  r.surviving_buckets = bucketize_entries(r.sigma_star);
  return r;
}

MassRemovalResult remove_mass_upper(const Spectrum& spec, double eps) {
  check_eps(eps);
  const auto& lam = spec.values();
  MassRemovalResult r;
  r.variant = RemovalVariant::Upper;
  r.eps = eps;
  r.tail = capped_prefix(ascending_by_value(lam), lam, eps * eps / 20.0);
  std::sort(r.tail.begin(), r.tail.end());
  r.sigma_prime = zeroed(lam, r.tail);
  r.d_eff = nonzero_count(r.sigma_prime);
  r.removed_mass = total(lam) - total(r.sigma_prime);
  r.surviving_buckets = bucketize_entries(r.sigma_prime);
  return r;
}

namespace {

// D * d_eff^power * F(normalized survivors, mm) / eps^2, with F = (Tr sqrt)^2 / D.
double bound_value(const std::vector<double>& survivors, std::size_t d_eff, double power, double eps,
                   bool& degenerate) {
  const double mass = total(survivors);
  if (d_eff == 0 || !(mass > 0.0)) {
    degenerate = true;
    return 0.0;
  }
  double root_sum = 0.0;
  for (double x : survivors)
    if (x > 0.0) root_sum += std::sqrt(x / mass);
  return std::pow(static_cast<double>(d_eff), power) * root_sum * root_sum / (eps * eps);
}

}  // namespace

PredictedBounds predicted_bounds(const Spectrum& spec, double eps) {
  PredictedBounds b;
  const auto lower = remove_mass_lower_nonadaptive(spec, eps);
  const auto adaptive = remove_mass_adaptive(spec, eps);
  const auto upper = remove_mass_upper(spec, eps);
  b.d_eff_nonadaptive = lower.d_eff;
  b.d_eff_adaptive = adaptive.d_eff;
  b.d_eff_upper = upper.d_eff;
  b.lower_nonadaptive = bound_value(lower.sigma_2star, lower.d_eff, 0.5, eps, b.degenerate_nonadaptive);
  b.lower_adaptive = bound_value(adaptive.sigma_star, adaptive.d_eff, 1.0 / 3.0, eps, b.degenerate_adaptive);
  b.upper = bound_value(upper.sigma_prime, upper.d_eff, 0.5, eps, b.degenerate_upper);
  b.log_d_over_eps = log_factor(spec.size(), eps);
  return b;
}

}  // namespace qcert
