#include "qcert/measurement.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include <json.hpp>

#include "qcert/errors.hpp"

namespace qcert {

namespace {

constexpr double kNullFloor = 1e-15;

void require_dim(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    std::ostringstream os;
    os << what << ": dimension mismatch (" << a << " vs " << b << ")";
    throw ValidationError(os.str());
  }
}

std::vector<double> distribution_of(const CMatrix& rho, const Povm& m) {
  std::vector<double> p(m.size());
  for (std::size_t z = 0; z < m.size(); ++z) p[z] = outcome_probability(rho, m.factor(z));
  return p;
}

}  // namespace

Povm::Povm(std::vector<CMatrix> factors, std::vector<std::string> labels, std::string id, double tol)
    : factors_(std::move(factors)), labels_(std::move(labels)), id_(std::move(id)) {
  if (factors_.empty()) throw ValidationError("POVM needs at least one element");
  dim_ = factors_.front().rows();
  if (dim_ == 0) throw ValidationError("POVM dimension must be positive");
  if (labels_.empty()) {
    for (std::size_t z = 0; z < factors_.size(); ++z) labels_.push_back(std::to_string(z));
  }
  if (labels_.size() != factors_.size()) throw ValidationError("POVM label count does not match element count");
  CMatrix sum(dim_, dim_);
  for (const auto& f : factors_) {
    require_dim(f.rows(), dim_, "POVM element");
    for (std::size_t k = 0; k < f.cols(); ++k)
      for (std::size_t a = 0; a < dim_; ++a) {
        const cplx fa = f(a, k);
        if (fa == cplx(0.0)) continue;
        for (std::size_t b = 0; b < dim_; ++b) sum(a, b) += fa * std::conj(f(b, k));
      }
  }
  sum -= CMatrix::identity(dim_);
  if (sum.max_abs() > tol) {
    std::ostringstream os;
    os << "POVM elements do not sum to the identity (residual " << sum.max_abs() << ")";
    throw ValidationError(os.str());
  }
}

Povm Povm::from_elements(const std::vector<HermitianMatrix>& elements, std::vector<std::string> labels,
                         std::string id, double tol) {
  std::vector<CMatrix> factors;
  for (const auto& e : elements) {
    const auto eig = hermitian_eig(e);
    const double top = std::max(0.0, eig.values.empty() ? 0.0 : eig.values.back());
    std::vector<std::size_t> keep;
    for (std::size_t k = 0; k < eig.values.size(); ++k) {
      if (eig.values[k] < -tol) throw ValidationError("POVM element is not PSD");
      if (eig.values[k] > 1e-14 * std::max(1.0, top)) keep.push_back(k);
    }
    CMatrix f(e.dim(), keep.size());
    for (std::size_t c = 0; c < keep.size(); ++c) {
      const double s = std::sqrt(eig.values[keep[c]]);
      for (std::size_t a = 0; a < e.dim(); ++a) f(a, c) = s * eig.vectors(a, keep[c]);
    }
    factors.push_back(std::move(f));
  }
  return Povm(std::move(factors), std::move(labels), std::move(id), tol);
}

CMatrix Povm::element(std::size_t z) const {
  const CMatrix& f = factors_[z];
  return f * f.adjoint();
}

Povm basis_povm(const CMatrix& u, std::string id) {
  if (!u.square()) throw ValidationError("basis POVM needs a square matrix");
  const std::size_t d = u.rows();
  CMatrix g = adjoint_times(u, u);
  g -= CMatrix::identity(d);
  if (g.max_abs() > 1e-10) throw ValidationError("basis POVM needs a unitary matrix");
  std::vector<CMatrix> factors;
  factors.reserve(d);
  for (std::size_t k = 0; k < d; ++k) factors.push_back(CMatrix::column(u.col(k)));
  return Povm(std::move(factors), {}, std::move(id));
}

Povm projector_povm(std::size_t d, const std::vector<std::size_t>& coords, std::string id) {
  std::vector<bool> in(d, false);
  for (std::size_t c : coords) {
    if (c >= d) throw ValidationError("projector coordinate out of range");
    in[c] = true;
  }
  std::vector<std::size_t> inside, outside;
  for (std::size_t i = 0; i < d; ++i) (in[i] ? inside : outside).push_back(i);
  CMatrix fin(d, inside.size()), fout(d, outside.size());
  for (std::size_t k = 0; k < inside.size(); ++k) fin(inside[k], k) = 1.0;
  for (std::size_t k = 0; k < outside.size(); ++k) fout(outside[k], k) = 1.0;
  return Povm({fin, fout}, {"in", "out"}, std::move(id));
}

double outcome_probability(const CMatrix& rho, const CMatrix& factor) {
  const std::size_t d = rho.rows();
  double s = 0.0;
  for (std::size_t k = 0; k < factor.cols(); ++k)
    for (std::size_t a = 0; a < d; ++a) {
      const cplx fa = factor(a, k);
      if (fa == cplx(0.0)) continue;
      cplx row(0.0);
      for (std::size_t b = 0; b < d; ++b) row += rho(a, b) * factor(b, k);
      s += (std::conj(fa) * row).real();
    }
  return s;
}

std::vector<double> outcome_distribution(const DensityMatrix& rho, const Povm& m) {
  require_dim(rho.dim(), m.dim(), "outcome_distribution");
  auto p = distribution_of(rho.matrix(), m);
  double total = 0.0;
  for (double& x : p) {
    if (x < -1e-9) throw NumericError("negative outcome probability");
    x = std::max(0.0, x);
    total += x;
  }
  if (std::abs(total - 1.0) > 1e-9) throw NumericError("outcome probabilities do not sum to one");
  return p;
}

std::pair<Povm, std::vector<std::size_t>> project_povm_to_blocks(const Povm& m, const BucketDecomposition& buckets) {
  require_dim(m.dim(), buckets.dim, "project_povm_to_blocks");
  std::vector<std::pair<std::string, std::vector<std::size_t>>> blocks;
  for (const auto& [j, idx] : buckets.buckets) blocks.emplace_back(std::to_string(j), idx);
  std::vector<std::size_t> rest;
  for (std::size_t i = 0; i < buckets.dim; ++i)
    if (buckets.bucket_of[i] < 0) rest.push_back(i);
  if (!rest.empty()) blocks.emplace_back("rest", rest);

  std::vector<CMatrix> factors;
  std::vector<std::string> labels;
  std::vector<std::size_t> f;
  for (const auto& [tag, idx] : blocks) {
    for (std::size_t z = 0; z < m.size(); ++z) {
      const CMatrix& src = m.factor(z);
      CMatrix g(m.dim(), src.cols());
      bool nonzero = false;
      for (std::size_t a : idx)
        for (std::size_t k = 0; k < src.cols(); ++k) {
          g(a, k) = src(a, k);
          nonzero = nonzero || src(a, k) != cplx(0.0);
        }
      if (!nonzero) continue;
      factors.push_back(std::move(g));
      labels.push_back(tag + ":" + m.label(z));
      f.push_back(z);
    }
  }
  return {Povm(std::move(factors), std::move(labels), m.id() + "/blocks"), std::move(f)};
}

std::vector<double> pushforward(const std::vector<double>& p, const std::vector<std::size_t>& outcome_map,
                                std::size_t target_size) {
  if (p.size() != outcome_map.size()) throw ValidationError("pushforward: map size mismatch");
  std::vector<double> q(target_size, 0.0);
  for (std::size_t z = 0; z < p.size(); ++z) {
    if (outcome_map[z] >= target_size) throw ValidationError("pushforward: target out of range");
    q[outcome_map[z]] += p[z];
  }
  return q;
}

double likelihood_g(const CMatrix& element, const DensityMatrix& rho, const DensityMatrix& rho_alt) {
  require_dim(element.rows(), rho.dim(), "likelihood_g");
  require_dim(rho_alt.dim(), rho.dim(), "likelihood_g");
  const double p0 = trace_product(element, rho.matrix());
  if (p0 <= kNullFloor) throw UndefinedOutcome("likelihood ratio undefined: null probability vanishes");
  return trace_product(element, rho_alt.matrix()) / p0 - 1.0;
}

double phi(const Povm& m, const DensityMatrix& rho, const DensityMatrix& rho_u, const DensityMatrix& rho_v) {
  const auto p0 = distribution_of(rho.matrix(), m);
  const auto pu = distribution_of(rho_u.matrix(), m);
  const auto pv = distribution_of(rho_v.matrix(), m);
  double s = 0.0;
  for (std::size_t z = 0; z < m.size(); ++z) {
    const double du = pu[z] - p0[z], dv = pv[z] - p0[z];
    if (p0[z] <= kNullFloor) {
      if (std::abs(du) <= kNullFloor && std::abs(dv) <= kNullFloor) continue;
      throw UndefinedOutcome("phi undefined: alternative charges an outcome the null does not");
    }
    s += du * dv / p0[z];
  }
  return s;
}

double k_quantity(const Povm& m, const DensityMatrix& rho, const DensityMatrix& rho_u, const DensityMatrix& rho_v) {
  const auto p0 = distribution_of(rho.matrix(), m);
  const auto pu = distribution_of(rho_u.matrix(), m);
  const auto pv = distribution_of(rho_v.matrix(), m);
  double s = 0.0;
  for (std::size_t z = 0; z < m.size(); ++z) {
    const double sum = pu[z] + pv[z] - 2.0 * p0[z];
    if (p0[z] <= kNullFloor) {
      if (std::abs(pu[z] - p0[z]) <= kNullFloor && std::abs(pv[z] - p0[z]) <= kNullFloor) continue;
      throw UndefinedOutcome("K undefined: alternative charges an outcome the null does not");
    }
    s += sum * sum / p0[z];
  }
  return s;
}

double g_mean(const Povm& m, const DensityMatrix& rho, const DensityMatrix& rho_alt) {
  const auto p0 = distribution_of(rho.matrix(), m);
  const auto pa = distribution_of(rho_alt.matrix(), m);
  double s = 0.0;
  for (std::size_t z = 0; z < m.size(); ++z) {
    if (p0[z] <= kNullFloor) {
      if (std::abs(pa[z] - p0[z]) <= kNullFloor) continue;
      throw UndefinedOutcome("g undefined: alternative charges an outcome the null does not");
    }
    s += pa[z] - p0[z];
  }
  return s;
}

std::string transcript_jsonl(const Transcript& t) {
  std::string out;
  for (const auto& e : t) {
    nlohmann::json j{{"povm", e.povm}, {"outcome", e.label}, {"index", e.outcome}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

CopySource::CopySource(DensityMatrix rho, std::uint64_t budget, Rng rng)
    : rho_(std::move(rho)), budget_(budget), rng_(std::move(rng)) {}

void CopySource::charge(std::uint64_t n) {
  if (n > budget_ - used_) {
    used_ = budget_;
    throw BudgetExhausted("copy budget exhausted");
  }
  used_ += n;
}

std::size_t CopySource::draw(const Povm& m, const std::vector<double>& p) {
  charge(1);
  const std::size_t z = sample_discrete(p, rng_);
  if (recording_) transcript_.push_back({m.id(), z, m.label(z)});
  return z;
}

std::size_t CopySource::measure(const Povm& m) {
  if (used_ >= budget_) throw BudgetExhausted("copy budget exhausted");
  return draw(m, outcome_distribution(rho_, m));
}

std::vector<std::uint64_t> CopySource::measure_counts(const Povm& m, std::uint64_t n) {
  const auto p = outcome_distribution(rho_, m);
  if (recording_) {
    std::vector<std::uint64_t> counts(m.size(), 0);
    for (std::uint64_t i = 0; i < n; ++i) ++counts[draw(m, p)];
    return counts;
  }
  charge(n);
  return sample_multinomial(n, p, rng_);
}

std::vector<std::uint64_t> CopySource::measure_until(const Povm& m, const std::vector<bool>& accept,
                                                     std::uint64_t n_accept) {
  if (accept.size() != m.size()) throw ValidationError("accept mask size does not match the POVM");
  const auto p = outcome_distribution(rho_, m);
  std::vector<std::uint64_t> counts(m.size(), 0);
  if (n_accept == 0) return counts;
  double p_acc = 0.0;
  for (std::size_t z = 0; z < p.size(); ++z)
    if (accept[z]) p_acc += p[z];
  p_acc = std::min(1.0, p_acc);

  if (recording_) {
    std::uint64_t got = 0;
    while (got < n_accept) {
      const std::size_t z = draw(m, p);
      ++counts[z];
      if (accept[z]) ++got;
    }
    return counts;
  }

  if (p_acc <= 0.0 || static_cast<double>(n_accept) * (1.0 - p_acc) / p_acc > 1e18) {
    used_ = budget_;
    throw BudgetExhausted("copy budget exhausted while waiting for accepted outcomes");
  }
  std::uint64_t rejected = 0;
  if (p_acc < 1.0) {
    std::negative_binomial_distribution<std::uint64_t> nb(n_accept, p_acc);
    rejected = nb(rng_);
  }
  if (rejected > std::numeric_limits<std::uint64_t>::max() - n_accept) {
    used_ = budget_;
    throw BudgetExhausted("copy budget exhausted while waiting for accepted outcomes");
  }
  charge(n_accept + rejected);

  std::vector<double> pa(p.size(), 0.0), pr(p.size(), 0.0);
  double p_rej = 0.0;
  for (std::size_t z = 0; z < p.size(); ++z) {
    if (accept[z]) pa[z] = p[z] / p_acc;
    else p_rej += p[z];
  }
  const auto ca = sample_multinomial(n_accept, pa, rng_);
  std::vector<std::uint64_t> cr(p.size(), 0);
  if (rejected > 0) {
    for (std::size_t z = 0; z < p.size(); ++z)
      if (!accept[z]) pr[z] = p[z] / p_rej;
    cr = sample_multinomial(rejected, pr, rng_);
  }
  for (std::size_t z = 0; z < p.size(); ++z) counts[z] = ca[z] + cr[z];
  return counts;
}

RotatedChannel::RotatedChannel(MeasurementChannel& parent, CMatrix v) : parent_(parent), v_(std::move(v)) {
  require_dim(v_.rows(), parent_.dim(), "rotated channel");
  if (!v_.square()) throw ValidationError("rotation must be square");
}

Povm RotatedChannel::rotate(const Povm& m) const {
  require_dim(m.dim(), v_.rows(), "rotated channel");
  std::vector<CMatrix> factors;
  std::vector<std::string> labels;
  factors.reserve(m.size());
  for (std::size_t z = 0; z < m.size(); ++z) {
    factors.push_back(v_ * m.factor(z));
    labels.push_back(m.label(z));
  }
  return Povm(std::move(factors), std::move(labels), m.id(), 1e-8);
}

std::size_t RotatedChannel::measure(const Povm& m) { return parent_.measure(rotate(m)); }

std::vector<std::uint64_t> RotatedChannel::measure_counts(const Povm& m, std::uint64_t n) {
  return parent_.measure_counts(rotate(m), n);
}

std::vector<std::uint64_t> RotatedChannel::measure_until(const Povm& m, const std::vector<bool>& accept,
                                                         std::uint64_t n_accept) {
  return parent_.measure_until(rotate(m), accept, n_accept);
}

ConditionalChannel::ConditionalChannel(MeasurementChannel& parent, std::vector<std::size_t> coords)
    : parent_(parent), coords_(std::move(coords)) {
  const std::size_t d = parent_.dim();
  if (coords_.empty()) throw ValidationError("conditional channel needs a nonempty coordinate set");
  std::vector<bool> in(d, false);
  for (std::size_t c : coords_) {
    if (c >= d) throw ValidationError("conditional channel coordinate out of range");
    if (in[c]) throw ValidationError("conditional channel coordinates repeat");
    in[c] = true;
  }
  for (std::size_t i = 0; i < d; ++i)
    if (!in[i]) complement_.push_back(i);
}

Povm ConditionalChannel::refine(const Povm& m) const {
  require_dim(m.dim(), coords_.size(), "conditional channel");
  const std::size_t d = parent_.dim();
  std::vector<CMatrix> factors;
  std::vector<std::string> labels;
  for (std::size_t z = 0; z < m.size(); ++z) {
    const CMatrix& f = m.factor(z);
    CMatrix g(d, f.cols());
    for (std::size_t a = 0; a < coords_.size(); ++a)
      for (std::size_t k = 0; k < f.cols(); ++k) g(coords_[a], k) = f(a, k);
    factors.push_back(std::move(g));
    labels.push_back(m.label(z));
  }
  CMatrix rest(d, complement_.size());
  for (std::size_t k = 0; k < complement_.size(); ++k) rest(complement_[k], k) = 1.0;
  factors.push_back(std::move(rest));
  labels.push_back("discard");
  return Povm(std::move(factors), std::move(labels), m.id() + "|cond", 1e-8);
}

std::vector<std::uint64_t> ConditionalChannel::measure_until(const Povm& m, const std::vector<bool>& accept,
                                                             std::uint64_t n_accept) {
  if (accept.size() != m.size()) throw ValidationError("accept mask size does not match the POVM");
  auto mask = accept;
  mask.push_back(false);
  auto counts = parent_.measure_until(refine(m), mask, n_accept);
  discarded_ += counts.back();
  counts.pop_back();
  return counts;
}

std::vector<std::uint64_t> ConditionalChannel::measure_counts(const Povm& m, std::uint64_t n) {
  return measure_until(m, std::vector<bool>(m.size(), true), n);
}

std::size_t ConditionalChannel::measure(const Povm& m) {
  const auto counts = measure_counts(m, 1);
  return static_cast<std::size_t>(std::find(counts.begin(), counts.end(), 1u) - counts.begin());
}

}  // namespace qcert
