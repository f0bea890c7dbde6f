#include "qcert/instances.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qcert/errors.hpp"

namespace qcert {

namespace {

void require_diagonal_match(const DensityMatrix& sigma, const std::vector<double>& lambdas) {
  if (!sigma.is_diagonal()) throw ValidationError("instance constructors need a diagonal sigma");
  if (sigma.dim() != lambdas.size()) throw ValidationError("sigma dimension does not match the instance");
  const auto diag = sigma.diag();
  for (std::size_t i = 0; i < diag.size(); ++i)
    if (std::abs(diag[i] - lambdas[i]) > 1e-12) throw ValidationError("sigma does not match the instance spectrum");
}

double pow2(double e) { return std::exp2(e); }

double zeta_sum(const BucketDecomposition& b, double zeta, std::map<int, double>* eps_out) {
  double s = 0.0;
  for (const auto& [j, idx] : b.buckets) {
    const std::size_t dj = idx.size();
    if (dj < 2) continue;
    const double cap = pow2(-j - 1.0);
    const double val = zeta * pow2(-2.0 * (j + 1.0) / 3.0) * std::pow(static_cast<double>(dj), 2.0 / 3.0);
    const double ej = std::min(cap, val);
    if (eps_out) (*eps_out)[j] = ej;
    s += 2.0 * static_cast<double>(dj / 2) * ej;
  }
  return s;
}

}  // namespace

double paninski_saturation(const BucketDecomposition& buckets) {
  double s = 0.0;
  for (const auto& [j, idx] : buckets.buckets)
    if (idx.size() > 1) s += 2.0 * static_cast<double>(idx.size() / 2) * pow2(-j - 1.0);
  return s;
}

PaninskiInstance tune_paninski(const Spectrum& spec, double eps) {
  if (!(eps >= 0.0)) throw ValidationError("eps must be nonnegative");
  PaninskiInstance inst;
  inst.lambdas = spec.values();
  inst.buckets = bucketize(spec);
  inst.eps = eps;
  bool any_multi = false;
  int j_max = 0;
  for (const auto& [j, idx] : inst.buckets.buckets) {
    if (idx.size() > 1) any_multi = true;
    j_max = std::max(j_max, j);
  }
  if (!any_multi) {
    throw UnavailableError("Paninski ensemble unavailable: no bucket has more than one entry");
  }
  const double saturation = paninski_saturation(inst.buckets);
  if (eps > saturation + 1e-12) {
    std::ostringstream os;
    os << "eps " << eps << " exceeds the Paninski saturation value " << saturation;
    throw InfeasibleError(os.str(), saturation);
  }

  double lo = 0.0, hi = pow2(j_max);
  while (zeta_sum(inst.buckets, hi, nullptr) < eps) hi *= 2.0;
  if (eps >= saturation) {
    inst.zeta = hi;
  } else {
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      if (zeta_sum(inst.buckets, mid, nullptr) < eps) lo = mid; else hi = mid;
    }
    const double rlo = std::abs(zeta_sum(inst.buckets, lo, nullptr) - eps);
    const double rhi = std::abs(zeta_sum(inst.buckets, hi, nullptr) - eps);
    inst.zeta = rlo <= rhi ? lo : hi;
  }
  inst.residual = std::abs(zeta_sum(inst.buckets, inst.zeta, &inst.eps_j) - eps);
  if (inst.residual > 1e-10) throw NumericError("zeta bisection did not reach residual 1e-10");
  return inst;
}

std::vector<double> paninski_perturbation(const PaninskiInstance& inst) {
  std::vector<double> e(inst.lambdas.size(), 0.0);
  for (const auto& [j, ej] : inst.eps_j) {
    const auto& idx = inst.buckets.buckets.at(j);
    const std::size_t half = idx.size() / 2;
    for (std::size_t a = 0; a < half; ++a) {
      e[idx[a]] = ej;
      e[idx[half + a]] = -ej;
    }
  }
  return e;
}

DensityMatrix sample_paninski(const DensityMatrix& sigma, const PaninskiInstance& inst, Rng& rng) {
  require_diagonal_match(sigma, inst.lambdas);
  const CMatrix u = block_haar(inst.buckets, rng);
  const CMatrix e = CMatrix::diagonal(paninski_perturbation(inst));
  const CMatrix rotated = adjoint_times(u, e * u);
  return DensityMatrix(HermitianMatrix(sigma.matrix() + rotated, 1e-10));
}

OffDiagInstance make_offdiag(const Spectrum& spec, double eps, std::optional<int> j, std::optional<int> jp) {
  if (!(eps > 0.0)) throw ValidationError("eps must be positive");
  const auto b = bucketize(spec);
  int best_j = b.active().front(), best_jp = best_j;
  double best_score = -1.0;
  for (const auto& [k, idx] : b.buckets) {
    if (idx.size() > b.size(best_j)) best_j = k;
    const double dk = static_cast<double>(idx.size());
    const double score = dk * dk * pow2(-k);
    if (score > best_score) {
      best_score = score;
      best_jp = k;
    }
  }
  OffDiagInstance inst;
  inst.j = j.value_or(best_j);
  inst.jp = jp.value_or(best_jp);
  inst.eps = eps;
  const std::size_t dj = b.size(inst.j), djp = b.size(inst.jp);
  if (dj == 0 || djp == 0) throw ValidationError("off-diagonal instance: requested bucket is empty");
  if (dj < djp) throw ValidationError("off-diagonal instance needs d_j >= d_j'");
  const auto& sj = b.buckets.at(inst.j);
  if (inst.j == inst.jp) {
    if (dj < 2) throw UnavailableError("off-diagonal instance with j = j' needs d_j > 1");
    const std::size_t first = (dj + 1) / 2;
    inst.rows.assign(sj.begin(), sj.begin() + static_cast<std::ptrdiff_t>(first));
    inst.cols.assign(sj.begin() + static_cast<std::ptrdiff_t>(first), sj.end());
    inst.max_feasible = static_cast<double>(dj / 2) * pow2(-inst.j);
  } else {
    inst.rows = sj;
    inst.cols = b.buckets.at(inst.jp);
    inst.max_feasible = static_cast<double>(djp) * pow2(-inst.j / 2.0 - inst.jp / 2.0);
  }
  if (eps > inst.max_feasible * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "off-diagonal instance infeasible: eps " << eps << " exceeds " << inst.max_feasible;
    throw InfeasibleError(os.str(), inst.max_feasible);
  }
  inst.amplitude = eps / (2.0 * static_cast<double>(inst.cols.size()));
  return inst;
}

CMatrix offdiag_perturbation(std::size_t d, const OffDiagInstance& inst, const CMatrix& w) {
  CMatrix dw(d, d);
  for (std::size_t a = 0; a < inst.rows.size(); ++a)
    for (std::size_t c = 0; c < inst.cols.size(); ++c) {
      const cplx x = inst.amplitude * w(a, c);
      dw(inst.rows[a], inst.cols[c]) = x;
      dw(inst.cols[c], inst.rows[a]) = std::conj(x);
    }
  return dw;
}

DensityMatrix build_offdiag(const DensityMatrix& sigma, const OffDiagInstance& inst, Rng& rng) {
  if (!sigma.is_diagonal()) throw ValidationError("instance constructors need a diagonal sigma");
  const CMatrix w = haar_isometry(inst.rows.size(), inst.cols.size(), rng);
  return DensityMatrix(HermitianMatrix(sigma.matrix() + offdiag_perturbation(sigma.dim(), inst, w)));
}

double corner_trace_distance(double eps) { return 2.0 * std::sqrt(std::pow(eps, 4) / 16.0 + eps * eps / 4.0); }

CornerInstance make_corner(const Spectrum& spec, double eps) {
  if (spec.size() < 2) throw ValidationError("corner instance needs dimension at least 2");
  if (!(eps > 0.0) || eps > 0.5) throw ValidationError("corner instance needs 0 < eps <= 1/2");
  std::vector<std::size_t> order(spec.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return spec[a] > spec[b]; });
  CornerInstance inst{order[0], order[1], eps};
  const double l1 = spec[inst.i1], l2 = spec[inst.i2];
  if (l1 < 0.75 - 1e-12) throw ValidationError("corner instance needs the largest entry to be at least 3/4");
  // 2x2 block is PSD iff (l1 - x)(l2 + x) >= x with x = eps^2/4.
  const double b = 1.0 - l1 + l2;
  const double xmax = 0.5 * (-b + std::sqrt(b * b + 4.0 * l1 * l2));
  const double max_feasible = std::min(0.5, 2.0 * std::sqrt(std::max(0.0, xmax)));
  if (eps > max_feasible * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "corner instance is not PSD for eps " << eps << " (max " << max_feasible << ")";
    throw InfeasibleError(os.str(), max_feasible);
  }
  return inst;
}

DensityMatrix build_corner(const DensityMatrix& sigma, const CornerInstance& inst, int u) {
  if (u != 1 && u != -1) throw ValidationError("corner sign must be +1 or -1");
  if (!sigma.is_diagonal()) throw ValidationError("instance constructors need a diagonal sigma");
  CMatrix m = sigma.matrix();
  const double shift = inst.eps * inst.eps / 4.0;
  m(inst.i1, inst.i1) -= shift;
  m(inst.i2, inst.i2) += shift;
  m(inst.i1, inst.i2) = 0.5 * inst.eps * u;
  m(inst.i2, inst.i1) = 0.5 * inst.eps * u;
  return DensityMatrix(HermitianMatrix(m));
}

}  // namespace qcert
