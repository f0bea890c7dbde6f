#include "qcert/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "qcert/errors.hpp"

namespace qcert {

CMatrix::CMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, cplx(0.0, 0.0)) {}

CMatrix::CMatrix(std::size_t rows, std::size_t cols, std::vector<cplx> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
  if (data_.size() != rows * cols) {
    throw ValidationError("matrix entry count does not match its shape");
  }
}

CMatrix CMatrix::identity(std::size_t n) {
  CMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

CMatrix CMatrix::diagonal(const std::vector<double>& diag) {
  CMatrix m(diag.size(), diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
  return m;
}

CMatrix CMatrix::column(const std::vector<cplx>& v) { return CMatrix(v.size(), 1, v); }

CMatrix CMatrix::adjoint() const {
  CMatrix out(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) out(j, i) = std::conj((*this)(i, j));
  return out;
}

cplx CMatrix::trace() const {
  cplx t = 0.0;
  for (std::size_t i = 0; i < std::min(rows_, cols_); ++i) t += (*this)(i, i);
  return t;
}

double CMatrix::hs_norm() const {
  double s = 0.0;
  for (const auto& x : data_) s += std::norm(x);
  return std::sqrt(s);
}

double CMatrix::max_abs() const {
  double m = 0.0;
  for (const auto& x : data_) m = std::max(m, std::abs(x));
  return m;
}

std::vector<cplx> CMatrix::col(std::size_t j) const {
  std::vector<cplx> v(rows_);
  for (std::size_t i = 0; i < rows_; ++i) v[i] = (*this)(i, j);
  return v;
}

CMatrix CMatrix::select(const std::vector<std::size_t>& rows,
                        const std::vector<std::size_t>& cols) const {
  CMatrix out(rows.size(), cols.size());
  for (std::size_t a = 0; a < rows.size(); ++a)
    for (std::size_t b = 0; b < cols.size(); ++b) out(a, b) = (*this)(rows[a], cols[b]);
  return out;
}

CMatrix& CMatrix::operator+=(const CMatrix& o) {
  if (rows_ != o.rows_ || cols_ != o.cols_) throw ValidationError("matrix shape mismatch in +");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
  return *this;
}

CMatrix& CMatrix::operator-=(const CMatrix& o) {
  if (rows_ != o.rows_ || cols_ != o.cols_) throw ValidationError("matrix shape mismatch in -");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
  return *this;
}

CMatrix& CMatrix::operator*=(cplx s) {
  for (auto& x : data_) x *= s;
  return *this;
}

CMatrix operator*(const CMatrix& a, const CMatrix& b) {
  if (a.cols() != b.rows()) throw ValidationError("matrix shape mismatch in *");
  CMatrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const cplx aik = a(i, k);
      if (aik == cplx(0.0, 0.0)) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  return out;
}

CMatrix operator+(CMatrix a, const CMatrix& b) { return a += b; }
CMatrix operator-(CMatrix a, const CMatrix& b) { return a -= b; }
CMatrix operator*(cplx s, CMatrix a) { return a *= s; }

CMatrix adjoint_times(const CMatrix& a, const CMatrix& b) {
  if (a.rows() != b.rows()) throw ValidationError("matrix shape mismatch in adjoint_times");
  CMatrix out(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k)
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const cplx aki = std::conj(a(k, i));
      if (aki == cplx(0.0, 0.0)) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aki * b(k, j);
    }
  return out;
}

cplx quadratic_form(const CMatrix& m, const std::vector<cplx>& v) {
  cplx s = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    if (v[i] == cplx(0.0, 0.0)) continue;
    cplx row = 0.0;
    for (std::size_t j = 0; j < m.cols(); ++j) row += m(i, j) * v[j];
    s += std::conj(v[i]) * row;
  }
  return s;
}

double trace_product(const CMatrix& a, const CMatrix& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) s += (a(i, k) * b(k, i)).real();
  return s;
}

HermitianMatrix::HermitianMatrix(const CMatrix& m, double tol) {
  if (!m.square() || m.rows() == 0) throw ValidationError("Hermitian matrix must be square and nonempty");
  const std::size_t n = m.rows();
  CMatrix s(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      const cplx a = m(i, j);
      const cplx b = std::conj(m(j, i));
      if (std::abs(a - b) > tol) {
        std::ostringstream os;
        os << "matrix is not Hermitian at (" << i << "," << j << "): deviation " << std::abs(a - b);
        throw ValidationError(os.str());
      }
      const cplx avg = 0.5 * (a + b);
      s(i, j) = avg;
      s(j, i) = std::conj(avg);
    }
  for (std::size_t i = 0; i < n; ++i) s(i, i) = s(i, i).real();
  m_ = std::move(s);
}

EigenDecomposition hermitian_eig(const HermitianMatrix& h) {
  const std::size_t n = h.dim();
  CMatrix a = h.matrix();
  CMatrix v = CMatrix::identity(n);
  const double threshold = 1e-13 * a.hs_norm();
  // Off-diagonal entries below this are zeroed instead of rotated.
  const double negligible = 1e-30 * a.hs_norm();

  auto off_norm = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) s += std::norm(a(i, j));
    return std::sqrt(s);
  };

  int sweep = 0;
  while (off_norm() > threshold) {
    if (sweep == kJacobiMaxSweeps) {
      throw NumericError("Jacobi eigensolver did not converge within " +
                         std::to_string(kJacobiMaxSweeps) + " sweeps");
    }
    ++sweep;
    for (std::size_t p = 0; p + 1 < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        const cplx apq = a(p, q);
        const double g = std::abs(apq);
        if (g <= negligible) {
          a(p, q) = 0.0;
          a(q, p) = 0.0;
          continue;
        }
        const cplx e = std::polar(1.0, std::arg(apq));
        const double theta = (a(q, q).real() - a(p, p).real()) / (2.0 * g);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        const cplx ec = std::conj(e);
        // J = [[c, s], [-s conj(e), c conj(e)]] on coordinates (p, q).
        for (std::size_t k = 0; k < n; ++k) {
          const cplx akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * ec * akq;
          a(k, q) = s * akp + c * ec * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const cplx apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * e * aqk;
          a(q, k) = s * apk + c * e * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        a(p, p) = a(p, p).real();
        a(q, q) = a(q, q).real();
        for (std::size_t k = 0; k < n; ++k) {
          const cplx vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * ec * vkq;
          v(k, q) = s * vkp + c * ec * vkq;
        }
      }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return a(x, x).real() < a(y, y).real(); });
  EigenDecomposition out;
  out.values.resize(n);
  out.vectors = CMatrix(n, n);
  out.sweeps = sweep;
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = a(order[k], order[k]).real();
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = v(i, order[k]);
  }
  return out;
}

std::vector<double> eigenvalues(const HermitianMatrix& h) { return hermitian_eig(h).values; }

namespace {

// Eigenvalues with solver noise (below 1e-13 of the largest magnitude) set to zero.
std::vector<double> cleaned_eigenvalues(const HermitianMatrix& h) {
  auto eigs = eigenvalues(h);
  double scale = 0.0;
  for (double x : eigs) scale = std::max(scale, std::abs(x));
  for (double& x : eigs)
    if (std::abs(x) <= 1e-13 * scale) x = 0.0;
  return eigs;
}

}  // namespace

DensityMatrix::DensityMatrix(const HermitianMatrix& h, double tol) : h_(h) {
  const double tr = h_.trace();
  if (std::abs(tr - 1.0) > tol) {
    throw ValidationError("density matrix trace " + std::to_string(tr) + " is not 1");
  }
  if (!is_psd(h_, tol)) throw ValidationError("density matrix is not positive semidefinite");
}

DensityMatrix::DensityMatrix(const CMatrix& m, double tol) : DensityMatrix(HermitianMatrix(m), tol) {}

DensityMatrix DensityMatrix::diagonal(const std::vector<double>& diag, double tol) {
  return DensityMatrix(HermitianMatrix(CMatrix::diagonal(diag)), tol);
}

DensityMatrix DensityMatrix::maximally_mixed(std::size_t d) {
  return diagonal(std::vector<double>(d, 1.0 / static_cast<double>(d)));
}

bool DensityMatrix::is_diagonal(double tol) const {
  const auto& m = matrix();
  for (std::size_t i = 0; i < dim(); ++i)
    for (std::size_t j = 0; j < dim(); ++j)
      if (i != j && std::abs(m(i, j)) > tol) return false;
  return true;
}

std::vector<double> DensityMatrix::diag() const {
  std::vector<double> d(dim());
  for (std::size_t i = 0; i < dim(); ++i) d[i] = matrix()(i, i).real();
  return d;
}

double trace_norm(const HermitianMatrix& h) {
  double s = 0.0;
  for (double x : eigenvalues(h)) s += std::abs(x);
  return s;
}

double trace_norm(const CMatrix& m) {
  const HermitianMatrix gram(adjoint_times(m, m), 1e-9 * (1.0 + m.hs_norm() * m.hs_norm()));
  double s = 0.0;
  for (double x : eigenvalues(gram)) s += std::sqrt(std::max(0.0, x));
  return s;
}

double trace_distance(const DensityMatrix& a, const DensityMatrix& b) {
  if (a.dim() != b.dim()) throw ValidationError("trace_distance: dimension mismatch");
  return trace_norm(HermitianMatrix(a.matrix() - b.matrix()));
}

double schatten_quasinorm(const std::vector<double>& eigs, double p) {
  if (!(p > 0.0)) throw ValidationError("Schatten exponent must be positive");
  double s = 0.0;
  for (double x : eigs) {
    const double ax = std::abs(x);
    if (ax > 0.0) s += std::pow(ax, p);
  }
  return std::pow(s, 1.0 / p);
}

double schatten_quasinorm(const HermitianMatrix& h, double p) {
  if (!(p > 0.0)) throw ValidationError("Schatten exponent must be positive");
  return schatten_quasinorm(cleaned_eigenvalues(h), p);
}

double fidelity_mm(const std::vector<double>& spectrum) {
  double s = 0.0;
  for (double x : spectrum) s += std::sqrt(std::max(0.0, x));
  return s * s / static_cast<double>(spectrum.size());
}

double fidelity_mm(const DensityMatrix& sigma) {
  if (sigma.is_diagonal()) return fidelity_mm(sigma.diag());
  return fidelity_mm(cleaned_eigenvalues(sigma.hermitian()));
}

bool is_psd(const HermitianMatrix& h, double tol) {
  bool diagonal = true;
  const auto& m = h.matrix();
  for (std::size_t i = 0; i < h.dim() && diagonal; ++i)
    for (std::size_t j = 0; j < h.dim(); ++j)
      if (i != j && m(i, j) != cplx(0.0, 0.0)) {
        diagonal = false;
        break;
      }
  if (diagonal) {
    for (std::size_t i = 0; i < h.dim(); ++i)
      if (m(i, i).real() < -tol) return false;
    return true;
  }
  return eigenvalues(h).front() >= -tol;
}

CMatrix assemble_blocks(const CMatrix& a, const CMatrix& b, const CMatrix& c) {
  const std::size_t n = a.rows(), k = c.rows();
  if (!a.square() || !c.square() || b.rows() != n || b.cols() != k) {
    throw ValidationError("block shapes are inconsistent");
  }
  CMatrix out(n + k, n + k);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out(i, j) = a(i, j);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) out(n + i, n + j) = c(i, j);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      out(i, n + j) = b(i, j);
      out(n + j, i) = std::conj(b(i, j));
    }
  return out;
}

bool schur_psd_check(const HermitianMatrix& a, const CMatrix& b, const HermitianMatrix& c, double tol) {
  if (b.rows() != a.dim() || b.cols() != c.dim()) throw ValidationError("block shapes are inconsistent");
  const auto eig = hermitian_eig(a);
  const double scale = std::max(1.0, std::abs(eig.values.back()));
  if (eig.values.front() <= 1e-12 * scale) throw ValidationError("Schur complement needs a nonsingular A block");
  if (eig.values.front() < 0.0) return false;
  // A^{-1} B = V diag(1/lambda) V^dagger B
  CMatrix vb = adjoint_times(eig.vectors, b);
  for (std::size_t i = 0; i < vb.rows(); ++i)
    for (std::size_t j = 0; j < vb.cols(); ++j) vb(i, j) /= eig.values[i];
  const CMatrix ainv_b = eig.vectors * vb;
  const CMatrix schur = c.matrix() - adjoint_times(b, ainv_b);
  return is_psd(HermitianMatrix(schur, 1e-9 * (1.0 + schur.hs_norm())), tol);
}

}  // namespace qcert
