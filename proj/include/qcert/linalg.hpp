#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace qcert {

using cplx = std::complex<double>;

// Dense complex matrix, row-major.
class CMatrix {
 public:
  CMatrix() = default;
  CMatrix(std::size_t rows, std::size_t cols);
  CMatrix(std::size_t rows, std::size_t cols, std::vector<cplx> entries);

  static CMatrix identity(std::size_t n);
  static CMatrix diagonal(const std::vector<double>& diag);
  static CMatrix column(const std::vector<cplx>& v);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool square() const { return rows_ == cols_; }

  cplx& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const cplx& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  const std::vector<cplx>& entries() const { return data_; }

  CMatrix adjoint() const;
  cplx trace() const;
  double hs_norm() const;
  double max_abs() const;
  std::vector<cplx> col(std::size_t j) const;

  // Submatrix with the given row and column index lists.
  CMatrix select(const std::vector<std::size_t>& rows, const std::vector<std::size_t>& cols) const;

  CMatrix& operator+=(const CMatrix& o);
  CMatrix& operator-=(const CMatrix& o);
  CMatrix& operator*=(cplx s);

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<cplx> data_;
};

CMatrix operator*(const CMatrix& a, const CMatrix& b);
CMatrix operator+(CMatrix a, const CMatrix& b);
CMatrix operator-(CMatrix a, const CMatrix& b);
CMatrix operator*(cplx s, CMatrix a);

// a^dagger * b without forming the adjoint.
CMatrix adjoint_times(const CMatrix& a, const CMatrix& b);
// v^dagger M v
cplx quadratic_form(const CMatrix& m, const std::vector<cplx>& v);
// Re Tr(A B) for square A, B.
double trace_product(const CMatrix& a, const CMatrix& b);

// Hermitian matrix; symmetrized on construction.
class HermitianMatrix {
 public:
  HermitianMatrix() = default;
  explicit HermitianMatrix(const CMatrix& m, double tol = 1e-12);

  std::size_t dim() const { return m_.rows(); }
  const CMatrix& matrix() const { return m_; }
  double operator()(std::size_t i) const { return m_(i, i).real(); }
  double trace() const { return m_.trace().real(); }

 private:
  CMatrix m_;
};

struct EigenDecomposition {
  std::vector<double> values;  // ascending
  CMatrix vectors;             // columns are eigenvectors
  int sweeps = 0;
};

constexpr int kJacobiMaxSweeps = 100;

EigenDecomposition hermitian_eig(const HermitianMatrix& h);
std::vector<double> eigenvalues(const HermitianMatrix& h);

// Unit-trace PSD Hermitian matrix.
class DensityMatrix {
 public:
  static constexpr double kTol = 1e-9;

  DensityMatrix() = default;
  explicit DensityMatrix(const HermitianMatrix& h, double tol = kTol);
  explicit DensityMatrix(const CMatrix& m, double tol = kTol);

  static DensityMatrix diagonal(const std::vector<double>& diag, double tol = kTol);
  static DensityMatrix maximally_mixed(std::size_t d);

  std::size_t dim() const { return h_.dim(); }
  const HermitianMatrix& hermitian() const { return h_; }
  const CMatrix& matrix() const { return h_.matrix(); }
  bool is_diagonal(double tol = 1e-14) const;
  std::vector<double> diag() const;

 private:
  HermitianMatrix h_;
};

double trace_distance(const DensityMatrix& a, const DensityMatrix& b);
// Sum of absolute eigenvalues of a Hermitian matrix.
double trace_norm(const HermitianMatrix& h);
// Sum of singular values of an arbitrary matrix.
double trace_norm(const CMatrix& m);
double schatten_quasinorm(const HermitianMatrix& h, double p);
double schatten_quasinorm(const std::vector<double>& eigenvalues, double p);
double fidelity_mm(const DensityMatrix& sigma);
double fidelity_mm(const std::vector<double>& spectrum);
bool is_psd(const HermitianMatrix& h, double tol = DensityMatrix::kTol);
// PSD test of [[A, B], [B^dagger, C]] through the Schur complement of A.
bool schur_psd_check(const HermitianMatrix& a, const CMatrix& b, const HermitianMatrix& c,
                     double tol = DensityMatrix::kTol);
CMatrix assemble_blocks(const CMatrix& a, const CMatrix& b, const CMatrix& c);

}  // namespace qcert
