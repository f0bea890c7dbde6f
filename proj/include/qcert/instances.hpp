#pragma once

#include <map>
#include <optional>
#include <vector>

#include "qcert/linalg.hpp"
#include "qcert/random.hpp"
#include "qcert/spectrum.hpp"

namespace qcert {

struct PaninskiInstance {
  std::vector<double> lambdas;
  BucketDecomposition buckets;
  std::map<int, double> eps_j;  // buckets with d_j > 1
  double zeta = 0.0;
  double eps = 0.0;
  double residual = 0.0;  // |sum 2 floor(d_j/2) eps_j - eps|
};

// Sum over multi-element buckets of 2 floor(d_j/2) 2^{-j-1}.
double paninski_saturation(const BucketDecomposition& buckets);
PaninskiInstance tune_paninski(const Spectrum& spec, double eps);
// Diagonal perturbation E: +eps_j on the first floor(d_j/2) entries of S_j, -eps_j on the next floor(d_j/2).
std::vector<double> paninski_perturbation(const PaninskiInstance& inst);
DensityMatrix sample_paninski(const DensityMatrix& sigma, const PaninskiInstance& inst, Rng& rng);

struct OffDiagInstance {
  int j = 0;
  int jp = 0;
  double eps = 0.0;
  std::vector<std::size_t> rows;  // S_j, or the first half of S_j when j == jp
  std::vector<std::size_t> cols;  // S_{j'}, or the second half of S_j when j == jp
  double amplitude = 0.0;         // eps / (2 |cols|)
  double max_feasible = 0.0;
};

// Default buckets: j = argmax d_j and j' = argmax d_j^2 2^{-j}; either may be overridden.
OffDiagInstance make_offdiag(const Spectrum& spec, double eps, std::optional<int> j = std::nullopt,
                             std::optional<int> jp = std::nullopt);
CMatrix offdiag_perturbation(std::size_t d, const OffDiagInstance& inst, const CMatrix& w);
DensityMatrix build_offdiag(const DensityMatrix& sigma, const OffDiagInstance& inst, Rng& rng);

struct CornerInstance {
  std::size_t i1 = 0;  // largest entry
  std::size_t i2 = 1;  // second largest
  double eps = 0.0;
};

CornerInstance make_corner(const Spectrum& spec, double eps);
DensityMatrix build_corner(const DensityMatrix& sigma, const CornerInstance& inst, int u);
double corner_trace_distance(double eps);

}  // namespace qcert
