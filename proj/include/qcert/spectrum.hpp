#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace qcert {

// Probability vector of eigenvalues; entry i keeps original index i.
class Spectrum {
 public:
  static constexpr double kTol = 1e-9;

  Spectrum() = default;
  explicit Spectrum(std::vector<double> lambdas, double tol = kTol);

  std::size_t size() const { return lambdas_.size(); }
  double operator[](std::size_t i) const { return lambdas_[i]; }
  const std::vector<double>& values() const { return lambdas_; }

 private:
  std::vector<double> lambdas_;
};

// Dyadic bucket of a positive value: lambda in [2^{-j-1}, 2^{-j}), with lambda = 1 in bucket 0.
int bucket_index(double lambda);

struct BucketDecomposition {
  std::size_t dim = 0;
  std::map<int, std::vector<std::size_t>> buckets;  // j -> S_j, ascending indices
  std::vector<int> bucket_of;                       // -1 for zero entries

  std::size_t size(int j) const;
  std::vector<int> active() const;
  // Sum of the entries of `lambdas` over S_j.
  double mass(int j, const std::vector<double>& lambdas) const;
};

BucketDecomposition bucketize(const Spectrum& spec);
// Buckets of the nonzero entries of an arbitrary nonnegative vector.
BucketDecomposition bucketize_entries(const std::vector<double>& lambdas);

enum class RemovalVariant { LowerNonadaptive, LowerAdaptive, Upper };
std::string to_string(RemovalVariant v);

struct MassRemovalResult {
  RemovalVariant variant = RemovalVariant::Upper;
  double eps = 0.0;
  std::vector<std::size_t> tail;   // S_tail
  std::vector<std::size_t> light;  // S_light (lower-nonadaptive only)
  std::vector<std::size_t> extra;  // smallest entries removed for sigma** (lower-nonadaptive only)
  std::optional<std::size_t> largest;  // index zeroed as the largest entry, if any
  std::vector<double> sigma_prime;  // lower-nonadaptive, upper
  std::vector<double> sigma_star;   // lower-nonadaptive, adaptive
  std::vector<double> sigma_2star;  // lower-nonadaptive
  std::size_t d_eff = 0;
  double removed_mass = 0.0;
  BucketDecomposition surviving_buckets;

  // The spectrum the variant's bound is evaluated on: sigma**, sigma*, or sigma'.
  const std::vector<double>& survivors() const;
};

// Natural log of d/eps floored at 1.
double log_factor(std::size_t d, double eps);

MassRemovalResult remove_mass_lower_nonadaptive(const Spectrum& spec, double eps);
MassRemovalResult remove_mass_adaptive(const Spectrum& spec, double eps);
MassRemovalResult remove_mass_upper(const Spectrum& spec, double eps);

struct PredictedBounds {
  double lower_nonadaptive = 0.0;
  double lower_adaptive = 0.0;
  double upper = 0.0;
  bool degenerate_nonadaptive = false;
  bool degenerate_adaptive = false;
  bool degenerate_upper = false;
  std::size_t d_eff_nonadaptive = 0;
  std::size_t d_eff_adaptive = 0;
  std::size_t d_eff_upper = 0;
  double log_d_over_eps = 0.0;
};

PredictedBounds predicted_bounds(const Spectrum& spec, double eps);

}  // namespace qcert
