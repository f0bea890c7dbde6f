#pragma once

#include <cstdint>
#include <vector>

namespace qcert {

struct SampleCounts {
  std::vector<std::uint64_t> counts;
  std::uint64_t total = 0;

  SampleCounts() = default;
  explicit SampleCounts(std::vector<std::uint64_t> c);
  std::size_t domain() const { return counts.size(); }
};

// Z = sum_i (X_i - Y_i)^2 - X_i - Y_i.
double l2_statistic(const SampleCounts& x, const SampleCounts& y);

struct L2TestResult {
  bool accept = true;
  std::size_t rejections = 0;
  std::vector<double> statistics;
  double threshold = 0.0;
};

// Each round rejects when Z > N^2 eps^2 / 2; the verdict is the majority, ties accept.
L2TestResult l2_two_sample_test(const std::vector<SampleCounts>& x, const std::vector<SampleCounts>& y, double eps);
bool l2_round_rejects(const SampleCounts& x, const SampleCounts& y, double eps);
// max(1, ceil(18 ln(1/delta)))
std::size_t majority_rounds(double delta);

double l2_distance(const std::vector<double>& p, const std::vector<double>& q);
double tv_distance(const std::vector<double>& p, const std::vector<double>& q);
double chi_squared(const std::vector<double>& p, const std::vector<double>& q);
double kl_divergence(const std::vector<double>& p, const std::vector<double>& q);
// Zero the largest entry, then the smallest entries while their mass stays within eps; 2/3-quasinorm of the rest.
double l23_functional(const std::vector<double>& p, double eps);

void validate_distribution(const std::vector<double>& p, double tol = 1e-9);

}  // namespace qcert
