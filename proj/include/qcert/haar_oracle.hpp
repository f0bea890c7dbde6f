#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "qcert/linalg.hpp"
#include "qcert/measurement.hpp"
#include "qcert/random.hpp"

namespace qcert {

// Permutation of {0, ..., l-1} in one-line notation, l <= 6.
class Permutation {
 public:
  static constexpr std::size_t kMaxSize = 6;

  explicit Permutation(std::vector<int> image);
  static Permutation identity(std::size_t l);

  std::size_t size() const { return image_.size(); }
  int operator()(std::size_t i) const { return image_[i]; }
  const std::vector<int>& image() const { return image_; }
  // Cycle lengths, descending.
  const std::vector<int>& cycle_type() const { return cycle_type_; }
  std::size_t cycles() const { return cycle_type_.size(); }
  Permutation inverse() const;

  bool operator==(const Permutation& o) const { return image_ == o.image_; }

 private:
  std::vector<int> image_;
  std::vector<int> cycle_type_;
};

// (a * b)(i) = a(b(i))
Permutation operator*(const Permutation& a, const Permutation& b);
std::vector<Permutation> all_permutations(std::size_t l);

class WeingartenTable {
 public:
  WeingartenTable(std::size_t l, std::size_t d, std::map<std::vector<int>, double> by_class)
      : l_(l), d_(d), by_class_(std::move(by_class)) {}
  std::size_t l() const { return l_; }
  std::size_t d() const { return d_; }
  double operator()(const Permutation& p) const { return by_class_.at(p.cycle_type()); }
  const std::map<std::vector<int>, double>& by_class() const { return by_class_; }

 private:
  std::size_t l_;
  std::size_t d_;
  std::map<std::vector<int>, double> by_class_;
};

WeingartenTable weingarten_table(std::size_t l, std::size_t d);
// max over s of |sum_t d^{c(s t^-1)} Wg(t) - [s = e]|
double weingarten_orthogonality_residual(const WeingartenTable& wg);

// <A>_p = prod over cycles C of p of Tr(A^{|C|}).
double cycle_trace(const Permutation& p, const std::vector<double>& power_traces);
std::vector<double> power_traces(const HermitianMatrix& a, std::size_t l);

// E_U[Tr(A U^dagger B U)^l] by the Weingarten sum over S_l x S_l.
double haar_moment(const HermitianMatrix& a, const HermitianMatrix& b, std::size_t l);

struct MonteCarloEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
};

MonteCarloEstimate haar_moment_mc(const HermitianMatrix& a, const HermitianMatrix& b, std::size_t l,
                                  std::size_t samples, Rng& rng);

struct MomentsReport {
  std::size_t d = 0;
  double hs_norm_sq = 0.0;
  MonteCarloEstimate first;
  double first_expected = 0.0;
  bool first_pass = false;
  MonteCarloEstimate second;
  double second_bound = 0.0;  // 1.5 |M|_HS^4 / d^4
  bool second_pass = false;
  double jensen_floor = 0.0;      // first_expected^2, a lower bound on E[Z^2]
  double second_ratio_d2 = 0.0;   // E[Z^2] d^2 / |M|_HS^4
};

// Z = sum_i (U_i^dagger M U_i)^2 over the columns of a Haar unitary.
MomentsReport verify_moments_basic(const HermitianMatrix& m, std::size_t samples, Rng& rng);

// Weighted list of states; weights sum to one.
struct StateEnsemble {
  std::vector<DensityMatrix> members;
  std::vector<double> weights;

  static StateEnsemble uniform(std::vector<DensityMatrix> members);
};

struct DivergenceRecord {
  double tv = 0.0;
  double chi2 = 0.0;
  double kl = 0.0;
  double min_likelihood_ratio = 1.0;  // min over transcripts with p0 > 0 of p1 / p0
  std::uint64_t transcripts = 0;
};

constexpr std::uint64_t kMaxTranscripts = 1000000;

// Enumerates every transcript of the schedule; p0 is the product law under sigma and p1 the
// ensemble mixture of product laws.
DivergenceRecord exact_transcript_divergence(const DensityMatrix& sigma, const StateEnsemble& ensemble,
                                             const NonadaptiveSchedule& schedule);

struct IngsterEstimate {
  double bound = 0.0;  // max over schedule steps t of mean (1 + phi_t)^N - 1
  double std_error = 0.0;
  std::size_t argmax_step = 0;
};

// Samples of phi^{U,V} for a schedule that repeats one POVM.
IngsterEstimate ingster_bound(const std::vector<double>& phi_samples, std::size_t n);
// One sample list per schedule step (same (U, V) draws across steps).
IngsterEstimate ingster_bound(const std::vector<std::vector<double>>& phi_by_step, std::size_t n);

}  // namespace qcert
