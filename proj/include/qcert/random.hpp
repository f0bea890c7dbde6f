#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "qcert/linalg.hpp"

namespace qcert {

struct BucketDecomposition;

// Stream identifier for trial `trial` of experiment `experiment`.
std::uint64_t stream_id(std::uint64_t experiment, std::uint64_t trial);

// Seeded generator; identical (master_seed, stream_index) gives identical output.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t master_seed, std::uint64_t stream_index = 0);

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  std::uint64_t master_seed() const { return master_seed_; }
  std::uint64_t stream_index() const { return stream_index_; }

  // Independent generator for a sub-experiment.
  Rng derive(std::uint64_t experiment, std::uint64_t trial) const;

  double uniform();  // [0, 1)
  double normal();   // Box-Muller
  cplx complex_normal();  // E|z|^2 = 1

 private:
  std::uint64_t master_seed_;
  std::uint64_t stream_index_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

CMatrix ginibre(std::size_t rows, std::size_t cols, Rng& rng);
CMatrix haar_unitary(std::size_t d, Rng& rng);
CMatrix haar_isometry(std::size_t rows, std::size_t cols, Rng& rng);
std::vector<cplx> haar_vector(std::size_t d, Rng& rng);
CMatrix block_haar(const BucketDecomposition& buckets, Rng& rng);

// Single uniform draw and cumulative scan.
std::size_t sample_discrete(const std::vector<double>& weights, Rng& rng);
// Counts of n i.i.d. draws, by sequential binomial splitting.
std::vector<std::uint64_t> sample_multinomial(std::uint64_t n, const std::vector<double>& weights, Rng& rng);

}  // namespace qcert
