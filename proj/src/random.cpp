#include "qcert/random.hpp"

#include <cmath>
#include <numbers>
#include <set>

#include "qcert/errors.hpp"
#include "qcert/spectrum.hpp"

namespace qcert {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::mt19937_64 seeded_engine(std::uint64_t seed, std::uint64_t stream) {
  const std::uint64_t a = splitmix64(seed);
  const std::uint64_t b = splitmix64(a ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace

std::uint64_t stream_id(std::uint64_t experiment, std::uint64_t trial) {
  return splitmix64(splitmix64(experiment) ^ (trial * 0xd1342543de82ef95ULL + 1));
}

Rng::Rng(std::uint64_t master_seed, std::uint64_t stream_index)
    : master_seed_(master_seed), stream_index_(stream_index), engine_(seeded_engine(master_seed, stream_index)) {}

Rng Rng::derive(std::uint64_t experiment, std::uint64_t trial) const {
  return Rng(master_seed_, splitmix64(stream_index_) ^ stream_id(experiment, trial));
}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double t = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(t);
  has_spare_ = true;
  return r * std::cos(t);
}

cplx Rng::complex_normal() {
  const double re = normal();
  const double im = normal();
  return cplx(re, im) * std::numbers::sqrt2 * 0.5;
}

CMatrix ginibre(std::size_t rows, std::size_t cols, Rng& rng) {
  CMatrix g(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) g(i, j) = rng.complex_normal();
  return g;
}

namespace {

// Columns of a tall Ginibre matrix orthonormalized by twice-iterated Gram-Schmidt.
// The implied R has a positive real diagonal, which makes the QR factorization unique.
CMatrix orthonormal_columns(CMatrix g) {
  const std::size_t n = g.rows(), k = g.cols();
  for (std::size_t j = 0; j < k; ++j) {
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t p = 0; p < j; ++p) {
        cplx dot = 0.0;
        for (std::size_t i = 0; i < n; ++i) dot += std::conj(g(i, p)) * g(i, j);
        for (std::size_t i = 0; i < n; ++i) g(i, j) -= dot * g(i, p);
      }
    }
    double nrm = 0.0;
    for (std::size_t i = 0; i < n; ++i) nrm += std::norm(g(i, j));
    nrm = std::sqrt(nrm);
    if (nrm < 1e-300) throw NumericError("degenerate Ginibre sample");
    for (std::size_t i = 0; i < n; ++i) g(i, j) /= nrm;
  }
  return g;
}

}  // namespace

CMatrix haar_unitary(std::size_t d, Rng& rng) {
  if (d == 0) throw ValidationError("haar_unitary: dimension must be positive");
  return orthonormal_columns(ginibre(d, d, rng));
}

CMatrix haar_isometry(std::size_t rows, std::size_t cols, Rng& rng) {
  if (cols == 0 || cols > rows) throw ValidationError("haar_isometry: need rows >= cols >= 1");
  // First `cols` columns of a Haar unitary: the Gram-Schmidt of the leading columns is unaffected
  // by the remaining ones.
  return orthonormal_columns(ginibre(rows, cols, rng));
}

std::vector<cplx> haar_vector(std::size_t d, Rng& rng) { return haar_isometry(d, 1, rng).col(0); }

CMatrix block_haar(const BucketDecomposition& buckets, Rng& rng) {
  const std::size_t d = buckets.dim;
  std::set<std::size_t> seen;
  for (const auto& [j, idx] : buckets.buckets)
    for (std::size_t i : idx) {
      if (i >= d || !seen.insert(i).second) throw ValidationError("block_haar: malformed bucket partition");
    }
  CMatrix u = CMatrix::identity(d);
  for (const auto& [j, idx] : buckets.buckets) {
    const std::size_t k = 2 * (idx.size() / 2);
    if (k == 0) continue;
    const CMatrix block = haar_unitary(k, rng);
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t b = 0; b < k; ++b) u(idx[a], idx[b]) = block(a, b);
  }
  return u;
}

std::size_t sample_discrete(const std::vector<double>& weights, Rng& rng) {
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw ValidationError("sample_discrete: negative weight");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ValidationError("sample_discrete: weights do not sum to 1");
  const double u = rng.uniform() * total;
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    acc += weights[i];
    last_positive = i;
    if (u < acc) return i;
  }
  return last_positive;
}

std::vector<std::uint64_t> sample_multinomial(std::uint64_t n, const std::vector<double>& weights, Rng& rng) {
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw ValidationError("sample_multinomial: negative weight");
    total += w;
  }
  if (!(total > 0.0)) throw ValidationError("sample_multinomial: weights sum to zero");
  std::vector<std::uint64_t> counts(weights.size(), 0);
  std::uint64_t remaining = n;
  double rest = total;
  for (std::size_t i = 0; i < weights.size() && remaining > 0; ++i) {
    if (weights[i] <= 0.0) continue;
    const double p = std::min(1.0, weights[i] / rest);
    std::uint64_t c;
    if (p >= 1.0) {
      c = remaining;
    } else {
      std::binomial_distribution<std::uint64_t> bin(remaining, p);
      c = bin(rng);
    }
    counts[i] = c;
    remaining -= c;
    rest -= weights[i];
    if (rest <= 0.0 && remaining > 0) {
      counts[i] += remaining;
      remaining = 0;
    }
  }
  if (remaining > 0) {
    for (std::size_t i = weights.size(); i-- > 0;)
      if (weights[i] > 0.0) {
        counts[i] += remaining;
        break;
      }
  }
  return counts;
}

}  // namespace qcert
