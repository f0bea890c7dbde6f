#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "qcert/linalg.hpp"
#include "qcert/random.hpp"
#include "qcert/spectrum.hpp"

namespace qcert {

// Finite POVM. Element z is stored through a factor F_z with M_z = F_z F_z^dagger,
// so every element is PSD by construction; completeness is checked once here.
class Povm {
 public:
  static constexpr double kTol = 1e-9;

  Povm() = default;
  Povm(std::vector<CMatrix> factors, std::vector<std::string> labels = {}, std::string id = {},
       double tol = kTol);
  static Povm from_elements(const std::vector<HermitianMatrix>& elements, std::vector<std::string> labels = {},
                            std::string id = {}, double tol = kTol);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return factors_.size(); }
  const CMatrix& factor(std::size_t z) const { return factors_[z]; }
  CMatrix element(std::size_t z) const;
  const std::string& label(std::size_t z) const { return labels_[z]; }
  const std::string& id() const { return id_; }

 private:
  std::size_t dim_ = 0;
  std::vector<CMatrix> factors_;
  std::vector<std::string> labels_;
  std::string id_;
};

// Rank-one POVM on the columns of a unitary.
Povm basis_povm(const CMatrix& u, std::string id = "basis");
// Two outcomes: the coordinate projector onto `coords` (label "in") and its complement ("out").
Povm projector_povm(std::size_t d, const std::vector<std::size_t>& coords, std::string id = "projector");

struct NonadaptiveSchedule {
  std::vector<Povm> povms;
  std::size_t size() const { return povms.size(); }
};

// <M_z, rho> for every outcome.
std::vector<double> outcome_distribution(const DensityMatrix& rho, const Povm& m);
double outcome_probability(const CMatrix& rho, const CMatrix& factor);

// Restriction of every element to every bucket block: M_{j,z} = P_j M_z P_j with f(j, z) = z.
// Indices outside all buckets form one extra block.
std::pair<Povm, std::vector<std::size_t>> project_povm_to_blocks(const Povm& m, const BucketDecomposition& buckets);
std::vector<double> pushforward(const std::vector<double>& p, const std::vector<std::size_t>& outcome_map,
                                std::size_t target_size);

double likelihood_g(const CMatrix& element, const DensityMatrix& rho, const DensityMatrix& rho_alt);
double phi(const Povm& m, const DensityMatrix& rho, const DensityMatrix& rho_u, const DensityMatrix& rho_v);
// E_{z ~ p0}[(g_U + g_V)^2].
double k_quantity(const Povm& m, const DensityMatrix& rho, const DensityMatrix& rho_u, const DensityMatrix& rho_v);
// E_{z ~ p0}[g(z)].
double g_mean(const Povm& m, const DensityMatrix& rho, const DensityMatrix& rho_alt);

struct TranscriptEntry {
  std::string povm;
  std::size_t outcome = 0;
  std::string label;
};
using Transcript = std::vector<TranscriptEntry>;
std::string transcript_jsonl(const Transcript& t);

// Something that measures copies of a hidden state. Views (rotation, conditioning) forward
// to a parent and charge every physical copy to it.
class MeasurementChannel {
 public:
  virtual ~MeasurementChannel() = default;
  virtual std::size_t dim() const = 0;
  virtual std::uint64_t copies_used() const = 0;
  virtual std::size_t measure(const Povm& m) = 0;
  virtual std::vector<std::uint64_t> measure_counts(const Povm& m, std::uint64_t n) = 0;
  // Measures copies one at a time until `n_accept` outcomes with accept[z] have been seen;
  // returns counts of all outcomes, rejected ones included.
  virtual std::vector<std::uint64_t> measure_until(const Povm& m, const std::vector<bool>& accept,
                                                   std::uint64_t n_accept) = 0;
};

class CopySource : public MeasurementChannel {
 public:
  CopySource(DensityMatrix rho, std::uint64_t budget, Rng rng);

  std::size_t dim() const override { return rho_.dim(); }
  std::uint64_t copies_used() const override { return used_; }
  std::uint64_t budget() const { return budget_; }
  const DensityMatrix& hidden_state() const { return rho_; }

  std::size_t measure(const Povm& m) override;
  std::vector<std::uint64_t> measure_counts(const Povm& m, std::uint64_t n) override;
  std::vector<std::uint64_t> measure_until(const Povm& m, const std::vector<bool>& accept,
                                           std::uint64_t n_accept) override;

  void record_transcript(bool on) { recording_ = on; }
  const Transcript& transcript() const { return transcript_; }

 private:
  void charge(std::uint64_t n);
  std::size_t draw(const Povm& m, const std::vector<double>& p);

  DensityMatrix rho_;
  std::uint64_t budget_;
  std::uint64_t used_ = 0;
  Rng rng_;
  bool recording_ = false;
  Transcript transcript_;
};

// Applies M -> V M V^dagger to every POVM before forwarding.
class RotatedChannel : public MeasurementChannel {
 public:
  RotatedChannel(MeasurementChannel& parent, CMatrix v);

  std::size_t dim() const override { return parent_.dim(); }
  std::uint64_t copies_used() const override { return parent_.copies_used(); }
  std::size_t measure(const Povm& m) override;
  std::vector<std::uint64_t> measure_counts(const Povm& m, std::uint64_t n) override;
  std::vector<std::uint64_t> measure_until(const Povm& m, const std::vector<bool>& accept,
                                           std::uint64_t n_accept) override;

 private:
  Povm rotate(const Povm& m) const;
  MeasurementChannel& parent_;
  CMatrix v_;
};

// The conditional state P rho P / Tr(P rho P) for a coordinate projector P, realized by
// rejection sampling: POVMs on the subspace are embedded, the complement I - P is added as
// a discard outcome, and every discarded copy is charged to the parent.
class ConditionalChannel : public MeasurementChannel {
 public:
  ConditionalChannel(MeasurementChannel& parent, std::vector<std::size_t> coords);

  std::size_t dim() const override { return coords_.size(); }
  std::uint64_t copies_used() const override { return parent_.copies_used(); }
  std::uint64_t discarded() const { return discarded_; }
  std::size_t measure(const Povm& m) override;
  std::vector<std::uint64_t> measure_counts(const Povm& m, std::uint64_t n) override;
  std::vector<std::uint64_t> measure_until(const Povm& m, const std::vector<bool>& accept,
                                           std::uint64_t n_accept) override;

 private:
  Povm refine(const Povm& m) const;
  MeasurementChannel& parent_;
  std::vector<std::size_t> coords_;
  std::vector<std::size_t> complement_;
  std::uint64_t discarded_ = 0;
};

}  // namespace qcert
