#pragma once

// Shot sampling, measurement grouping (qubit-wise and general commutativity),
// simultaneous diagonalization of commuting Pauli sets and the two-qubit Bell
// measurement.

#include "pvqe/qstate.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace pvqe {

/// Outcome histogram over `dim` basis indices.
struct Counts {
  std::size_t dim = 0;
  std::uint64_t shots = 0;
  std::map<std::size_t, std::uint64_t> counts;

  std::uint64_t operator[](std::size_t index) const;
  /// Normalized frequencies as a dense vector of length dim.
  RVector frequencies() const;
  /// Throws ValidationError unless indices are < dim and values sum to shots.
  void validate() const;
};

/// CSV with header `index,count`; zero bins are omitted.
std::string format_counts_csv(const Counts &c);
Counts parse_counts_csv(std::istream &in, std::size_t dim);

/// Multinomial draw of `shots` outcomes from the distribution of `s` in the
/// basis given by the rows of `basis_change`.
Counts sample_observable(const QuantumState &s, const CMatrix &basis_change, std::uint64_t shots,
                         std::uint64_t seed);
/// Multinomial draw from an explicit probability vector.
Counts sample_distribution(const RVector &probabilities, std::uint64_t shots, std::uint64_t seed);

struct SignedZ {
  int sign = 1;
  PauliString z; // only I and Z letters
};

struct Diagonalizer {
  CMatrix unitary;
  std::vector<SignedZ> images; // one per input string
};

/// One Clifford C with C P_i C^dagger = s_i Z_i for every input, found by
/// elimination over the symplectic representation. Throws ValidationError on
/// non-commuting input.
Diagonalizer simultaneous_diagonalizer(std::span<const PauliString> strings);

/// Largest |C P C^dagger - s Z| entry over the group.
double diagonalizer_residual(std::span<const PauliString> strings, const Diagonalizer &d);

struct MeasurementGroup {
  std::vector<PauliString> strings;
  CMatrix basis_change;
  std::vector<SignedZ> images;
};

enum class Grouping { QWC, GC, Bell };

std::string to_string(Grouping g);
Grouping grouping_from_string(const std::string &s);

/// Greedy first-fit over non-identity terms sorted by descending |w|;
/// single-qubit basis changes.
std::vector<MeasurementGroup> qwc_groups(const OperatorSum &op);
/// Starts from the qwc partition, then dissolves groups (smallest first)
/// whose members all fit into other groups under matrix commutation.
std::vector<MeasurementGroup> gc_groups(const OperatorSum &op);
/// Two-qubit only: XX, YY and ZZ share one Bell-basis group; other terms are
/// grouped qubit-wise.
std::vector<MeasurementGroup> bell_groups(const OperatorSum &op);
std::vector<MeasurementGroup> make_groups(const OperatorSum &op, Grouping g);

/// Rows <Phi+|, <Phi-|, <Psi+|, <Psi-|.
CMatrix bell_basis_change();
/// Throws ValidationError unless every non-identity term of op is in exactly
/// one group and each group is internally consistent.
void check_exact_cover(const OperatorSum &op, std::span<const MeasurementGroup> groups);

/// Text listing of strings, signs and Z-images per group.
std::string format_group_report(std::span<const MeasurementGroup> groups);

struct BellResult {
  Counts counts; // index 0..3 = Phi+, Phi-, Psi+, Psi-
  double xx = 0, yy = 0, zz = 0;
  double xx_err = 0, yy_err = 0, zz_err = 0;
};

BellResult bell_measurement(const QuantumState &s, std::uint64_t shots, std::uint64_t seed);

enum class ShotAllocation { Equal, Weighted };

struct ShotPlan {
  std::uint64_t shots_per_group = 1000;
  ShotAllocation allocation = ShotAllocation::Equal;
};

/// Maps raw counts to a (quasi-)probability vector, e.g. readout mitigation.
using CountsMitigator = std::function<RVector(const Counts &)>;
/// Perturbs counts after sampling, e.g. injected readout error. The seed is
/// per group.
using CountsChannel = std::function<Counts(const Counts &, std::uint64_t seed)>;

struct Estimate {
  double value = 0;
  double std_error = 0;
  std::uint64_t shots = 0;
};

/// Weighted sum of grouped Pauli expectations from sampled counts. The
/// identity coefficient is added exactly. Standard error is the square root
/// of the summed per-group estimator variances.
Estimate estimate_pauli_sum(const QuantumState &s, const OperatorSum &op,
                            std::span<const MeasurementGroup> groups, const ShotPlan &plan,
                            std::uint64_t seed, const CountsChannel &readout = {},
                            const CountsMitigator &mitigator = {});

/// Expectation of a signed Z-type string under a distribution over basis
/// indices.
double z_expectation(const RVector &p, const SignedZ &image);

} // namespace pvqe
