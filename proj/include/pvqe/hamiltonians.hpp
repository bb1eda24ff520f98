#pragma once

// Problem Hamiltonians as operator sums, the Jordan-Wigner mapping, the UCCSD
// ansatz state and ingestion of tabulated molecular coefficients.

#include "pvqe/qstate.hpp"

#include <array>
#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pvqe {

struct LadderOp {
  std::size_t mode;
  bool dagger;
};

struct FermionTerm {
  Complex coefficient;
  std::vector<LadderOp> factors; // operator product in written order
};

/// Linear combination of products of creation/annihilation operators.
class FermionOperator {
public:
  explicit FermionOperator(std::size_t mode_count) : mode_count_(mode_count) {}

  std::size_t mode_count() const noexcept { return mode_count_; }
  const std::vector<FermionTerm> &terms() const noexcept { return terms_; }

  /// Throws ValidationError if a mode index is out of range.
  void add(Complex c, std::vector<LadderOp> factors);
  FermionOperator adjoint() const;

  FermionOperator &operator+=(const FermionOperator &rhs);
  FermionOperator &operator*=(Complex s);

private:
  std::size_t mode_count_;
  std::vector<FermionTerm> terms_;
};

inline LadderOp create(std::size_t mode) { return {mode, true}; }
inline LadderOp annihilate(std::size_t mode) { return {mode, false}; }

/// a_j^dagger -> (X_j - iY_j)/2 Z_0...Z_{j-1}, a_j -> (X_j + iY_j)/2 Z_0...Z_{j-1};
/// mode j is qubit j. Up to 8 modes.
OperatorSum jordan_wigner(const FermionOperator &f);

/// Pauli templates of the reduced two-qubit molecular models, in the order the
/// weights are supplied.
inline const std::array<std::string, 5> kH2Terms = {"II", "IZ", "ZI", "ZZ", "XX"};
inline const std::array<std::string, 9> kHeHPlusTerms = {"II", "IZ", "ZI", "ZZ", "XX",
                                                         "IX", "ZX", "XI", "XZ"};

OperatorSum build_h2(std::span<const double> weights);
OperatorSum build_hehplus(std::span<const double> weights);
/// w1 XX + w2 YY + w3 ZZ.
OperatorSum build_heisenberg(double w1, double w2, double w3);

/// Two-qubit lattice Schwinger model at mass m:
/// II + XX + YY - ZI/2 + ZZ/2 + (m/2)(IZ - ZI).
OperatorSum build_schwinger(double mass);
/// Closed-form spectrum of build_schwinger, ascending.
std::array<double, 4> schwinger_exact_levels(double mass);

enum class FactoringForm {
  /// [N II - (6I - Z) x (6I - Z)]^2
  Pauli,
  /// [N II - (5I + 2 Pi) x (5I + 2 Pi)]^2 with Pi = (I - Z)/2
  Projector,
};

/// Factoring Hamiltonian whose ground space encodes the two factors of n.
/// Only n = 35 (factors 5 and 7 on one qubit each) is supported.
OperatorSum build_factoring(long n, FactoringForm form);

/// Cluster amplitudes of T = sum t_ia a_i^dagger a_a + sum t_ijab a_i^dagger a_j^dagger a_a a_b.
struct UccsdAmplitudes {
  std::size_t orbital_count = 0;
  std::map<std::array<std::size_t, 2>, double> singles;
  std::map<std::array<std::size_t, 4>, double> doubles;

  /// Throws ValidationError on out-of-range or degenerate index tuples.
  void validate() const;
};

inline constexpr std::size_t kMaxUccsdOrbitals = 4;

/// Generator T - T^dagger mapped through Jordan-Wigner.
OperatorSum uccsd_generator(const UccsdAmplitudes &amps);
/// exp(T - T^dagger) |reference>, exponentiated exactly.
StateVector uccsd_state(std::size_t reference, const UccsdAmplitudes &amps);

enum class MoleculeModel { H2, HeHPlus, LiH };

std::string to_string(MoleculeModel m);
MoleculeModel molecule_model_from_string(const std::string &s);

struct CoefficientRow {
  double bond_length = 0.0; // Angstrom
  std::vector<double> weights;
  std::optional<double> reference_energy; // Hartree
};

/// Tabulated Pauli weights for one molecule over a bond-length grid.
struct MolecularCoefficients {
  MoleculeModel model = MoleculeModel::H2;
  std::vector<std::string> terms; // Pauli strings, one per weight
  std::vector<CoefficientRow> rows;
  std::string oracle; // provenance from the file header

  OperatorSum hamiltonian(std::size_t row) const;
};

/// File format: header comments `# model: H2|HeH+|LiH`, `# oracle: ...` and,
/// for LiH, `# terms: <strings>`; data rows
/// `bond_length w0 ... w{A-1} [reference_energy]`.
MolecularCoefficients parse_coefficients(std::istream &in);
MolecularCoefficients load_coefficients(const std::string &path);

} // namespace pvqe
