#pragma once

// Dense complex linear-algebra core: Pauli strings, operator sums, pure and
// mixed states, exact expectations and exact diagonalization.
//
// Ordering convention used everywhere in the library: qubit 0 is the leftmost
// tensor factor, and a computational basis index is big-endian, i.e.
// |q0 q1 ... q_{k-1}> has index sum_i q_i 2^{k-1-i}.

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace pvqe {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

/// Largest register that is ever turned into a dense matrix.
inline constexpr std::size_t kMaxDenseQubits = 8;
/// Default absolute tolerance for state normalization / hermiticity checks.
inline constexpr double kStateTolerance = 1e-10;
/// Default tolerance on ||U^dagger U - I|| for unitarity checks.
inline constexpr double kUnitaryTolerance = 1e-8;

enum class Pauli : std::uint8_t { I = 0, X = 1, Y = 2, Z = 3 };

char to_char(Pauli p);
Pauli pauli_from_char(char c);

/// Tensor product of single-qubit Pauli letters.
class PauliString {
public:
  PauliString() = default;
  explicit PauliString(std::vector<Pauli> letters);
  /// Parses letters such as "XZIY". Throws ValidationError on bad input.
  explicit PauliString(std::string_view letters);
  static PauliString identity(std::size_t num_qubits);

  std::size_t size() const noexcept { return letters_.size(); }
  Pauli operator[](std::size_t q) const { return letters_[q]; }
  const std::vector<Pauli> &letters() const noexcept { return letters_; }
  std::string str() const;

  bool is_identity() const noexcept;
  /// True when every letter is I or Z.
  bool is_diagonal() const noexcept;
  std::size_t weight() const noexcept;

  /// Bit masks in the big-endian index convention: `x_mask` marks X/Y
  /// positions, `z_mask` marks Z/Y positions.
  std::uint64_t x_mask() const noexcept;
  std::uint64_t z_mask() const noexcept;

  PauliString with(std::size_t q, Pauli p) const;

  friend bool operator==(const PauliString &, const PauliString &) = default;
  friend auto operator<=>(const PauliString &a, const PauliString &b) {
    return a.letters_ <=> b.letters_;
  }

private:
  std::vector<Pauli> letters_;
};

/// Result of multiplying two Pauli strings: a * b = phase * string.
struct PauliProduct {
  Complex phase;
  PauliString string;
};

PauliProduct multiply(const PauliString &a, const PauliString &b);
/// Matrix commutation: true when the strings anticommute on an even number
/// of positions.
bool commutes(const PauliString &a, const PauliString &b);
/// Qubit-wise commutation: on every qubit the letters are equal or one is I.
bool qubitwise_commutes(const PauliString &a, const PauliString &b);

struct PauliTerm {
  Complex coefficient;
  PauliString string;
};

/// Weighted sum of equal-length Pauli strings, kept in canonical form
/// (no repeated string; terms stay in first-insertion order).
class OperatorSum {
public:
  OperatorSum() = default;
  explicit OperatorSum(std::size_t num_qubits) : num_qubits_(num_qubits) {}
  OperatorSum(std::size_t num_qubits, std::span<const PauliTerm> terms);

  /// Builds sum_i weights[i] * strings[i]. Exactly-zero weights are dropped.
  static OperatorSum from_real(std::span<const std::string> strings,
                               std::span<const double> weights);

  std::size_t num_qubits() const noexcept { return num_qubits_; }
  std::size_t size() const noexcept { return terms_.size(); }
  bool empty() const noexcept { return terms_.empty(); }
  const std::vector<PauliTerm> &terms() const noexcept { return terms_; }

  /// Adds c * p, merging with an existing term on the same string.
  void add(Complex c, const PauliString &p);
  Complex coefficient(const PauliString &p) const;
  /// Coefficient of the all-identity string.
  Complex identity_coefficient() const;

  OperatorSum adjoint() const;
  /// Copy without terms whose |coefficient| <= tol.
  OperatorSum pruned(double tol = 1e-14) const;
  /// All merged coefficients are real within tol.
  bool is_hermitian(double tol = kStateTolerance) const;

  CMatrix to_matrix() const;

  OperatorSum &operator+=(const OperatorSum &rhs);
  OperatorSum &operator-=(const OperatorSum &rhs);
  OperatorSum &operator*=(Complex s);
  friend OperatorSum operator+(OperatorSum a, const OperatorSum &b) { return a += b; }
  friend OperatorSum operator-(OperatorSum a, const OperatorSum &b) { return a -= b; }
  friend OperatorSum operator*(OperatorSum a, Complex s) { return a *= s; }
  friend OperatorSum operator*(Complex s, OperatorSum a) { return a *= s; }
  /// Operator product, expanded with the Pauli algebra and merged.
  friend OperatorSum operator*(const OperatorSum &a, const OperatorSum &b);

private:
  void check_length(const PauliString &p);

  std::size_t num_qubits_ = 0;
  std::vector<PauliTerm> terms_;
  std::map<PauliString, std::size_t> index_;
};

/// Line format `<re> <im> <letters>`, '#' starts a comment.
OperatorSum parse_operator_sum(std::istream &in);
OperatorSum parse_operator_sum(std::string_view text);
std::string format_operator_sum(const OperatorSum &op);
OperatorSum read_operator_sum(const std::string &path);
void write_operator_sum(const OperatorSum &op, const std::string &path);

/// Normalized pure state.
class StateVector {
public:
  /// Throws ValidationError unless sum |a_i|^2 = 1 within `tol`.
  explicit StateVector(CVector amplitudes, double tol = kStateTolerance);
  /// Rescales to unit norm; throws NumericalError on the zero vector.
  static StateVector normalized(CVector amplitudes);
  static StateVector basis(std::size_t dim, std::size_t index);

  const CVector &amplitudes() const noexcept { return amps_; }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(amps_.size()); }
  Complex operator[](std::size_t i) const { return amps_(static_cast<Eigen::Index>(i)); }
  /// log2(dim); throws DimensionError if dim is not a power of two.
  std::size_t num_qubits() const;
  /// Computational-basis probabilities |a_i|^2.
  RVector probabilities() const;

private:
  CVector amps_;
};

/// Hermitian, unit-trace, positive semidefinite matrix.
class DensityMatrix {
public:
  /// Validates hermiticity and trace within `tol`, eigenvalues >= -1e-9.
  explicit DensityMatrix(CMatrix entries, double tol = kStateTolerance);
  static DensityMatrix from_state(const StateVector &psi);
  static DensityMatrix maximally_mixed(std::size_t dim);

  const CMatrix &entries() const noexcept { return rho_; }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(rho_.rows()); }
  std::size_t num_qubits() const;
  RVector probabilities() const;
  double purity() const;

private:
  CMatrix rho_;
};

using QuantumState = std::variant<StateVector, DensityMatrix>;

std::size_t state_dim(const QuantumState &s);
/// Probabilities of measuring `s` in the basis whose rows are given by
/// `basis_change` (p_i = |<i| C |psi>|^2, or diag(C rho C^dagger)).
RVector probabilities_after(const QuantumState &s, const CMatrix &basis_change);

/// Dense matrix of a Pauli string. Throws DimensionError past kMaxDenseQubits.
CMatrix pauli_to_matrix(const PauliString &p);

/// <psi|P|psi> evaluated without forming the dense matrix.
Complex pauli_expectation(const StateVector &psi, const PauliString &p);
Complex pauli_expectation(const DensityMatrix &rho, const PauliString &p);

Complex expectation_exact(const StateVector &psi, const OperatorSum &op);
Complex expectation_exact(const DensityMatrix &rho, const OperatorSum &op);
Complex expectation_exact(const QuantumState &s, const OperatorSum &op);

struct Eigensystem {
  std::vector<double> values; // ascending
  CMatrix vectors;            // column j pairs with values[j]
};

/// Full spectrum of a hermitian operator sum, ascending.
std::vector<double> exact_eigensolve(const OperatorSum &op);
Eigensystem exact_eigensystem(const OperatorSum &op);
double ground_energy(const OperatorSum &op);

/// ||U^dagger U - I||_F.
double unitarity_residual(const CMatrix &u);
StateVector apply_unitary(const StateVector &psi, const CMatrix &u,
                          double tol = kUnitaryTolerance);

CMatrix kron(const CMatrix &a, const CMatrix &b);
/// Embeds an operator acting on `qubits` (in that order) into a k-qubit
/// register.
CMatrix embed(const CMatrix &local, std::span<const std::size_t> qubits,
              std::size_t num_qubits);

/// |<a|b>|^2.
double fidelity(const StateVector &a, const StateVector &b);

} // namespace pvqe
