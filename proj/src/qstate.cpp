#include "pvqe/qstate.hpp"

#include "pvqe/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace pvqe {

namespace {

constexpr Complex kI{0.0, 1.0};

// Single-letter product table: a*b = phase * letter.
struct LetterProduct {
  Complex phase;
  Pauli letter;
};

LetterProduct letter_product(Pauli a, Pauli b) {
  using P = Pauli;
  if (a == P::I) return {1.0, b};
  if (b == P::I) return {1.0, a};
  if (a == b) return {1.0, P::I};
  // XY = iZ, YZ = iX, ZX = iY and the reversed orders pick up -i.
  auto idx = [](P p) { return static_cast<int>(p); };
  const int ia = idx(a), ib = idx(b);
  const P third = static_cast<P>(6 - ia - ib);
  const bool cyclic = (ib - ia + 3) % 3 == 1;
  return {cyclic ? kI : -kI, third};
}

std::size_t log2_exact(std::size_t dim) {
  if (dim == 0 || (dim & (dim - 1)) != 0)
    throw DimensionError("dimension " + std::to_string(dim) + " is not a power of two");
  return static_cast<std::size_t>(std::countr_zero(dim));
}

void check_dense(std::size_t k) {
  if (k > kMaxDenseQubits)
    throw DimensionError("dense limit exceeded: " + std::to_string(k) + " qubits > " +
                         std::to_string(kMaxDenseQubits));
}

// Phase picked up by P|x>: i^{#Y} (-1)^{popcount(x & z_mask)}.
Complex base_phase(const PauliString &p) {
  std::size_t ny = 0;
  for (Pauli l : p.letters())
    if (l == Pauli::Y) ++ny;
  static const Complex powers[4] = {1.0, kI, -1.0, -kI};
  return powers[ny % 4];
}

} // namespace

char to_char(Pauli p) { return "IXYZ"[static_cast<int>(p)]; }

Pauli pauli_from_char(char c) {
  switch (c) {
  case 'I': return Pauli::I;
  case 'X': return Pauli::X;
  case 'Y': return Pauli::Y;
  case 'Z': return Pauli::Z;
  default: throw ValidationError(std::string("invalid Pauli letter '") + c + "'");
  }
}

// ---------------------------------------------------------------- PauliString

PauliString::PauliString(std::vector<Pauli> letters) : letters_(std::move(letters)) {
  if (letters_.empty()) throw ValidationError("Pauli string must have length >= 1");
  if (letters_.size() > 64) throw DimensionError("Pauli string longer than 64 qubits");
}

PauliString::PauliString(std::string_view letters) {
  if (letters.empty()) throw ValidationError("Pauli string must have length >= 1");
  if (letters.size() > 64) throw DimensionError("Pauli string longer than 64 qubits");
  letters_.reserve(letters.size());
  for (char c : letters) letters_.push_back(pauli_from_char(c));
}

PauliString PauliString::identity(std::size_t num_qubits) {
  return PauliString(std::vector<Pauli>(num_qubits, Pauli::I));
}

std::string PauliString::str() const {
  std::string s;
  s.reserve(letters_.size());
  for (Pauli p : letters_) s.push_back(to_char(p));
  return s;
}

bool PauliString::is_identity() const noexcept {
  return std::all_of(letters_.begin(), letters_.end(), [](Pauli p) { return p == Pauli::I; });
}

bool PauliString::is_diagonal() const noexcept {
  return std::all_of(letters_.begin(), letters_.end(),
                     [](Pauli p) { return p == Pauli::I || p == Pauli::Z; });
}

std::size_t PauliString::weight() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(letters_.begin(), letters_.end(), [](Pauli p) { return p != Pauli::I; }));
}

std::uint64_t PauliString::x_mask() const noexcept {
  std::uint64_t m = 0;
  const std::size_t k = letters_.size();
  for (std::size_t q = 0; q < k; ++q)
    if (letters_[q] == Pauli::X || letters_[q] == Pauli::Y) m |= std::uint64_t{1} << (k - 1 - q);
  return m;
}

std::uint64_t PauliString::z_mask() const noexcept {
  std::uint64_t m = 0;
  const std::size_t k = letters_.size();
  for (std::size_t q = 0; q < k; ++q)
    if (letters_[q] == Pauli::Z || letters_[q] == Pauli::Y) m |= std::uint64_t{1} << (k - 1 - q);
  return m;
}

PauliString PauliString::with(std::size_t q, Pauli p) const {
  PauliString out = *this;
  out.letters_.at(q) = p;
  return out;
}

PauliProduct multiply(const PauliString &a, const PauliString &b) {
  if (a.size() != b.size()) throw DimensionError("Pauli strings of different length");
  Complex phase = 1.0;
  std::vector<Pauli> out(a.size());
  for (std::size_t q = 0; q < a.size(); ++q) {
    const auto lp = letter_product(a[q], b[q]);
    phase *= lp.phase;
    out[q] = lp.letter;
  }
  return {phase, PauliString(std::move(out))};
}

bool commutes(const PauliString &a, const PauliString &b) {
  if (a.size() != b.size()) throw DimensionError("Pauli strings of different length");
  std::size_t anti = 0;
  for (std::size_t q = 0; q < a.size(); ++q)
    if (a[q] != Pauli::I && b[q] != Pauli::I && a[q] != b[q]) ++anti;
  return anti % 2 == 0;
}

bool qubitwise_commutes(const PauliString &a, const PauliString &b) {
  if (a.size() != b.size()) throw DimensionError("Pauli strings of different length");
  for (std::size_t q = 0; q < a.size(); ++q)
    if (a[q] != Pauli::I && b[q] != Pauli::I && a[q] != b[q]) return false;
  return true;
}

// ---------------------------------------------------------------- OperatorSum

OperatorSum::OperatorSum(std::size_t num_qubits, std::span<const PauliTerm> terms)
    : num_qubits_(num_qubits) {
  for (const auto &t : terms) add(t.coefficient, t.string);
}

OperatorSum OperatorSum::from_real(std::span<const std::string> strings,
                                   std::span<const double> weights) {
  if (strings.size() != weights.size())
    throw ValidationError("string/weight count mismatch");
  if (strings.empty()) throw ValidationError("no terms");
  OperatorSum op(strings.front().size());
  for (std::size_t i = 0; i < strings.size(); ++i)
    if (weights[i] != 0.0) op.add(weights[i], PauliString(strings[i]));
  return op;
}

void OperatorSum::check_length(const PauliString &p) {
  if (num_qubits_ == 0) num_qubits_ = p.size();
  if (p.size() != num_qubits_)
    throw DimensionError("term " + p.str() + " does not match register of " +
                         std::to_string(num_qubits_) + " qubits");
}

void OperatorSum::add(Complex c, const PauliString &p) {
  check_length(p);
  if (auto it = index_.find(p); it != index_.end()) {
    terms_[it->second].coefficient += c;
    return;
  }
  index_.emplace(p, terms_.size());
  terms_.push_back({c, p});
}

Complex OperatorSum::coefficient(const PauliString &p) const {
  auto it = index_.find(p);
  return it == index_.end() ? Complex{} : terms_[it->second].coefficient;
}

Complex OperatorSum::identity_coefficient() const {
  if (num_qubits_ == 0) return {};
  return coefficient(PauliString::identity(num_qubits_));
}

OperatorSum OperatorSum::adjoint() const {
  OperatorSum out(num_qubits_);
  for (const auto &t : terms_) out.add(std::conj(t.coefficient), t.string);
  return out;
}

OperatorSum OperatorSum::pruned(double tol) const {
  OperatorSum out(num_qubits_);
  for (const auto &t : terms_)
    if (std::abs(t.coefficient) > tol) out.add(t.coefficient, t.string);
  return out;
}

bool OperatorSum::is_hermitian(double tol) const {
  return std::all_of(terms_.begin(), terms_.end(),
                     [tol](const PauliTerm &t) { return std::abs(t.coefficient.imag()) <= tol; });
}

CMatrix OperatorSum::to_matrix() const {
  check_dense(num_qubits_);
  const std::size_t d = std::size_t{1} << num_qubits_;
  CMatrix m = CMatrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (const auto &t : terms_) {
    const auto xm = t.string.x_mask();
    const auto zm = t.string.z_mask();
    const Complex ph = base_phase(t.string) * t.coefficient;
    for (std::size_t x = 0; x < d; ++x) {
      const double sign = (std::popcount(x & zm) % 2) ? -1.0 : 1.0;
      m(static_cast<Eigen::Index>(x ^ xm), static_cast<Eigen::Index>(x)) += sign * ph;
    }
  }
  return m;
}

OperatorSum &OperatorSum::operator+=(const OperatorSum &rhs) {
  if (num_qubits_ == 0) num_qubits_ = rhs.num_qubits_;
  if (rhs.num_qubits_ != 0 && rhs.num_qubits_ != num_qubits_)
    throw DimensionError("operator sums on different registers");
  for (const auto &t : rhs.terms_) add(t.coefficient, t.string);
  return *this;
}

OperatorSum &OperatorSum::operator-=(const OperatorSum &rhs) {
  return *this += rhs * Complex{-1.0};
}

OperatorSum &OperatorSum::operator*=(Complex s) {
  for (auto &t : terms_) t.coefficient *= s;
  return *this;
}

OperatorSum operator*(const OperatorSum &a, const OperatorSum &b) {
  if (a.num_qubits_ != b.num_qubits_)
    throw DimensionError("operator sums on different registers");
  OperatorSum out(a.num_qubits_);
  for (const auto &ta : a.terms_)
    for (const auto &tb : b.terms_) {
      auto prod = multiply(ta.string, tb.string);
      out.add(prod.phase * ta.coefficient * tb.coefficient, prod.string);
    }
  return out.pruned(0.0);
}

// ---------------------------------------------------------------- text format

OperatorSum parse_operator_sum(std::istream &in) {
  OperatorSum op;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    double re = 0, im = 0;
    std::string letters;
    if (!(ls >> re)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      throw ParseError(lineno, "expected '<re> <im> <letters>'");
    }
    if (!(ls >> im >> letters)) throw ParseError(lineno, "expected '<re> <im> <letters>'");
    std::string extra;
    if (ls >> extra) throw ParseError(lineno, "trailing token '" + extra + "'");
    try {
      op.add({re, im}, PauliString(letters));
    } catch (const Error &e) {
      throw ParseError(lineno, e.what());
    }
  }
  if (op.empty()) throw ParseError(0, "no terms");
  return op;
}

OperatorSum parse_operator_sum(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_operator_sum(in);
}

std::string format_operator_sum(const OperatorSum &op) {
  std::ostringstream os;
  os << std::setprecision(17);
  for (const auto &t : op.terms())
    os << t.coefficient.real() << ' ' << t.coefficient.imag() << ' ' << t.string.str() << '\n';
  return os.str();
}

OperatorSum read_operator_sum(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return parse_operator_sum(in);
}

void write_operator_sum(const OperatorSum &op, const std::string &path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << format_operator_sum(op);
}

// ---------------------------------------------------------------- states

StateVector::StateVector(CVector amplitudes, double tol) : amps_(std::move(amplitudes)) {
  if (amps_.size() == 0) throw ValidationError("empty state vector");
  const double n2 = amps_.squaredNorm();
  if (!(std::abs(n2 - 1.0) <= tol))
    throw ValidationError("state vector not normalized: |psi|^2 = " + std::to_string(n2));
}

StateVector StateVector::normalized(CVector amplitudes) {
  const double n = amplitudes.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw NumericalError("cannot normalize zero vector");
  amplitudes /= n;
  return StateVector(std::move(amplitudes));
}

StateVector StateVector::basis(std::size_t dim, std::size_t index) {
  if (index >= dim) throw ValidationError("basis index out of range");
  CVector v = CVector::Zero(static_cast<Eigen::Index>(dim));
  v(static_cast<Eigen::Index>(index)) = 1.0;
  return StateVector(std::move(v));
}

std::size_t StateVector::num_qubits() const { return log2_exact(dim()); }

RVector StateVector::probabilities() const { return amps_.cwiseAbs2(); }

DensityMatrix::DensityMatrix(CMatrix entries, double tol) : rho_(std::move(entries)) {
  if (rho_.rows() == 0 || rho_.rows() != rho_.cols())
    throw ValidationError("density matrix must be square and non-empty");
  if ((rho_ - rho_.adjoint()).cwiseAbs().maxCoeff() > tol)
    throw ValidationError("density matrix not hermitian");
  if (std::abs(rho_.trace() - Complex{1.0}) > tol)
    throw ValidationError("density matrix trace != 1");
  Eigen::SelfAdjointEigenSolver<CMatrix> es(rho_, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-9)
    throw ValidationError("density matrix has negative eigenvalue " +
                          std::to_string(es.eigenvalues().minCoeff()));
}

DensityMatrix DensityMatrix::from_state(const StateVector &psi) {
  const CVector &a = psi.amplitudes();
  return DensityMatrix(a * a.adjoint());
}

DensityMatrix DensityMatrix::maximally_mixed(std::size_t dim) {
  const auto n = static_cast<Eigen::Index>(dim);
  return DensityMatrix(CMatrix::Identity(n, n) / static_cast<double>(dim));
}

std::size_t DensityMatrix::num_qubits() const { return log2_exact(dim()); }

RVector DensityMatrix::probabilities() const { return rho_.diagonal().real(); }

double DensityMatrix::purity() const { return (rho_ * rho_).trace().real(); }

std::size_t state_dim(const QuantumState &s) {
  return std::visit([](const auto &v) { return v.dim(); }, s);
}

RVector probabilities_after(const QuantumState &s, const CMatrix &basis_change) {
  if (static_cast<std::size_t>(basis_change.cols()) != state_dim(s))
    throw DimensionError("basis change does not match state dimension");
  if (const auto *psi = std::get_if<StateVector>(&s)) {
    return (basis_change * psi->amplitudes()).cwiseAbs2();
  }
  const auto &rho = std::get<DensityMatrix>(s).entries();
  RVector p = (basis_change * rho * basis_change.adjoint()).diagonal().real();
  return p.cwiseMax(0.0);
}

// ---------------------------------------------------------------- expectations

CMatrix pauli_to_matrix(const PauliString &p) {
  check_dense(p.size());
  OperatorSum op(p.size());
  op.add(1.0, p);
  return op.to_matrix();
}

Complex pauli_expectation(const StateVector &psi, const PauliString &p) {
  const std::size_t d = psi.dim();
  if (d != (std::size_t{1} << p.size()))
    throw DimensionError("state dimension " + std::to_string(d) + " does not match " +
                         std::to_string(p.size()) + "-qubit operator");
  const auto xm = p.x_mask();
  const auto zm = p.z_mask();
  const CVector &a = psi.amplitudes();
  Complex acc = 0.0;
  for (std::size_t x = 0; x < d; ++x) {
    const double sign = (std::popcount(x & zm) % 2) ? -1.0 : 1.0;
    acc += sign * std::conj(a(static_cast<Eigen::Index>(x ^ xm))) * a(static_cast<Eigen::Index>(x));
  }
  return acc * base_phase(p);
}

Complex pauli_expectation(const DensityMatrix &rho, const PauliString &p) {
  const std::size_t d = rho.dim();
  if (d != (std::size_t{1} << p.size()))
    throw DimensionError("state dimension " + std::to_string(d) + " does not match " +
                         std::to_string(p.size()) + "-qubit operator");
  const auto xm = p.x_mask();
  const auto zm = p.z_mask();
  const CMatrix &r = rho.entries();
  Complex acc = 0.0;
  // Tr(rho P) = sum_x <x|rho P|x> = sum_x phase(x) rho[x, x^xm]
  for (std::size_t x = 0; x < d; ++x) {
    const double sign = (std::popcount(x & zm) % 2) ? -1.0 : 1.0;
    acc += sign * r(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(x ^ xm));
  }
  return acc * base_phase(p);
}

Complex expectation_exact(const StateVector &psi, const OperatorSum &op) {
  if (psi.dim() != (std::size_t{1} << op.num_qubits()))
    throw DimensionError("state dimension does not match operator");
  Complex acc = 0.0;
  for (const auto &t : op.terms()) acc += t.coefficient * pauli_expectation(psi, t.string);
  return acc;
}

Complex expectation_exact(const DensityMatrix &rho, const OperatorSum &op) {
  if (rho.dim() != (std::size_t{1} << op.num_qubits()))
    throw DimensionError("state dimension does not match operator");
  Complex acc = 0.0;
  for (const auto &t : op.terms()) acc += t.coefficient * pauli_expectation(rho, t.string);
  return acc;
}

Complex expectation_exact(const QuantumState &s, const OperatorSum &op) {
  return std::visit([&](const auto &v) { return expectation_exact(v, op); }, s);
}

Eigensystem exact_eigensystem(const OperatorSum &op) {
  if (!op.is_hermitian()) throw ValidationError("exact_eigensolve requires a hermitian operator");
  check_dense(op.num_qubits());
  const CMatrix m = op.to_matrix();
  Eigen::SelfAdjointEigenSolver<CMatrix> es(m);
  if (es.info() != Eigen::Success) throw NumericalError("eigensolver failed");
  Eigensystem out;
  out.values.assign(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  out.vectors = es.eigenvectors();
  return out;
}

std::vector<double> exact_eigensolve(const OperatorSum &op) { return exact_eigensystem(op).values; }

double ground_energy(const OperatorSum &op) { return exact_eigensolve(op).front(); }

double unitarity_residual(const CMatrix &u) {
  if (u.rows() != u.cols()) return std::numeric_limits<double>::infinity();
  return (u.adjoint() * u - CMatrix::Identity(u.rows(), u.cols())).norm();
}

StateVector apply_unitary(const StateVector &psi, const CMatrix &u, double tol) {
  if (u.rows() != u.cols() || static_cast<std::size_t>(u.cols()) != psi.dim())
    throw DimensionError("unitary does not match state dimension");
  const double res = unitarity_residual(u);
  if (!(res <= tol))
    throw ValidationError("matrix is not unitary: ||U^dagger U - I|| = " + std::to_string(res));
  return StateVector::normalized(u * psi.amplitudes());
}

CMatrix kron(const CMatrix &a, const CMatrix &b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

CMatrix embed(const CMatrix &local, std::span<const std::size_t> qubits, std::size_t num_qubits) {
  check_dense(num_qubits);
  const std::size_t t = qubits.size();
  if (local.rows() != local.cols() || static_cast<std::size_t>(local.rows()) != (std::size_t{1} << t))
    throw DimensionError("local operator does not match its qubit list");
  std::uint64_t target_mask = 0;
  for (std::size_t q : qubits) {
    if (q >= num_qubits) throw DimensionError("qubit index out of range");
    const std::uint64_t bit = std::uint64_t{1} << (num_qubits - 1 - q);
    if (target_mask & bit) throw ValidationError("repeated qubit in embed");
    target_mask |= bit;
  }
  auto sub_index = [&](std::size_t x) {
    std::size_t s = 0;
    for (std::size_t q : qubits) s = (s << 1) | ((x >> (num_qubits - 1 - q)) & 1U);
    return s;
  };
  const std::size_t d = std::size_t{1} << num_qubits;
  CMatrix out = CMatrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (std::size_t x = 0; x < d; ++x)
    for (std::size_t y = 0; y < d; ++y) {
      if ((x & ~target_mask) != (y & ~target_mask)) continue;
      out(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y)) =
          local(static_cast<Eigen::Index>(sub_index(x)), static_cast<Eigen::Index>(sub_index(y)));
    }
  return out;
}

double fidelity(const StateVector &a, const StateVector &b) {
  if (a.dim() != b.dim()) throw DimensionError("fidelity of states with different dimension");
  return std::norm(a.amplitudes().dot(b.amplitudes()));
}

} // namespace pvqe
