#include "pvqe/hamiltonians.hpp"

#include "pvqe/error.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <fstream>
#include <sstream>

namespace pvqe {

// ------------------------------------------------------------ FermionOperator

void FermionOperator::add(Complex c, std::vector<LadderOp> factors) {
  for (const auto &f : factors)
    if (f.mode >= mode_count_)
      throw ValidationError("mode index " + std::to_string(f.mode) + " out of range for " +
                            std::to_string(mode_count_) + " modes");
  terms_.push_back({c, std::move(factors)});
}

FermionOperator FermionOperator::adjoint() const {
  FermionOperator out(mode_count_);
  for (const auto &t : terms_) {
    std::vector<LadderOp> rev(t.factors.rbegin(), t.factors.rend());
    for (auto &f : rev) f.dagger = !f.dagger;
    out.terms_.push_back({std::conj(t.coefficient), std::move(rev)});
  }
  return out;
}

FermionOperator &FermionOperator::operator+=(const FermionOperator &rhs) {
  if (rhs.mode_count_ != mode_count_) throw DimensionError("fermion operators on different mode counts");
  terms_.insert(terms_.end(), rhs.terms_.begin(), rhs.terms_.end());
  return *this;
}

FermionOperator &FermionOperator::operator*=(Complex s) {
  for (auto &t : terms_) t.coefficient *= s;
  return *this;
}

namespace {

OperatorSum ladder_to_pauli(const LadderOp &op, std::size_t n) {
  std::vector<Pauli> base(n, Pauli::I);
  for (std::size_t q = 0; q < op.mode; ++q) base[q] = Pauli::Z;
  auto x = base, y = base;
  x[op.mode] = Pauli::X;
  y[op.mode] = Pauli::Y;
  OperatorSum out(n);
  out.add(0.5, PauliString(std::move(x)));
  out.add(Complex{0.0, op.dagger ? -0.5 : 0.5}, PauliString(std::move(y)));
  return out;
}

} // namespace

OperatorSum jordan_wigner(const FermionOperator &f) {
  const std::size_t n = f.mode_count();
  if (n == 0) throw ValidationError("fermion operator has no modes");
  if (n > kMaxDenseQubits) throw DimensionError("dense limit exceeded: more than 8 modes");
  OperatorSum total(n);
  for (const auto &term : f.terms()) {
    OperatorSum prod(n);
    prod.add(term.coefficient, PauliString::identity(n));
    for (const auto &op : term.factors) {
      if (op.mode >= n) throw ValidationError("mode index out of range");
      prod = prod * ladder_to_pauli(op, n);
    }
    total += prod;
  }
  return total.pruned(1e-15);
}

// ------------------------------------------------------------ model builders

namespace {

template <std::size_t N>
OperatorSum build_template(const std::array<std::string, N> &strings, std::span<const double> w,
                           const char *name) {
  if (w.size() != N)
    throw ValidationError(std::string(name) + " expects " + std::to_string(N) + " weights, got " +
                          std::to_string(w.size()));
  return OperatorSum::from_real(std::span<const std::string>(strings.data(), N), w);
}

OperatorSum single(double c, const char *s) {
  OperatorSum o(std::string_view(s).size());
  o.add(c, PauliString(s));
  return o;
}

} // namespace

OperatorSum build_h2(std::span<const double> weights) {
  return build_template(kH2Terms, weights, "build_h2");
}

OperatorSum build_hehplus(std::span<const double> weights) {
  return build_template(kHeHPlusTerms, weights, "build_hehplus");
}

OperatorSum build_heisenberg(double w1, double w2, double w3) {
  const std::array<std::string, 3> s = {"XX", "YY", "ZZ"};
  const std::array<double, 3> w = {w1, w2, w3};
  OperatorSum op(2);
  for (std::size_t i = 0; i < 3; ++i)
    if (w[i] != 0.0) op.add(w[i], PauliString(s[i]));
  return op;
}

OperatorSum build_schwinger(double mass) {
  OperatorSum op(2);
  op.add(1.0, PauliString("II"));
  op.add(1.0, PauliString("XX"));
  op.add(1.0, PauliString("YY"));
  op.add(-0.5 - mass / 2.0, PauliString("ZI"));
  op.add(0.5, PauliString("ZZ"));
  op.add(mass / 2.0, PauliString("IZ"));
  return op.pruned(0.0);
}

std::array<double, 4> schwinger_exact_levels(double mass) {
  const double r = std::sqrt(mass * mass + mass + 17.0 / 4.0);
  std::array<double, 4> e = {0.5 - r, 1.0, 2.0, 0.5 + r};
  std::sort(e.begin(), e.end());
  return e;
}

OperatorSum build_factoring(long n, FactoringForm form) {
  if (n != 35)
    throw ValidationError("build_factoring supports n = 35 only (got " + std::to_string(n) + ")");
  // One factor per qubit: |0> encodes 5 and |1> encodes 7.
  OperatorSum factor(1);
  if (form == FactoringForm::Pauli) {
    factor += single(6.0, "I");
    factor -= single(1.0, "Z");
  } else {
    OperatorSum proj = single(0.5, "I") - single(0.5, "Z");
    factor += single(4.0, "I");
    factor += proj * Complex{2.0};
    factor += single(1.0, "I");
  }
  OperatorSum product(2);
  for (const auto &a : factor.terms())
    for (const auto &b : factor.terms()) {
      std::vector<Pauli> letters = {a.string[0], b.string[0]};
      product.add(a.coefficient * b.coefficient, PauliString(std::move(letters)));
    }
  OperatorSum inner = single(static_cast<double>(n), "II") - product;
  return (inner * inner).pruned(1e-12);
}

// ------------------------------------------------------------ UCCSD

void UccsdAmplitudes::validate() const {
  if (orbital_count == 0) throw ValidationError("UCCSD needs at least one orbital");
  if (orbital_count > kMaxUccsdOrbitals)
    throw DimensionError("UCCSD limited to " + std::to_string(kMaxUccsdOrbitals) + " orbitals");
  for (const auto &[idx, t] : singles) {
    if (idx[0] >= orbital_count || idx[1] >= orbital_count)
      throw ValidationError("single excitation index out of range");
    if (idx[0] == idx[1]) throw ValidationError("single excitation requires i != a");
  }
  for (const auto &[idx, t] : doubles) {
    for (auto i : idx)
      if (i >= orbital_count) throw ValidationError("double excitation index out of range");
    if (idx[0] == idx[1] || idx[2] == idx[3])
      throw ValidationError("double excitation repeats an orbital within a pair");
    if (idx[0] == idx[2] && idx[1] == idx[3])
      throw ValidationError("double excitation requires (i,j) != (a,b)");
  }
}

OperatorSum uccsd_generator(const UccsdAmplitudes &amps) {
  amps.validate();
  FermionOperator t(amps.orbital_count);
  for (const auto &[idx, v] : amps.singles) t.add(v, {create(idx[0]), annihilate(idx[1])});
  for (const auto &[idx, v] : amps.doubles)
    t.add(v, {create(idx[0]), create(idx[1]), annihilate(idx[2]), annihilate(idx[3])});
  FermionOperator g = t;
  FermionOperator td = t.adjoint();
  td *= -1.0;
  g += td;
  return jordan_wigner(g);
}

StateVector uccsd_state(std::size_t reference, const UccsdAmplitudes &amps) {
  const std::size_t k = amps.orbital_count;
  const OperatorSum gen = uccsd_generator(amps);
  const std::size_t dim = std::size_t{1} << k;
  if (reference >= dim) throw ValidationError("reference basis index out of range");
  for (const auto &term : gen.terms())
    if (std::abs(term.coefficient.real()) > 1e-12)
      throw NumericalError("UCCSD generator is not anti-hermitian (internal consistency failure)");
  if (gen.empty()) return StateVector::basis(dim, reference);
  // exp(G) with G anti-hermitian: G = -i H, H hermitian.
  const CMatrix h = (gen * Complex{0.0, 1.0}).to_matrix();
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  const CVector phases =
      (es.eigenvalues().cast<Complex>() * Complex{0.0, -1.0}).array().exp().matrix();
  const CMatrix &v = es.eigenvectors();
  const CVector ref_in_eig = v.adjoint().col(static_cast<Eigen::Index>(reference));
  return StateVector::normalized(v * phases.cwiseProduct(ref_in_eig));
}

// ------------------------------------------------------------ coefficient files

std::string to_string(MoleculeModel m) {
  switch (m) {
  case MoleculeModel::H2: return "H2";
  case MoleculeModel::HeHPlus: return "HeH+";
  case MoleculeModel::LiH: return "LiH";
  }
  return "?";
}

MoleculeModel molecule_model_from_string(const std::string &s) {
  if (s == "H2" || s == "h2") return MoleculeModel::H2;
  if (s == "HeH+" || s == "hehplus" || s == "heh+") return MoleculeModel::HeHPlus;
  if (s == "LiH" || s == "lih") return MoleculeModel::LiH;
  throw ValidationError("unknown molecule model '" + s + "'");
}

OperatorSum MolecularCoefficients::hamiltonian(std::size_t row) const {
  if (row >= rows.size()) throw ValidationError("coefficient row out of range");
  return OperatorSum::from_real(terms, rows[row].weights);
}

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string &tok, std::size_t line) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(tok, &used);
  } catch (const std::exception &) {
    throw ParseError(line, "malformed number '" + tok + "'");
  }
  if (used != tok.size() || !std::isfinite(v)) throw ParseError(line, "malformed number '" + tok + "'");
  return v;
}

} // namespace

MolecularCoefficients parse_coefficients(std::istream &in) {
  MolecularCoefficients table;
  std::optional<MoleculeModel> model;
  std::vector<std::string> header_terms;
  std::string line;
  std::size_t lineno = 0;

  auto fix_terms = [&](std::size_t at) {
    if (!model) throw ParseError(at, "missing '# model:' header before data");
    if (!table.terms.empty()) return;
    switch (*model) {
    case MoleculeModel::H2: table.terms.assign(kH2Terms.begin(), kH2Terms.end()); break;
    case MoleculeModel::HeHPlus: table.terms.assign(kHeHPlusTerms.begin(), kHeHPlusTerms.end()); break;
    case MoleculeModel::LiH:
      if (header_terms.empty()) throw ParseError(at, "LiH tables need a '# terms:' header");
      break;
    }
    if (!header_terms.empty()) {
      if (*model != MoleculeModel::LiH && header_terms != table.terms)
        throw ParseError(at, "'# terms:' header disagrees with the model template");
      table.terms = header_terms;
    }
    for (const auto &s : table.terms)
      if (s.size() != table.terms.front().size()) throw ParseError(at, "terms of unequal length");
  };

  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty()) continue;
    if (t[0] == '#') {
      std::string body = trim(t.substr(1));
      auto colon = body.find(':');
      if (colon == std::string::npos) continue;
      const std::string key = trim(body.substr(0, colon));
      const std::string value = trim(body.substr(colon + 1));
      if (key == "model") {
        try {
          model = molecule_model_from_string(value);
        } catch (const ValidationError &e) {
          throw ParseError(lineno, e.what());
        }
        table.model = *model;
      } else if (key == "oracle") {
        table.oracle = value;
      } else if (key == "terms") {
        std::istringstream ts(value);
        std::string s;
        while (ts >> s) {
          try {
            PauliString check(s);
          } catch (const Error &e) {
            throw ParseError(lineno, e.what());
          }
          header_terms.push_back(s);
        }
      }
      continue;
    }
    if (auto hash = t.find('#'); hash != std::string::npos) t = trim(t.substr(0, hash));
    fix_terms(lineno);
    std::istringstream ls(t);
    std::vector<double> values;
    std::string tok;
    while (ls >> tok) values.push_back(parse_double(tok, lineno));
    const std::size_t a = table.terms.size();
    if (values.size() != a + 1 && values.size() != a + 2)
      throw ParseError(lineno, "expected bond length plus " + std::to_string(a) +
                                   " weights (and an optional reference energy), got " +
                                   std::to_string(values.size()) + " values");
    CoefficientRow row;
    row.bond_length = values[0];
    row.weights.assign(values.begin() + 1, values.begin() + 1 + static_cast<std::ptrdiff_t>(a));
    if (values.size() == a + 2) row.reference_energy = values.back();
    if (!table.rows.empty() && !(row.bond_length > table.rows.back().bond_length))
      throw ParseError(lineno, "bond lengths must be strictly increasing");
    table.rows.push_back(std::move(row));
  }
  if (table.rows.empty()) throw ParseError(0, "no rows");
  return table;
}

MolecularCoefficients load_coefficients(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open coefficient file " + path);
  return parse_coefficients(in);
}

} // namespace pvqe
