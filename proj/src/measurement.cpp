#include "pvqe/measurement.hpp"

#include "pvqe/error.hpp"
#include "pvqe/rng.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <istream>
#include <numeric>
#include <random>
#include <sstream>

namespace pvqe {

namespace {

using Index = Eigen::Index;

Index ix(std::size_t i) { return static_cast<Index>(i); }

double parity_sign(std::uint64_t x) { return std::popcount(x) % 2 ? -1.0 : 1.0; }

} // namespace

// ------------------------------------------------------------ counts

std::uint64_t Counts::operator[](std::size_t index) const {
  auto it = counts.find(index);
  return it == counts.end() ? 0 : it->second;
}

RVector Counts::frequencies() const {
  RVector f = RVector::Zero(ix(dim));
  if (shots == 0) return f;
  for (const auto &[i, c] : counts) f(ix(i)) = static_cast<double>(c) / static_cast<double>(shots);
  return f;
}

void Counts::validate() const {
  std::uint64_t total = 0;
  for (const auto &[i, c] : counts) {
    if (i >= dim) throw ValidationError("outcome index " + std::to_string(i) + " out of range");
    total += c;
  }
  if (total != shots) throw ValidationError("counts do not sum to the shot total");
}

std::string format_counts_csv(const Counts &c) {
  std::ostringstream os;
  os << "index,count\n";
  for (const auto &[i, n] : c.counts)
    if (n) os << i << ',' << n << '\n';
  return os.str();
}

Counts parse_counts_csv(std::istream &in, std::size_t dim) {
  Counts c;
  c.dim = dim;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header) {
      if (line != "index,count") throw ParseError(lineno, "expected header 'index,count'");
      header = true;
      continue;
    }
    std::size_t idx = 0;
    unsigned long long n = 0;
    char comma = 0;
    std::istringstream ls(line);
    if (!(ls >> idx >> comma >> n) || comma != ',') throw ParseError(lineno, "expected 'index,count'");
    if (idx >= dim) throw ParseError(lineno, "outcome index out of range");
    c.counts[idx] += n;
    c.shots += n;
  }
  if (!header) throw ParseError(lineno, "missing header");
  return c;
}

Counts sample_distribution(const RVector &probabilities, std::uint64_t shots, std::uint64_t seed) {
  if (shots < 1) throw ValidationError("shots must be >= 1");
  const std::size_t d = static_cast<std::size_t>(probabilities.size());
  RVector p = probabilities.cwiseMax(0.0);
  double remaining_mass = p.sum();
  if (!(remaining_mass > 0.0)) throw NumericalError("cannot sample from a zero distribution");
  std::mt19937_64 rng(seed);
  Counts c;
  c.dim = d;
  c.shots = shots;
  std::uint64_t left = shots;
  // Conditional binomial draws: n_i ~ Bin(left, p_i / remaining mass).
  for (std::size_t i = 0; i < d && left > 0; ++i) {
    const double pi = p(ix(i));
    std::uint64_t n = 0;
    if (i + 1 == d || pi >= remaining_mass) {
      n = left;
    } else if (pi > 0.0) {
      std::binomial_distribution<std::uint64_t> bin(left, std::clamp(pi / remaining_mass, 0.0, 1.0));
      n = bin(rng);
    }
    if (n) c.counts[i] = n;
    left -= n;
    remaining_mass -= pi;
  }
  return c;
}

Counts sample_observable(const QuantumState &s, const CMatrix &basis_change, std::uint64_t shots,
                         std::uint64_t seed) {
  return sample_distribution(probabilities_after(s, basis_change), shots, seed);
}

// ------------------------------------------------------------ diagonalizer

namespace {

enum class GateKind { H, S, CNOT };

struct Gate {
  GateKind kind;
  std::size_t a;
  std::size_t b;
};

struct SignedString {
  int sign;
  std::vector<Pauli> letters;
};

CMatrix hadamard() {
  CMatrix h(2, 2);
  h << 1, 1, 1, -1;
  return h / std::sqrt(2.0);
}

CMatrix phase_gate() {
  CMatrix s = CMatrix::Identity(2, 2);
  s(1, 1) = Complex{0, 1};
  return s;
}

CMatrix cnot() {
  CMatrix c = CMatrix::Zero(4, 4);
  c(0, 0) = c(1, 1) = c(2, 3) = c(3, 2) = 1.0;
  return c;
}

struct Image {
  int sign;
  Pauli a;
  Pauli b;
};

Pauli letter(int i) { return static_cast<Pauli>(i); }

// Conjugation image of a Pauli under a small Clifford, read off densely.
std::pair<int, std::vector<Pauli>> conjugate_dense(const CMatrix &g, const std::vector<Pauli> &p) {
  const CMatrix m = g * pauli_to_matrix(PauliString(p)) * g.adjoint();
  const std::size_t k = p.size();
  const std::size_t total = std::size_t{1} << (2 * k);
  for (std::size_t code = 0; code < total; ++code) {
    std::vector<Pauli> q(k);
    for (std::size_t j = 0; j < k; ++j) q[j] = letter(static_cast<int>((code >> (2 * (k - 1 - j))) & 3));
    const CMatrix pq = pauli_to_matrix(PauliString(q));
    const Complex ov = (pq.adjoint() * m).trace() / static_cast<double>(m.rows());
    if (std::abs(ov - 1.0) < 1e-9) return {1, q};
    if (std::abs(ov + 1.0) < 1e-9) return {-1, q};
  }
  throw NumericalError("gate is not a Clifford");
}

const std::array<std::pair<int, Pauli>, 4> &single_table(GateKind k) {
  static const auto make = [](const CMatrix &g) {
    std::array<std::pair<int, Pauli>, 4> t{};
    for (int i = 0; i < 4; ++i) {
      auto [s, q] = conjugate_dense(g, {letter(i)});
      t[static_cast<std::size_t>(i)] = {s, q[0]};
    }
    return t;
  };
  static const auto h = make(hadamard());
  static const auto s = make(phase_gate());
  return k == GateKind::H ? h : s;
}

const std::array<Image, 16> &cnot_table() {
  static const auto t = [] {
    std::array<Image, 16> out{};
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) {
        auto [s, q] = conjugate_dense(cnot(), {letter(a), letter(b)});
        out[static_cast<std::size_t>(4 * a + b)] = {s, q[0], q[1]};
      }
    return out;
  }();
  return t;
}

void apply_gate(const Gate &g, SignedString &p) {
  if (g.kind == GateKind::CNOT) {
    const auto &t = cnot_table()[4 * static_cast<std::size_t>(p.letters[g.a]) +
                                 static_cast<std::size_t>(p.letters[g.b])];
    p.sign *= t.sign;
    p.letters[g.a] = t.a;
    p.letters[g.b] = t.b;
  } else {
    const auto &[s, q] = single_table(g.kind)[static_cast<std::size_t>(p.letters[g.a])];
    p.sign *= s;
    p.letters[g.a] = q;
  }
}

CMatrix gate_matrix(const Gate &g, std::size_t n) {
  if (g.kind == GateKind::CNOT) {
    const std::array<std::size_t, 2> q{g.a, g.b};
    return embed(cnot(), q, n);
  }
  const std::array<std::size_t, 1> q{g.a};
  return embed(g.kind == GateKind::H ? hadamard() : phase_gate(), q, n);
}

double group_residual(std::span<const PauliString> strings, const CMatrix &c,
                      std::span<const SignedZ> images) {
  double worst = 0;
  for (std::size_t i = 0; i < strings.size(); ++i) {
    const CMatrix lhs = c * pauli_to_matrix(strings[i]) * c.adjoint();
    const CMatrix rhs = static_cast<double>(images[i].sign) * pauli_to_matrix(images[i].z);
    worst = std::max(worst, (lhs - rhs).cwiseAbs().maxCoeff());
  }
  return worst;
}

} // namespace

Diagonalizer simultaneous_diagonalizer(std::span<const PauliString> strings) {
  if (strings.empty()) throw ValidationError("no strings to diagonalize");
  const std::size_t n = strings.front().size();
  for (const auto &s : strings)
    if (s.size() != n) throw DimensionError("strings of different length");
  for (std::size_t i = 0; i < strings.size(); ++i)
    for (std::size_t j = i + 1; j < strings.size(); ++j)
      if (!commutes(strings[i], strings[j]))
        throw ValidationError("strings " + strings[i].str() + " and " + strings[j].str() +
                              " do not commute");

  std::vector<SignedString> work;
  for (const auto &s : strings) work.push_back({1, s.letters()});
  std::vector<Gate> gates;
  std::vector<bool> pivot(n, false);
  auto push = [&](Gate g) {
    gates.push_back(g);
    for (auto &w : work) apply_gate(g, w);
  };

  for (std::size_t i = 0; i < work.size(); ++i) {
    std::vector<std::size_t> free;
    for (std::size_t q = 0; q < n; ++q)
      if (!pivot[q] && work[i].letters[q] != Pauli::I) free.push_back(q);
    if (free.empty()) continue; // product of earlier images
    const std::size_t p = free.front();
    for (std::size_t q : free) {
      if (work[i].letters[q] == Pauli::Z) push({GateKind::H, q, 0});
      else if (work[i].letters[q] == Pauli::Y) push({GateKind::S, q, 0});
    }
    for (std::size_t q : free)
      if (q != p) push({GateKind::CNOT, p, q});
    push({GateKind::H, p, 0});
    for (std::size_t q = 0; q < n; ++q)
      if (pivot[q] && work[i].letters[q] == Pauli::Z) push({GateKind::CNOT, q, p});
    pivot[p] = true;
  }

  Diagonalizer d;
  d.unitary = CMatrix::Identity(ix(std::size_t{1} << n), ix(std::size_t{1} << n));
  for (const auto &g : gates) d.unitary = gate_matrix(g, n) * d.unitary;
  for (const auto &w : work) {
    for (Pauli l : w.letters)
      if (l != Pauli::I && l != Pauli::Z) throw NumericalError("elimination left a non-diagonal string");
    d.images.push_back({w.sign, PauliString(w.letters)});
  }
  const double res = group_residual(strings, d.unitary, d.images);
  if (res > 1e-10) throw NumericalError("diagonalizer residual " + std::to_string(res));
  return d;
}

double diagonalizer_residual(std::span<const PauliString> strings, const Diagonalizer &d) {
  return group_residual(strings, d.unitary, d.images);
}

// ------------------------------------------------------------ grouping

std::string to_string(Grouping g) {
  switch (g) {
  case Grouping::QWC: return "qwc";
  case Grouping::GC: return "gc";
  case Grouping::Bell: return "bell";
  }
  return "?";
}

Grouping grouping_from_string(const std::string &s) {
  if (s == "qwc") return Grouping::QWC;
  if (s == "gc") return Grouping::GC;
  if (s == "bell") return Grouping::Bell;
  throw ValidationError("unknown grouping '" + s + "' (qwc, gc, bell)");
}

namespace {

std::vector<PauliString> sorted_terms(const OperatorSum &op) {
  std::vector<std::pair<double, PauliString>> t;
  for (const auto &term : op.terms())
    if (!term.string.is_identity()) t.emplace_back(std::abs(term.coefficient), term.string);
  std::stable_sort(t.begin(), t.end(), [](const auto &a, const auto &b) { return a.first > b.first; });
  std::vector<PauliString> out;
  for (auto &[w, s] : t) out.push_back(std::move(s));
  return out;
}

bool all_qwc(std::span<const PauliString> s) {
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = i + 1; j < s.size(); ++j)
      if (!qubitwise_commutes(s[i], s[j])) return false;
  return true;
}

MeasurementGroup local_group(std::vector<PauliString> strings) {
  const std::size_t n = strings.front().size();
  std::vector<Pauli> basis(n, Pauli::I);
  for (const auto &s : strings)
    for (std::size_t q = 0; q < n; ++q)
      if (s[q] != Pauli::I) basis[q] = s[q];
  const CMatrix h = hadamard();
  const CMatrix sdg = phase_gate().adjoint();
  CMatrix c = CMatrix::Identity(1, 1);
  for (std::size_t q = 0; q < n; ++q) {
    CMatrix local = CMatrix::Identity(2, 2);
    if (basis[q] == Pauli::X) local = h;
    else if (basis[q] == Pauli::Y) local = h * sdg;
    c = kron(c, local);
  }
  MeasurementGroup g;
  g.basis_change = std::move(c);
  for (const auto &s : strings) {
    std::vector<Pauli> z(n, Pauli::I);
    for (std::size_t q = 0; q < n; ++q)
      if (s[q] != Pauli::I) z[q] = Pauli::Z;
    g.images.push_back({1, PauliString(z)});
  }
  g.strings = std::move(strings);
  return g;
}

MeasurementGroup finish_group(std::vector<PauliString> strings) {
  if (all_qwc(strings)) return local_group(std::move(strings));
  Diagonalizer d = simultaneous_diagonalizer(strings);
  return {std::move(strings), std::move(d.unitary), std::move(d.images)};
}

std::vector<std::vector<PauliString>> qwc_partition(const OperatorSum &op) {
  std::vector<std::vector<PauliString>> parts;
  for (auto &s : sorted_terms(op)) {
    bool placed = false;
    for (auto &g : parts) {
      if (std::all_of(g.begin(), g.end(), [&](const PauliString &m) { return qubitwise_commutes(m, s); })) {
        g.push_back(s);
        placed = true;
        break;
      }
    }
    if (!placed) parts.push_back({s});
  }
  return parts;
}

} // namespace

std::vector<MeasurementGroup> qwc_groups(const OperatorSum &op) {
  std::vector<MeasurementGroup> out;
  for (auto &p : qwc_partition(op)) out.push_back(local_group(std::move(p)));
  return out;
}

std::vector<MeasurementGroup> gc_groups(const OperatorSum &op) {
  auto parts = qwc_partition(op);
  auto fits = [](const std::vector<PauliString> &g, const PauliString &s) {
    return std::all_of(g.begin(), g.end(), [&](const PauliString &m) { return commutes(m, s); });
  };
  bool changed = true;
  while (changed && parts.size() > 1) {
    changed = false;
    std::vector<std::size_t> order(parts.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return parts[a].size() < parts[b].size(); });
    for (std::size_t victim : order) {
      auto trial = parts;
      bool ok = true;
      for (const auto &s : parts[victim]) {
        bool placed = false;
        for (std::size_t h = 0; h < trial.size() && !placed; ++h) {
          if (h == victim || !fits(trial[h], s)) continue;
          trial[h].push_back(s);
          placed = true;
        }
        if (!placed) {
          ok = false;
          break;
        }
      }
      if (ok) {
        trial.erase(trial.begin() + static_cast<std::ptrdiff_t>(victim));
        parts = std::move(trial);
        changed = true;
        break;
      }
    }
  }
  std::vector<MeasurementGroup> out;
  for (auto &p : parts) out.push_back(finish_group(std::move(p)));
  return out;
}

CMatrix bell_basis_change() {
  const double r = 1.0 / std::sqrt(2.0);
  CMatrix b(4, 4);
  b << r, 0, 0, r,   // Phi+
      r, 0, 0, -r,   // Phi-
      0, r, r, 0,    // Psi+
      0, r, -r, 0;   // Psi-
  return b;
}

std::vector<MeasurementGroup> bell_groups(const OperatorSum &op) {
  if (op.num_qubits() != 2) throw ValidationError("bell grouping requires a two-qubit operator");
  MeasurementGroup bell;
  bell.basis_change = bell_basis_change();
  OperatorSum rest(2);
  for (const auto &s : sorted_terms(op)) {
    const std::string l = s.str();
    if (l == "XX") bell.images.push_back({1, PauliString("IZ")});
    else if (l == "YY") bell.images.push_back({-1, PauliString("ZZ")});
    else if (l == "ZZ") bell.images.push_back({1, PauliString("ZI")});
    else {
      rest.add(op.coefficient(s), s);
      continue;
    }
    bell.strings.push_back(s);
  }
  std::vector<MeasurementGroup> out;
  if (!bell.strings.empty()) out.push_back(std::move(bell));
  for (auto &g : qwc_groups(rest)) out.push_back(std::move(g));
  return out;
}

std::vector<MeasurementGroup> make_groups(const OperatorSum &op, Grouping g) {
  switch (g) {
  case Grouping::QWC: return qwc_groups(op);
  case Grouping::GC: return gc_groups(op);
  case Grouping::Bell: return bell_groups(op);
  }
  throw ValidationError("unknown grouping");
}

void check_exact_cover(const OperatorSum &op, std::span<const MeasurementGroup> groups) {
  std::map<PauliString, int> seen;
  for (const auto &g : groups) {
    if (g.strings.size() != g.images.size()) throw ValidationError("group images do not match strings");
    if (g.strings.empty()) throw ValidationError("empty measurement group");
    for (const auto &s : g.strings) {
      if (s.size() != op.num_qubits()) throw DimensionError("group string length mismatch");
      if (++seen[s] > 1) throw ValidationError("term " + s.str() + " is measured twice");
    }
  }
  for (const auto &t : op.terms())
    if (!t.string.is_identity() && !seen.count(t.string))
      throw ValidationError("term " + t.string.str() + " is not covered by any group");
}

std::string format_group_report(std::span<const MeasurementGroup> groups) {
  std::ostringstream os;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    os << "group " << g << " (" << groups[g].strings.size() << " strings)\n";
    for (std::size_t i = 0; i < groups[g].strings.size(); ++i)
      os << "  " << groups[g].strings[i].str() << " -> " << (groups[g].images[i].sign > 0 ? '+' : '-')
         << groups[g].images[i].z.str() << '\n';
  }
  return os.str();
}

// ------------------------------------------------------------ estimation

double z_expectation(const RVector &p, const SignedZ &image) {
  const std::uint64_t mask = image.z.z_mask();
  double e = 0;
  for (Index x = 0; x < p.size(); ++x) e += p(x) * parity_sign(static_cast<std::uint64_t>(x) & mask);
  return image.sign * e;
}

BellResult bell_measurement(const QuantumState &s, std::uint64_t shots, std::uint64_t seed) {
  if (state_dim(s) != 4) throw DimensionError("bell measurement needs a two-qubit state");
  BellResult r;
  r.counts = sample_observable(s, bell_basis_change(), shots, seed);
  const RVector f = r.counts.frequencies();
  r.xx = f(0) - f(1) + f(2) - f(3);
  r.yy = -f(0) + f(1) + f(2) - f(3);
  r.zz = f(0) + f(1) - f(2) - f(3);
  const double n = static_cast<double>(shots);
  auto err = [n](double v) { return std::sqrt(std::max(0.0, 1.0 - v * v) / n); };
  r.xx_err = err(r.xx);
  r.yy_err = err(r.yy);
  r.zz_err = err(r.zz);
  return r;
}

Estimate estimate_pauli_sum(const QuantumState &s, const OperatorSum &op,
                            std::span<const MeasurementGroup> groups, const ShotPlan &plan,
                            std::uint64_t seed, const CountsChannel &readout,
                            const CountsMitigator &mitigator) {
  if (plan.shots_per_group < 1) throw ValidationError("shots must be >= 1");
  if (state_dim(s) != (std::size_t{1} << op.num_qubits()))
    throw DimensionError("state and operator dimensions differ");
  check_exact_cover(op, groups);
  Estimate est;
  est.value = op.identity_coefficient().real();
  if (groups.empty()) return est;

  std::vector<std::uint64_t> shots(groups.size(), plan.shots_per_group);
  if (plan.allocation == ShotAllocation::Weighted) {
    std::vector<double> w(groups.size(), 0.0);
    for (std::size_t g = 0; g < groups.size(); ++g)
      for (const auto &str : groups[g].strings) w[g] += std::abs(op.coefficient(str));
    const double total_w = std::accumulate(w.begin(), w.end(), 0.0);
    const double budget = static_cast<double>(plan.shots_per_group * groups.size());
    for (std::size_t g = 0; g < groups.size(); ++g)
      shots[g] = total_w > 0 ? std::max<std::uint64_t>(1, static_cast<std::uint64_t>(budget * w[g] / total_w))
                             : plan.shots_per_group;
  }

  double variance = 0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto &grp = groups[g];
    Counts c = sample_observable(s, grp.basis_change, shots[g], derive_seed(seed, 2 * g));
    if (readout) c = readout(c, derive_seed(seed, 2 * g + 1));
    const RVector p = mitigator ? mitigator(c) : c.frequencies();
    // Diagonal group observable o(x) = sum_a w_a s_a (-1)^{x . z_a}.
    RVector o = RVector::Zero(p.size());
    for (std::size_t i = 0; i < grp.strings.size(); ++i) {
      const double w = op.coefficient(grp.strings[i]).real() * grp.images[i].sign;
      const std::uint64_t mask = grp.images[i].z.z_mask();
      for (Index x = 0; x < o.size(); ++x) o(x) += w * parity_sign(static_cast<std::uint64_t>(x) & mask);
    }
    const double mean = p.dot(o);
    const double second = p.dot(o.cwiseProduct(o));
    est.value += mean;
    variance += std::max(0.0, second - mean * mean) / static_cast<double>(shots[g]);
    est.shots += shots[g];
  }
  est.std_error = std::sqrt(variance);
  return est;
}

} // namespace pvqe
