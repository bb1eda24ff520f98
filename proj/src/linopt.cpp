#include "pvqe/linopt.hpp"

#include "pvqe/error.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

namespace pvqe {

namespace {

using Index = Eigen::Index;
constexpr Complex kI{0.0, 1.0};

Index ix(std::size_t i) { return static_cast<Index>(i); }

void check_unitary(const ModeUnitary &u, double tol) {
  if (u.rows() == 0 || u.rows() != u.cols()) throw DimensionError("mode unitary must be square");
  if (static_cast<std::size_t>(u.rows()) > kMaxModes)
    throw DimensionError("at most " + std::to_string(kMaxModes) + " modes supported");
  const double res = unitarity_residual(u);
  if (!(res <= tol))
    throw ValidationError("mode transformation is not unitary: ||U^dagger U - I|| = " +
                          std::to_string(res));
}

// Right-multiplies u by T(m; theta, phi)^{-1}, choosing the angles that zero
// u(row, m).
MeshElement null_from_right(ModeUnitary &u, std::size_t row, std::size_t m) {
  const std::size_t n = m + 1;
  const Complex a = u(ix(row), ix(m));
  const Complex b = u(ix(row), ix(n));
  MeshElement e{m, n, 0.0, 0.0};
  if (std::abs(a) > 0.0) {
    e.theta = std::atan2(std::abs(a), std::abs(b));
    e.phi = std::arg(a) - std::arg(b);
  }
  u = u * bs_embed(e, static_cast<std::size_t>(u.rows())).adjoint();
  u(ix(row), ix(m)) = 0.0;
  return e;
}

// Left-multiplies u by T(m; theta, phi), zeroing u(m + 1, col).
MeshElement null_from_left(ModeUnitary &u, std::size_t m, std::size_t col) {
  const std::size_t n = m + 1;
  const Complex a = u(ix(m), ix(col));
  const Complex b = u(ix(n), ix(col));
  MeshElement e{m, n, 0.0, 0.0};
  if (std::abs(b) > 0.0) {
    e.theta = std::atan2(std::abs(b), std::abs(a));
    e.phi = std::arg(b) - std::arg(a) + std::numbers::pi;
  }
  u = bs_embed(e, static_cast<std::size_t>(u.rows())) * u;
  u(ix(n), ix(col)) = 0.0;
  return e;
}

double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * std::numbers::pi);
  return a == -std::numbers::pi ? std::numbers::pi : a;
}

} // namespace

void BeamSplitterMesh::validate() const {
  if (mode_count == 0) throw ValidationError("mesh needs at least one mode");
  if (output_phases.size() != mode_count)
    throw ValidationError("mesh needs one output phase per mode");
  for (const auto &e : elements) {
    if (!(e.m < e.n && e.n < mode_count && e.n == e.m + 1))
      throw ValidationError("mesh element must couple adjacent modes m, m+1 < M");
    if (!std::isfinite(e.theta) || !std::isfinite(e.phi))
      throw ValidationError("mesh element angles must be finite");
  }
}

ModeUnitary bs_embed(const MeshElement &e, std::size_t mode_count) {
  if (!(e.m < e.n && e.n < mode_count)) throw ValidationError("mesh element outside the mode range");
  ModeUnitary t = ModeUnitary::Identity(ix(mode_count), ix(mode_count));
  const Complex ph = std::exp(kI * e.phi);
  const double c = std::cos(e.theta), s = std::sin(e.theta);
  t(ix(e.m), ix(e.m)) = ph * c;
  t(ix(e.m), ix(e.n)) = -s;
  t(ix(e.n), ix(e.m)) = ph * s;
  t(ix(e.n), ix(e.n)) = c;
  return t;
}

namespace {

// Light-order product scaled per element by `amp`.
CMatrix mesh_product(const BeamSplitterMesh &mesh, double amp) {
  mesh.validate();
  const std::size_t m = mesh.mode_count;
  CMatrix u = CMatrix::Identity(ix(m), ix(m));
  for (const auto &e : mesh.elements) {
    // Left-multiply by the element; only rows m, n change.
    const Complex ph = std::exp(kI * e.phi);
    const double c = std::cos(e.theta) * amp, s = std::sin(e.theta) * amp;
    const Eigen::RowVectorXcd rm = u.row(ix(e.m));
    const Eigen::RowVectorXcd rn = u.row(ix(e.n));
    u.row(ix(e.m)) = ph * c * rm - s * rn;
    u.row(ix(e.n)) = ph * s * rm + c * rn;
  }
  for (std::size_t i = 0; i < m; ++i) u.row(ix(i)) *= std::exp(kI * mesh.output_phases[i]);
  return u;
}

} // namespace

ModeUnitary mesh_reconstruct(const BeamSplitterMesh &mesh) { return mesh_product(mesh, 1.0); }

BeamSplitterMesh clements_decompose(const ModeUnitary &u_in, double tol) {
  check_unitary(u_in, tol);
  const std::size_t n = static_cast<std::size_t>(u_in.rows());
  ModeUnitary u = u_in;
  std::vector<MeshElement> right, left;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (i % 2 == 0) {
      for (std::size_t j = 0; j <= i; ++j) right.push_back(null_from_right(u, n - 1 - j, i - j));
    } else {
      for (std::size_t j = 1; j <= i + 1; ++j) left.push_back(null_from_left(u, n + j - i - 3, j - 1));
    }
  }
  // u is now diagonal: L_k...L_1 U R_1^-1...R_p^-1 = D. Push each L^-1 through
  // D using T^-1 D = D' T'.
  std::vector<double> delta(n);
  for (std::size_t i = 0; i < n; ++i) delta[i] = std::arg(u(ix(i), ix(i)));
  BeamSplitterMesh mesh;
  mesh.mode_count = n;
  mesh.elements = right;
  for (auto it = left.rbegin(); it != left.rend(); ++it) {
    const double alpha = delta[it->m], beta = delta[it->n];
    MeshElement moved{it->m, it->n, 0.0, 0.0};
    if (it->theta == 0.0) {
      delta[it->m] = alpha - it->phi;
    } else {
      moved.theta = it->theta;
      moved.phi = wrap_angle(alpha - beta + std::numbers::pi);
      delta[it->m] = beta - it->phi + std::numbers::pi;
    }
    mesh.elements.push_back(moved);
  }
  for (auto &d : delta) d = wrap_angle(d);
  mesh.output_phases = std::move(delta);
  return mesh;
}

BeamSplitterMesh reck_decompose(const ModeUnitary &u_in, double tol) {
  check_unitary(u_in, tol);
  const std::size_t n = static_cast<std::size_t>(u_in.rows());
  ModeUnitary u = u_in;
  BeamSplitterMesh mesh;
  mesh.mode_count = n;
  for (std::size_t r = n - 1; r >= 1; --r)
    for (std::size_t c = 0; c < r; ++c) mesh.elements.push_back(null_from_right(u, r, c));
  mesh.output_phases.resize(n);
  for (std::size_t i = 0; i < n; ++i) mesh.output_phases[i] = std::arg(u(ix(i), ix(i)));
  return mesh;
}

BeamSplitterMesh decompose(const ModeUnitary &u, MeshLayout layout, double tol) {
  return layout == MeshLayout::Clements ? clements_decompose(u, tol) : reck_decompose(u, tol);
}

std::vector<MeshElement> mesh_layout(std::size_t mode_count, MeshLayout layout) {
  std::vector<MeshElement> out;
  if (layout == MeshLayout::Clements) {
    for (std::size_t layer = 0; layer < mode_count; ++layer)
      for (std::size_t m = layer % 2; m + 1 < mode_count; m += 2) out.push_back({m, m + 1, 0.0, 0.0});
  } else {
    for (std::size_t r = mode_count - 1; r >= 1 && mode_count > 1; --r)
      for (std::size_t c = 0; c < r; ++c) out.push_back({c, c + 1, 0.0, 0.0});
  }
  return out;
}

std::size_t mesh_depth(const BeamSplitterMesh &mesh) {
  std::vector<std::size_t> layer(mesh.mode_count, 0);
  std::size_t depth = 0;
  for (const auto &e : mesh.elements) {
    const std::size_t l = std::max(layer[e.m], layer[e.n]) + 1;
    layer[e.m] = layer[e.n] = l;
    depth = std::max(depth, l);
  }
  return depth;
}

CMatrix mesh_with_loss(const BeamSplitterMesh &mesh, double transmission) {
  if (!(transmission > 0.0 && transmission <= 1.0))
    throw ValidationError("transmission must lie in (0, 1]");
  return mesh_product(mesh, std::sqrt(transmission));
}

double mesh_fidelity(const ModeUnitary &ideal, const CMatrix &actual) {
  if (ideal.rows() != actual.rows() || ideal.cols() != actual.cols())
    throw DimensionError("fidelity of matrices with different shape");
  const double norm = (actual.adjoint() * actual).trace().real();
  if (!(norm > 0.0)) return 0.0;
  const double m = static_cast<double>(ideal.rows());
  const double f = std::norm((ideal.adjoint() * actual).trace()) / (m * norm);
  return std::clamp(f, 0.0, 1.0);
}

ModeUnitary haar_unitary(std::size_t dim, std::mt19937_64 &rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  CMatrix z(ix(dim), ix(dim));
  for (Index i = 0; i < z.rows(); ++i)
    for (Index j = 0; j < z.cols(); ++j) z(i, j) = Complex{g(rng), g(rng)} / std::sqrt(2.0);
  Eigen::HouseholderQR<CMatrix> qr(z);
  CMatrix q = qr.householderQ();
  const CMatrix r = qr.matrixQR();
  for (Index j = 0; j < q.cols(); ++j) {
    const Complex d = r(j, j);
    q.col(j) *= std::abs(d) > 0 ? d / std::abs(d) : Complex{1.0};
  }
  return q;
}

// ------------------------------------------------------------ Fock evolution

std::size_t FockState::photons() const {
  std::size_t n = 0;
  for (auto o : occupations) n += o;
  return n;
}

double AmplitudeMap::total_probability() const {
  double p = 0;
  for (const auto &[s, a] : amplitudes) p += std::norm(a);
  return p;
}

Complex AmplitudeMap::amplitude(const FockState &s) const {
  auto it = amplitudes.find(s);
  return it == amplitudes.end() ? Complex{} : it->second;
}

Complex permanent(const CMatrix &a) {
  const std::size_t n = static_cast<std::size_t>(a.rows());
  if (a.rows() != a.cols()) throw DimensionError("permanent of a non-square matrix");
  if (n == 0) return 1.0;
  if (n > 20) throw DimensionError("permanent limited to 20 x 20");
  // Ryser: perm(A) = (-1)^n sum_S (-1)^{|S|} prod_i sum_{j in S} a_ij,
  // subsets visited in Gray-code order so each step toggles one column.
  std::vector<Complex> row_sums(n, 0.0);
  Complex total = 0.0;
  std::uint64_t gray = 0;
  for (std::uint64_t k = 1; k < (std::uint64_t{1} << n); ++k) {
    const std::uint64_t next = k ^ (k >> 1);
    const std::uint64_t flipped = next ^ gray;
    const auto j = static_cast<Index>(std::countr_zero(flipped));
    const double sgn = (next & flipped) ? 1.0 : -1.0;
    for (std::size_t i = 0; i < n; ++i) row_sums[i] += sgn * a(ix(i), j);
    gray = next;
    Complex prod = 1.0;
    for (const auto &s : row_sums) prod *= s;
    total += (std::popcount(gray) % 2 ? -1.0 : 1.0) * prod;
  }
  return (n % 2 ? -1.0 : 1.0) * total;
}

std::vector<FockState> fock_basis(std::size_t modes, std::size_t photons) {
  std::vector<FockState> out;
  std::vector<unsigned> occ(modes, 0);
  auto rec = [&](auto &&self, std::size_t mode, std::size_t left) -> void {
    if (mode + 1 == modes) {
      occ[mode] = static_cast<unsigned>(left);
      out.push_back({occ});
      return;
    }
    for (std::size_t k = left + 1; k-- > 0;) {
      occ[mode] = static_cast<unsigned>(k);
      self(self, mode + 1, left - k);
    }
  };
  if (modes > 0) rec(rec, 0, photons);
  return out;
}

namespace {

double factorial(unsigned k) {
  double f = 1;
  for (unsigned i = 2; i <= k; ++i) f *= i;
  return f;
}

std::vector<std::size_t> expand(const FockState &s) {
  std::vector<std::size_t> idx;
  for (std::size_t m = 0; m < s.occupations.size(); ++m)
    for (unsigned k = 0; k < s.occupations[m]; ++k) idx.push_back(m);
  return idx;
}

} // namespace

AmplitudeMap fock_evolve(const CMatrix &u, const FockState &input) {
  const std::size_t m = static_cast<std::size_t>(u.rows());
  if (u.rows() != u.cols()) throw DimensionError("mode transformation must be square");
  if (m > kMaxModes) throw DimensionError("at most 8 modes supported");
  if (input.occupations.size() != m) throw DimensionError("input Fock state does not match mode count");
  const std::size_t n = input.photons();
  if (n > kMaxPhotons)
    throw DimensionError("photon-count overflow: " + std::to_string(n) + " > " +
                         std::to_string(kMaxPhotons));
  const auto cols = expand(input);
  double in_norm = 1;
  for (auto t : input.occupations) in_norm *= factorial(t);
  AmplitudeMap out;
  for (const auto &s : fock_basis(m, n)) {
    const auto rows = expand(s);
    CMatrix sub(ix(n), ix(n));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) sub(ix(i), ix(j)) = u(ix(rows[i]), ix(cols[j]));
    double out_norm = 1;
    for (auto o : s.occupations) out_norm *= factorial(o);
    out.amplitudes.emplace(s, permanent(sub) / std::sqrt(in_norm * out_norm));
  }
  return out;
}

PostSelected dual_rail_postselect(const AmplitudeMap &amps,
                                  std::span<const std::pair<std::size_t, std::size_t>> rail_pairs) {
  if (rail_pairs.empty()) throw ValidationError("no rail pairs given");
  std::vector<bool> used;
  for (const auto &[a, b] : rail_pairs) {
    const std::size_t hi = std::max(a, b);
    if (used.size() <= hi) used.resize(hi + 1, false);
    if (a == b || used[a] || used[b]) throw ValidationError("rail pairs must be disjoint");
    used[a] = used[b] = true;
  }
  const std::size_t k = rail_pairs.size();
  if (k > kMaxDenseQubits) throw DimensionError("too many rail pairs");
  CVector v = CVector::Zero(ix(std::size_t{1} << k));
  for (const auto &[state, amp] : amps.amplitudes) {
    if (state.photons() != k)
      throw ValidationError("photon number must equal the number of rail pairs");
    if (state.occupations.size() < used.size())
      throw ValidationError("rail mode outside the Fock state");
    std::size_t index = 0;
    bool keep = true;
    for (const auto &[first, second] : rail_pairs) {
      const unsigned a = state.occupations[first], b = state.occupations[second];
      if (a + b != 1) {
        keep = false;
        break;
      }
      index = (index << 1) | (b == 1 ? 1U : 0U);
    }
    if (keep) v(ix(index)) += amp;
  }
  const double kept = v.squaredNorm();
  if (!(kept > 1e-14)) throw NumericalError("post-selection annihilated the state");
  return {StateVector::normalized(v), kept};
}

// ------------------------------------------------------------ wave plates

CMatrix waveplate(WaveplateKind kind, double angle) {
  CMatrix w(2, 2);
  if (kind == WaveplateKind::HWP) {
    const double c = std::cos(2 * angle), s = std::sin(2 * angle);
    w << c, s, s, -c;
  } else {
    const double c = std::cos(angle), s = std::sin(angle);
    const Complex off = Complex{1.0, -1.0} * (s * c);
    w << Complex{c * c, s * s}, off, off, Complex{s * s, c * c};
  }
  return w;
}

CMatrix pbd_cnot() {
  CMatrix u = CMatrix::Zero(4, 4);
  u(0, 0) = u(1, 1) = 1.0;
  u(2, 3) = u(3, 2) = 1.0;
  return u;
}

double visibility_to_noise(double visibility) {
  if (!(visibility >= 0.0 && visibility <= 1.0)) throw ValidationError("visibility must lie in [0, 1]");
  return 1.0 - visibility;
}

// ------------------------------------------------------------ file formats

ModeUnitary parse_mode_unitary(std::istream &in) {
  std::string line;
  std::size_t lineno = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++lineno;
      if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
      if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
    }
    return false;
  };
  if (!next_line()) throw ParseError(0, "empty mode-unitary file");
  std::size_t m = 0;
  {
    std::istringstream ls(line);
    if (!(ls >> m) || m == 0) throw ParseError(lineno, "expected the mode count M");
  }
  if (m > kMaxModes) throw ParseError(lineno, "at most 8 modes supported");
  ModeUnitary u(ix(m), ix(m));
  for (std::size_t r = 0; r < m; ++r) {
    if (!next_line()) throw ParseError(lineno, "expected " + std::to_string(m) + " matrix rows");
    std::istringstream ls(line);
    std::string tok;
    std::size_t c = 0;
    while (ls >> tok) {
      if (c >= m) throw ParseError(lineno, "too many entries in row");
      const auto comma = tok.find(',');
      if (comma == std::string::npos) throw ParseError(lineno, "entry '" + tok + "' is not re,im");
      try {
        std::size_t u1 = 0, u2 = 0;
        const std::string re = tok.substr(0, comma), im = tok.substr(comma + 1);
        const double a = std::stod(re, &u1), b = std::stod(im, &u2);
        if (u1 != re.size() || u2 != im.size()) throw std::invalid_argument("trailing");
        u(ix(r), ix(c)) = Complex{a, b};
      } catch (const std::exception &) {
        throw ParseError(lineno, "entry '" + tok + "' is not re,im");
      }
      ++c;
    }
    if (c != m) throw ParseError(lineno, "expected " + std::to_string(m) + " entries in row");
  }
  return u;
}

ModeUnitary read_mode_unitary(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return parse_mode_unitary(in);
}

std::string format_mode_unitary(const ModeUnitary &u) {
  std::ostringstream os;
  os << std::setprecision(17) << u.rows() << '\n';
  for (Index r = 0; r < u.rows(); ++r) {
    for (Index c = 0; c < u.cols(); ++c)
      os << (c ? " " : "") << u(r, c).real() << ',' << u(r, c).imag();
    os << '\n';
  }
  return os.str();
}

std::string format_mesh(const BeamSplitterMesh &mesh) {
  std::ostringstream os;
  os << std::setprecision(17);
  for (const auto &e : mesh.elements) os << e.m << ' ' << e.n << ' ' << e.theta << ' ' << e.phi << '\n';
  os << "D:";
  for (double p : mesh.output_phases) os << ' ' << p;
  os << '\n';
  return os.str();
}

BeamSplitterMesh parse_mesh(std::istream &in) {
  BeamSplitterMesh mesh;
  std::string line;
  std::size_t lineno = 0;
  bool have_d = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    if (line.rfind("D:", 0) == 0) {
      ls.ignore(2);
      double p;
      while (ls >> p) mesh.output_phases.push_back(p);
      have_d = true;
      continue;
    }
    if (have_d) throw ParseError(lineno, "element after the D: line");
    MeshElement e;
    if (!(ls >> e.m >> e.n >> e.theta >> e.phi)) throw ParseError(lineno, "expected 'm n theta phi'");
    mesh.elements.push_back(e);
  }
  if (!have_d) throw ParseError(lineno, "missing 'D:' line");
  mesh.mode_count = mesh.output_phases.size();
  try {
    mesh.validate();
  } catch (const ValidationError &e) {
    throw ParseError(0, e.what());
  }
  return mesh;
}

} // namespace pvqe
