#include "pvqe/noise.hpp"

#include "pvqe/csv.hpp"
#include "pvqe/error.hpp"
#include "pvqe/rng.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <random>
#include <sstream>

namespace pvqe {

namespace {

using Index = Eigen::Index;

Index ix(std::size_t i) { return static_cast<Index>(i); }

std::vector<std::size_t> resolve_targets(const NoiseSpec &s, std::size_t n) {
  if (!s.targets.empty()) return s.targets;
  std::vector<std::size_t> all(n);
  for (std::size_t q = 0; q < n; ++q) all[q] = q;
  return all;
}

CMatrix single_pauli(std::size_t q, Pauli p, std::size_t n) {
  return pauli_to_matrix(PauliString::identity(n).with(q, p));
}

// Hermitian part, which guards the round-off drift of repeated conjugations.
CMatrix herm(const CMatrix &m) { return 0.5 * (m + m.adjoint()); }

} // namespace

std::string to_string(NoiseKind k) {
  switch (k) {
  case NoiseKind::Dephasing: return "dephasing";
  case NoiseKind::Depolarizing: return "depolarizing";
  case NoiseKind::White: return "white";
  }
  return "?";
}

NoiseKind noise_kind_from_string(const std::string &s) {
  if (s == "dephasing") return NoiseKind::Dephasing;
  if (s == "depolarizing") return NoiseKind::Depolarizing;
  if (s == "white") return NoiseKind::White;
  throw ValidationError("unknown noise kind '" + s + "' (dephasing, depolarizing, white)");
}

void NoiseSpec::validate(std::size_t num_qubits) const {
  if (!(strength >= 0.0 && strength <= 1.0)) throw ValidationError("noise strength must lie in [0, 1]");
  for (std::size_t q : targets)
    if (q >= num_qubits) throw ValidationError("noise target " + std::to_string(q) + " out of range");
}

DensityMatrix apply_channel(const DensityMatrix &rho, const NoiseSpec &spec) {
  const std::size_t d = rho.dim();
  if (spec.kind == NoiseKind::White) {
    spec.validate(std::numeric_limits<std::size_t>::max()); // targets unused
    const CMatrix out = (1.0 - spec.strength) * rho.entries() +
                        spec.strength * CMatrix::Identity(ix(d), ix(d)) / static_cast<double>(d);
    return DensityMatrix(herm(out));
  }
  const std::size_t n = rho.num_qubits();
  spec.validate(n);
  const double e = spec.strength;
  CMatrix r = rho.entries();
  for (std::size_t q : resolve_targets(spec, n)) {
    if (spec.kind == NoiseKind::Dephasing) {
      const CMatrix z = single_pauli(q, Pauli::Z, n);
      r = (1.0 - e / 2.0) * r + (e / 2.0) * z * r * z;
    } else {
      CMatrix twirl = r;
      for (Pauli p : {Pauli::X, Pauli::Y, Pauli::Z}) {
        const CMatrix m = single_pauli(q, p, n);
        twirl += m * r * m;
      }
      r = (1.0 - e) * r + (e / 4.0) * twirl;
    }
  }
  return DensityMatrix(herm(r));
}

DensityMatrix apply_channels(DensityMatrix rho, std::span<const NoiseSpec> specs) {
  for (const auto &s : specs) rho = apply_channel(rho, s);
  return rho;
}

// ------------------------------------------------------------ confusion

ConfusionMatrix::ConfusionMatrix(RMatrix entries, double tol) : m_(std::move(entries)) {
  if (m_.rows() == 0 || m_.rows() != m_.cols()) throw DimensionError("confusion matrix must be square");
  for (Index k = 0; k < m_.cols(); ++k) {
    if ((m_.col(k).array() < 0.0).any()) throw ValidationError("confusion matrix has negative entries");
    if (std::abs(m_.col(k).sum() - 1.0) > tol)
      throw ValidationError("confusion matrix column " + std::to_string(k) + " does not sum to 1");
  }
}

ConfusionMatrix ConfusionMatrix::identity(std::size_t dim) {
  return ConfusionMatrix(RMatrix::Identity(ix(dim), ix(dim)));
}

double ConfusionMatrix::condition_number() const {
  Eigen::JacobiSVD<RMatrix> svd(m_);
  const auto &s = svd.singularValues();
  const double lo = s(s.size() - 1);
  return lo > 0.0 ? s(0) / lo : std::numeric_limits<double>::infinity();
}

ConfusionMatrix bitflip_confusion(std::size_t num_qubits, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("flip probability must lie in [0, 1]");
  if (num_qubits > kMaxDenseQubits) throw DimensionError("dense limit exceeded");
  RMatrix one(2, 2);
  one << 1.0 - p, p, p, 1.0 - p;
  RMatrix m = RMatrix::Identity(1, 1);
  for (std::size_t q = 0; q < num_qubits; ++q) {
    RMatrix next(m.rows() * 2, m.cols() * 2);
    for (Index i = 0; i < m.rows(); ++i)
      for (Index j = 0; j < m.cols(); ++j) next.block(2 * i, 2 * j, 2, 2) = m(i, j) * one;
    m = std::move(next);
  }
  return ConfusionMatrix(std::move(m));
}

Counts apply_confusion(const Counts &c, const ConfusionMatrix &m, std::uint64_t seed) {
  if (c.dim != m.dim()) throw DimensionError("counts and confusion matrix dimensions differ");
  Counts out;
  out.dim = c.dim;
  out.shots = c.shots;
  for (const auto &[k, n] : c.counts) {
    if (n == 0) continue;
    const Counts col = sample_distribution(m.entries().col(ix(k)), n, derive_seed(seed, k));
    for (const auto &[j, v] : col.counts) out.counts[j] += v;
  }
  return out;
}

ConfusionMatrix calibrate_confusion(const MeasureFn &measure, std::span<const std::size_t> basis_states,
                                    std::uint64_t shots, std::uint64_t seed, double max_condition) {
  if (shots < 1) throw ValidationError("calibration needs shots >= 1");
  const std::size_t dim = basis_states.size();
  if (dim == 0) throw ValidationError("no calibration states");
  std::vector<bool> seen(dim, false);
  for (std::size_t k : basis_states) {
    if (k >= dim || seen[k]) throw ValidationError("calibration states must cover every outcome once");
    seen[k] = true;
  }
  RMatrix m = RMatrix::Zero(ix(dim), ix(dim));
  for (std::size_t i = 0; i < dim; ++i) {
    const std::size_t k = basis_states[i];
    const Counts c = measure(k, shots, derive_seed(seed, k));
    if (c.dim != dim) throw DimensionError("measurement returned the wrong outcome count");
    if (c.shots == 0) throw ValidationError("measurement returned no shots");
    m.col(ix(k)) = c.frequencies();
    m.col(ix(k)) /= m.col(ix(k)).sum();
  }
  ConfusionMatrix out(std::move(m));
  const double cond = out.condition_number();
  if (!(cond <= max_condition))
    throw NumericalError("calibrated confusion matrix is ill-conditioned (condition number " +
                         format_number(cond) + ")");
  return out;
}

ConfusionMatrix calibrate_confusion(const MeasureFn &measure, std::size_t dim, std::uint64_t shots,
                                    std::uint64_t seed, double max_condition) {
  std::vector<std::size_t> states(dim);
  for (std::size_t k = 0; k < dim; ++k) states[k] = k;
  return calibrate_confusion(measure, states, shots, seed, max_condition);
}

QuasiDistribution mitigate_distribution(const RVector &p, const ConfusionMatrix &m) {
  if (static_cast<std::size_t>(p.size()) != m.dim())
    throw DimensionError("distribution and confusion matrix dimensions differ");
  Eigen::FullPivLU<RMatrix> lu(m.entries());
  if (!lu.isInvertible()) throw NumericalError("confusion matrix is singular");
  QuasiDistribution q;
  q.p = lu.solve(p);
  q.has_negative = (q.p.array() < 0.0).any();
  return q;
}

QuasiDistribution mitigate_counts(const Counts &c, const ConfusionMatrix &m) {
  return mitigate_distribution(c.frequencies(), m);
}

std::string format_confusion_csv(const ConfusionMatrix &m) {
  std::ostringstream os;
  char buf[32];
  for (Index i = 0; i < m.entries().rows(); ++i) {
    for (Index j = 0; j < m.entries().cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", m.entries()(i, j));
      os << (j ? "," : "") << buf;
    }
    os << '\n';
  }
  return os.str();
}

ConfusionMatrix parse_confusion_csv(std::istream &in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> r;
    std::stringstream ls(line);
    std::string tok;
    while (std::getline(ls, tok, ',')) {
      try {
        std::size_t used = 0;
        r.push_back(std::stod(tok, &used));
        if (tok.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(tok);
      } catch (const std::exception &) {
        throw ParseError(lineno, "malformed number '" + tok + "'");
      }
    }
    if (!rows.empty() && r.size() != rows.front().size()) throw ParseError(lineno, "ragged row");
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw ParseError(lineno, "no rows");
  RMatrix m(ix(rows.size()), ix(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(ix(i), ix(j)) = rows[i][j];
  return ConfusionMatrix(std::move(m));
}

// ------------------------------------------------------------ ZNE

ZneResult zne_extrapolate(std::span<const ZnePoint> points) {
  if (points.size() < 2) throw ValidationError("extrapolation needs at least two points");
  ZneResult r;
  if (points.size() == 2) {
    const double e1 = points[0].epsilon, e2 = points[1].epsilon;
    if (e1 == e2) throw ValidationError("extrapolation needs distinct noise strengths");
    const double d = e2 - e1;
    r.value = (e2 * points[0].energy - e1 * points[1].energy) / d;
    r.std_error = std::sqrt(e2 * e2 * points[0].std_error * points[0].std_error +
                            e1 * e1 * points[1].std_error * points[1].std_error) /
                  std::abs(d);
    return r;
  }
  const double n = static_cast<double>(points.size());
  double mean = 0;
  for (const auto &p : points) mean += p.epsilon / n;
  double sxx = 0;
  for (const auto &p : points) sxx += (p.epsilon - mean) * (p.epsilon - mean);
  if (!(sxx > 0.0)) throw ValidationError("extrapolation needs distinct noise strengths");
  // Intercept = sum c_i E_i with c_i = 1/n - mean (x_i - mean) / Sxx.
  double var = 0;
  for (const auto &p : points) {
    const double c = 1.0 / n - mean * (p.epsilon - mean) / sxx;
    r.value += c * p.energy;
    var += c * c * p.std_error * p.std_error;
  }
  r.std_error = std::sqrt(var);
  return r;
}

double zne_estimate(std::span<const ZnePoint> points) { return zne_extrapolate(points).value; }

double zne_variance(double sigma, double eps1, double eps2) {
  if (eps1 == eps2) throw ValidationError("noise strengths must differ");
  if (!(sigma >= 0.0)) throw ValidationError("sigma must be non-negative");
  const double d = eps2 - eps1;
  return sigma * sigma * (eps2 * eps2 + eps1 * eps1) / (d * d);
}

std::string format_zne_csv(std::span<const ZnePoint> points, const ZneResult &r) {
  CsvTable t;
  t.header = {"epsilon", "energy", "stderr"};
  for (const auto &p : points) t.add_numbers({p.epsilon, p.energy, p.std_error});
  return t.str() + "zne," + format_number(r.value) + "," + format_number(r.std_error) + "\n";
}

} // namespace pvqe
