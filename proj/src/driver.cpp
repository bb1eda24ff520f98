#include "pvqe/driver.hpp"

#include "pvqe/csv.hpp"
#include "pvqe/error.hpp"
#include "pvqe/linopt.hpp"
#include "pvqe/rng.hpp"

#include "json.hpp"

#include <bit>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#ifndef PVQE_DEFAULT_DATA_DIR
#define PVQE_DEFAULT_DATA_DIR "data"
#endif

namespace pvqe {

namespace {

using Index = Eigen::Index;
using json = nlohmann::json;

Index ix(std::size_t i) { return static_cast<Index>(i); }

} // namespace

// ------------------------------------------------------------ ansatz

std::string to_string(AnsatzFamily f) {
  switch (f) {
  case AnsatzFamily::WaveplateHea: return "waveplate_hea";
  case AnsatzFamily::MeshPhases: return "mesh_phases";
  case AnsatzFamily::Uccsd: return "uccsd";
  case AnsatzFamily::RawQudit: return "raw_qudit";
  }
  return "?";
}

AnsatzFamily ansatz_family_from_string(const std::string &s) {
  if (s == "waveplate_hea") return AnsatzFamily::WaveplateHea;
  if (s == "mesh_phases") return AnsatzFamily::MeshPhases;
  if (s == "uccsd") return AnsatzFamily::Uccsd;
  if (s == "raw_qudit") return AnsatzFamily::RawQudit;
  throw ValidationError("unknown ansatz family '" + s + "'");
}

std::size_t AnsatzSpec::parameter_count() const {
  switch (family) {
  case AnsatzFamily::RawQudit: return dim >= 1 ? 2 * dim - 2 : 0;
  case AnsatzFamily::WaveplateHea:
    return static_cast<std::size_t>(std::count_if(plates.begin(), plates.end(), [](const PlateOp &p) {
      return p.kind != PlateOp::Kind::PBD;
    }));
  case AnsatzFamily::MeshPhases: return 2 * mesh_layout(modes, MeshLayout::Clements).size() + modes;
  case AnsatzFamily::Uccsd: return singles.size() + doubles.size();
  }
  return 0;
}

std::size_t AnsatzSpec::state_dim() const {
  switch (family) {
  case AnsatzFamily::RawQudit: return dim;
  case AnsatzFamily::WaveplateHea:
  case AnsatzFamily::Uccsd: return std::size_t{1} << num_qubits;
  case AnsatzFamily::MeshPhases: return rail_pairs.empty() ? modes : std::size_t{1} << rail_pairs.size();
  }
  return 0;
}

void AnsatzSpec::validate() const {
  switch (family) {
  case AnsatzFamily::RawQudit:
    if (dim < 2 || dim > (std::size_t{1} << kMaxDenseQubits)) throw ValidationError("raw_qudit needs 2 <= dim <= 256");
    break;
  case AnsatzFamily::WaveplateHea:
    if (num_qubits < 1 || num_qubits > kMaxDenseQubits) throw ValidationError("waveplate_hea needs 1..8 qubits");
    for (const auto &p : plates) {
      if (p.qubit >= num_qubits) throw ValidationError("plate qubit out of range");
      if (p.kind == PlateOp::Kind::PBD && (p.target >= num_qubits || p.target == p.qubit))
        throw ValidationError("PBD needs distinct control and target qubits in range");
    }
    break;
  case AnsatzFamily::MeshPhases: {
    if (modes < 1 || modes > kMaxModes) throw ValidationError("mesh_phases needs 1..8 modes");
    if (rail_pairs.empty() && modes < 2) throw ValidationError("path qudit needs at least 2 modes");
    if (rail_pairs.size() > kMaxPhotons) throw ValidationError("at most 3 rail pairs (photons)");
    std::set<std::size_t> used;
    for (const auto &[a, b] : rail_pairs)
      if (a >= modes || b >= modes || a == b || !used.insert(a).second || !used.insert(b).second)
        throw ValidationError("rail pairs must be disjoint modes in range");
    break;
  }
  case AnsatzFamily::Uccsd: {
    if (num_qubits < 1 || num_qubits > kMaxUccsdOrbitals) throw ValidationError("uccsd needs 1..4 orbitals");
    if (reference && *reference >= (std::size_t{1} << num_qubits))
      throw ValidationError("uccsd reference out of range");
    UccsdAmplitudes a;
    a.orbital_count = num_qubits;
    for (const auto &s : singles) a.singles[s] = 0.0;
    for (const auto &d : doubles) a.doubles[d] = 0.0;
    a.validate();
    break;
  }
  }
}

std::vector<PlateOp> default_plate_layout(std::size_t n) {
  std::vector<PlateOp> out;
  auto plates = [&] {
    for (std::size_t q = 0; q < n; ++q) {
      out.push_back({PlateOp::Kind::HWP, q, 0});
      out.push_back({PlateOp::Kind::QWP, q, 0});
    }
  };
  plates();
  for (std::size_t q = 0; q + 1 < n; ++q) out.push_back({PlateOp::Kind::PBD, q, q + 1});
  if (n > 1) plates();
  return out;
}

void fill_default_excitations(AnsatzSpec &spec) {
  const std::size_t n = spec.num_qubits;
  const std::size_t ref = spec.reference.value_or(0);
  std::vector<std::size_t> occ, vir;
  for (std::size_t q = 0; q < n; ++q)
    ((ref >> (n - 1 - q)) & 1 ? occ : vir).push_back(q);
  spec.singles.clear();
  spec.doubles.clear();
  for (std::size_t i : occ)
    for (std::size_t a : vir) spec.singles.push_back({a, i});
  for (std::size_t x = 0; x < occ.size(); ++x)
    for (std::size_t y = x + 1; y < occ.size(); ++y)
      for (std::size_t u = 0; u < vir.size(); ++u)
        for (std::size_t v = u + 1; v < vir.size(); ++v)
          spec.doubles.push_back({vir[u], vir[v], occ[x], occ[y]});
}

StateVector raw_qudit_state(std::size_t dim, const RVector &theta) {
  if (dim < 2) throw ValidationError("raw_qudit needs dim >= 2");
  if (static_cast<std::size_t>(theta.size()) != 2 * dim - 2)
    throw ValidationError("raw_qudit of dim " + std::to_string(dim) + " takes " + std::to_string(2 * dim - 2) +
                          " parameters, got " + std::to_string(theta.size()));
  CVector a(ix(dim));
  double s = 1.0;
  for (std::size_t j = 0; j + 1 < dim; ++j) {
    a(ix(j)) = s * std::cos(theta(ix(j)));
    s *= std::sin(theta(ix(j)));
  }
  a(ix(dim - 1)) = s;
  for (std::size_t j = 1; j < dim; ++j) a(ix(j)) *= std::exp(Complex{0.0, theta(ix(dim - 2 + j))});
  return StateVector(std::move(a));
}

StateVector prepare_pure(const AnsatzSpec &spec, const RVector &theta) {
  if (static_cast<std::size_t>(theta.size()) != spec.parameter_count())
    throw ValidationError(to_string(spec.family) + " ansatz takes " + std::to_string(spec.parameter_count()) +
                          " parameters, got " + std::to_string(theta.size()));
  switch (spec.family) {
  case AnsatzFamily::RawQudit: return raw_qudit_state(spec.dim, theta);
  case AnsatzFamily::WaveplateHea: {
    const std::size_t n = spec.num_qubits;
    CVector v = CVector::Zero(ix(std::size_t{1} << n));
    v(0) = 1.0;
    std::size_t k = 0;
    const CMatrix cnot = pbd_cnot();
    for (const auto &p : spec.plates) {
      if (p.kind == PlateOp::Kind::PBD) {
        const std::array<std::size_t, 2> q{p.qubit, p.target};
        v = embed(cnot, q, n) * v;
      } else {
        const std::array<std::size_t, 1> q{p.qubit};
        const auto kind = p.kind == PlateOp::Kind::HWP ? WaveplateKind::HWP : WaveplateKind::QWP;
        v = embed(waveplate(kind, theta(ix(k++))), q, n) * v;
      }
    }
    return StateVector(std::move(v));
  }
  case AnsatzFamily::MeshPhases: {
    BeamSplitterMesh mesh;
    mesh.mode_count = spec.modes;
    mesh.elements = mesh_layout(spec.modes, MeshLayout::Clements);
    std::size_t k = 0;
    for (auto &e : mesh.elements) {
      e.theta = theta(ix(k++));
      e.phi = theta(ix(k++));
    }
    for (std::size_t m = 0; m < spec.modes; ++m) mesh.output_phases.push_back(theta(ix(k++)));
    const ModeUnitary u = mesh_reconstruct(mesh);
    if (spec.rail_pairs.empty()) return StateVector::normalized(u.col(0));
    FockState in;
    in.occupations.assign(spec.modes, 0);
    for (const auto &pr : spec.rail_pairs) in.occupations[pr.first] = 1;
    return dual_rail_postselect(fock_evolve(u, in), spec.rail_pairs).state;
  }
  case AnsatzFamily::Uccsd: {
    UccsdAmplitudes a;
    a.orbital_count = spec.num_qubits;
    std::size_t k = 0;
    for (const auto &s : spec.singles) a.singles[s] += theta(ix(k++));
    for (const auto &d : spec.doubles) a.doubles[d] += theta(ix(k++));
    return uccsd_state(spec.reference.value_or(0), a);
  }
  }
  throw ValidationError("unknown ansatz family");
}

QuantumState prepare_ansatz(const AnsatzSpec &spec, const RVector &theta, std::span<const NoiseSpec> noise) {
  StateVector psi = prepare_pure(spec, theta);
  if (noise.empty()) return psi;
  return apply_channels(DensityMatrix::from_state(psi), noise);
}

AnsatzSpec resolve_ansatz(const AnsatzSpec &in, const OperatorSum &op) {
  AnsatzSpec s = in;
  const std::size_t k = op.num_qubits();
  const std::size_t d = std::size_t{1} << k;
  switch (s.family) {
  case AnsatzFamily::RawQudit:
    if (s.dim == 0) s.dim = d;
    break;
  case AnsatzFamily::WaveplateHea:
    if (s.num_qubits == 0) s.num_qubits = k;
    if (s.plates.empty()) s.plates = default_plate_layout(s.num_qubits);
    break;
  case AnsatzFamily::MeshPhases:
    if (s.modes == 0) s.modes = s.rail_pairs.empty() ? d : 2 * s.rail_pairs.size();
    break;
  case AnsatzFamily::Uccsd:
    if (s.num_qubits == 0) s.num_qubits = k;
    if (!s.reference) {
      const CMatrix h = op.to_matrix();
      Index best = 0;
      for (Index i = 1; i < h.rows(); ++i)
        if (h(i, i).real() < h(best, best).real() - 1e-12) best = i;
      s.reference = static_cast<std::size_t>(best);
    }
    if (s.singles.empty() && s.doubles.empty()) fill_default_excitations(s);
    break;
  }
  s.validate();
  if (s.state_dim() != d)
    throw ConfigError("ansatz prepares dimension " + std::to_string(s.state_dim()) + " but the operator acts on " +
                      std::to_string(d));
  if (s.parameter_count() == 0) throw ConfigError("ansatz has no parameters");
  return s;
}

// ------------------------------------------------------------ Hamiltonians

std::string default_data_dir() {
  if (const char *env = std::getenv("PVQE_DATA_DIR"); env && *env) return env;
  return PVQE_DEFAULT_DATA_DIR;
}

BuiltHamiltonian build_hamiltonian(const HamiltonianSource &src) {
  const std::string &b = src.builder;
  BuiltHamiltonian out;
  out.label = b;
  if (b == "schwinger") {
    out.op = build_schwinger(src.mass);
  } else if (b == "heisenberg") {
    out.op = build_heisenberg(src.heisenberg[0], src.heisenberg[1], src.heisenberg[2]);
  } else if (b == "factoring") {
    if (src.factor_n != 35) throw ConfigError("factoring supports n = 35 only");
    out.op = build_factoring(src.factor_n, src.factoring_form);
  } else if (b == "operator_file") {
    if (src.path.empty()) throw ConfigError("operator_file needs hamiltonian.path");
    out.op = read_operator_sum(src.path);
  } else if (b == "h2" || b == "hehplus" || b == "lih") {
    if (!src.weights.empty()) {
      if (b == "lih") throw ConfigError("lih needs a coefficient table, not bare weights");
      out.op = b == "h2" ? build_h2(src.weights) : build_hehplus(src.weights);
      return out;
    }
    std::string path = src.coefficients;
    if (path.empty())
      path = default_data_dir() + (b == "h2" ? "/h2_sto3g.txt" : b == "hehplus" ? "/hehplus_sto3g.txt" : "/lih_sto3g.txt");
    const MolecularCoefficients table = load_coefficients(path);
    std::size_t row = src.row.value_or(0);
    if (src.bond_length) {
      bool found = false;
      for (std::size_t i = 0; i < table.rows.size(); ++i)
        if (std::abs(table.rows[i].bond_length - *src.bond_length) < 1e-6) {
          row = i;
          found = true;
        }
      if (!found) throw ConfigError("bond length not in the coefficient table");
    }
    if (row >= table.rows.size()) throw ConfigError("coefficient row out of range");
    out.op = table.hamiltonian(row);
    out.reference_energy = table.rows[row].reference_energy;
    out.label = b + "@" + format_number(table.rows[row].bond_length);
  } else if (b.empty()) {
    throw ConfigError("hamiltonian.builder is required");
  } else {
    throw ConfigError("unknown hamiltonian builder '" + b + "'");
  }
  return out;
}

// ------------------------------------------------------------ config

void VQEConfig::validate(const OperatorSum &op) const {
  const std::size_t k = op.num_qubits();
  if (restarts < 1) throw ConfigError("restarts must be >= 1");
  if (grouping == Grouping::Bell && k != 2) throw ConfigError("bell grouping requires a two-qubit Hamiltonian");
  if (backend == Backend::Sampled && shots.shots_per_group < 1) throw ConfigError("backend.shots must be >= 1");
  for (const auto &n : noise) {
    try {
      n.validate(k);
    } catch (const ValidationError &e) {
      throw ConfigError(e.what());
    }
  }
  if (!(readout_flip >= 0.0 && readout_flip < 0.5)) throw ConfigError("noise.readout_flip must lie in [0, 0.5)");
  if (readout_flip > 0.0 && backend != Backend::Sampled)
    throw ConfigError("readout error needs the sampled backend");
  if (mitigation == Mitigation::Zne) {
    if (noise.empty()) throw ConfigError("zne mitigation needs a noise channel to scale");
    if (zne_epsilons.size() < 2) throw ConfigError("zne needs at least two epsilons");
    for (double e : zne_epsilons)
      if (!(e >= 0.0 && e <= 1.0)) throw ConfigError("zne epsilons must lie in [0, 1]");
    if (std::set<double>(zne_epsilons.begin(), zne_epsilons.end()).size() < 2)
      throw ConfigError("zne epsilons must contain two distinct values");
  }
  if (mitigation == Mitigation::Confusion) {
    if (backend != Backend::Sampled) throw ConfigError("confusion mitigation needs the sampled backend");
    if (calibration_shots < 1) throw ConfigError("mitigation.calibration_shots must be >= 1");
  }
  try {
    optimizer.validate();
  } catch (const ValidationError &e) {
    throw ConfigError(std::string("optimizer: ") + e.what());
  }
}

namespace {

void check_keys(const json &j, const std::string &where, std::initializer_list<const char *> allowed) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto &[key, value] : j.items()) {
    bool ok = false;
    for (const char *a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <class T> void get_to(const json &j, const char *key, T &out, const std::string &where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception &) {
    throw ConfigError(where + "." + key + " has the wrong type");
  }
}

PlateOp::Kind plate_kind(const std::string &s) {
  if (s == "hwp") return PlateOp::Kind::HWP;
  if (s == "qwp") return PlateOp::Kind::QWP;
  if (s == "pbd") return PlateOp::Kind::PBD;
  throw ConfigError("unknown plate kind '" + s + "' (hwp, qwp, pbd)");
}

const char *plate_name(PlateOp::Kind k) {
  return k == PlateOp::Kind::HWP ? "hwp" : k == PlateOp::Kind::QWP ? "qwp" : "pbd";
}

template <class F> auto rethrow_as_config(F &&f) -> decltype(f()) {
  try {
    return f();
  } catch (const ConfigError &) {
    throw;
  } catch (const Error &e) {
    throw ConfigError(e.what());
  }
}

} // namespace

VQEConfig parse_config(const std::string &text, bool require_hamiltonian) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error &e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(root, "config",
             {"hamiltonian", "ansatz", "backend", "noise", "mitigation", "optimizer", "initial_theta", "restarts", "seed"});
  VQEConfig c;
  get_to(root, "seed", c.seed, "config");
  get_to(root, "restarts", c.restarts, "config");
  if (c.restarts < 1) throw ConfigError("restarts must be >= 1");
  if (root.contains("initial_theta")) {
    std::vector<double> t;
    get_to(root, "initial_theta", t, "config");
    c.initial_theta = t;
  }

  if (!root.contains("hamiltonian")) {
    if (require_hamiltonian) throw ConfigError("config needs a hamiltonian section");
  } else {
    const json &h = root["hamiltonian"];
    check_keys(h, "hamiltonian",
               {"builder", "mass", "w", "n", "form", "weights", "coefficients", "row", "bond_length", "path"});
    auto &s = c.hamiltonian;
    get_to(h, "builder", s.builder, "hamiltonian");
    if (s.builder.empty() && require_hamiltonian) throw ConfigError("hamiltonian.builder is required");
    get_to(h, "mass", s.mass, "hamiltonian");
    if (h.contains("w")) {
      std::vector<double> w;
      get_to(h, "w", w, "hamiltonian");
      if (w.size() != 3) throw ConfigError("hamiltonian.w needs three values");
      s.heisenberg = {w[0], w[1], w[2]};
    }
    get_to(h, "n", s.factor_n, "hamiltonian");
    if (h.contains("form")) {
      std::string f;
      get_to(h, "form", f, "hamiltonian");
      if (f == "pauli") s.factoring_form = FactoringForm::Pauli;
      else if (f == "projector") s.factoring_form = FactoringForm::Projector;
      else throw ConfigError("hamiltonian.form must be pauli or projector");
    }
    get_to(h, "weights", s.weights, "hamiltonian");
    get_to(h, "coefficients", s.coefficients, "hamiltonian");
    if (h.contains("row")) {
      std::size_t r = 0;
      get_to(h, "row", r, "hamiltonian");
      s.row = r;
    }
    if (h.contains("bond_length")) {
      double b = 0;
      get_to(h, "bond_length", b, "hamiltonian");
      s.bond_length = b;
    }
    get_to(h, "path", s.path, "hamiltonian");
  }

  if (root.contains("ansatz")) {
    const json &a = root["ansatz"];
    check_keys(a, "ansatz",
               {"family", "dim", "num_qubits", "plates", "modes", "rail_pairs", "reference", "singles", "doubles"});
    auto &s = c.ansatz;
    std::string fam = "raw_qudit";
    get_to(a, "family", fam, "ansatz");
    s.family = rethrow_as_config([&] { return ansatz_family_from_string(fam); });
    get_to(a, "dim", s.dim, "ansatz");
    get_to(a, "num_qubits", s.num_qubits, "ansatz");
    if (a.contains("plates")) {
      if (!a["plates"].is_array()) throw ConfigError("ansatz.plates must be an array");
      for (const auto &p : a["plates"]) {
        check_keys(p, "ansatz.plates[]", {"kind", "qubit", "control", "target"});
        PlateOp op;
        std::string kind;
        get_to(p, "kind", kind, "ansatz.plates[]");
        op.kind = plate_kind(kind);
        get_to(p, "qubit", op.qubit, "ansatz.plates[]");
        get_to(p, "control", op.qubit, "ansatz.plates[]");
        get_to(p, "target", op.target, "ansatz.plates[]");
        s.plates.push_back(op);
      }
    }
    get_to(a, "modes", s.modes, "ansatz");
    get_to(a, "rail_pairs", s.rail_pairs, "ansatz");
    if (a.contains("reference")) {
      std::size_t r = 0;
      get_to(a, "reference", r, "ansatz");
      s.reference = r;
    }
    get_to(a, "singles", s.singles, "ansatz");
    get_to(a, "doubles", s.doubles, "ansatz");
  }

  if (root.contains("backend")) {
    const json &b = root["backend"];
    check_keys(b, "backend", {"kind", "shots", "allocation", "grouping"});
    std::string kind = "exact", alloc = "equal", grouping = "qwc";
    get_to(b, "kind", kind, "backend");
    if (kind == "exact") c.backend = Backend::Exact;
    else if (kind == "sampled") c.backend = Backend::Sampled;
    else throw ConfigError("backend.kind must be exact or sampled");
    get_to(b, "shots", c.shots.shots_per_group, "backend");
    get_to(b, "allocation", alloc, "backend");
    if (alloc == "equal") c.shots.allocation = ShotAllocation::Equal;
    else if (alloc == "weighted") c.shots.allocation = ShotAllocation::Weighted;
    else throw ConfigError("backend.allocation must be equal or weighted");
    get_to(b, "grouping", grouping, "backend");
    c.grouping = rethrow_as_config([&] { return grouping_from_string(grouping); });
  }

  if (root.contains("noise")) {
    const json &n = root["noise"];
    check_keys(n, "noise", {"channels", "readout_flip"});
    get_to(n, "readout_flip", c.readout_flip, "noise");
    if (n.contains("channels")) {
      if (!n["channels"].is_array()) throw ConfigError("noise.channels must be an array");
      for (const auto &ch : n["channels"]) {
        check_keys(ch, "noise.channels[]", {"kind", "strength", "targets"});
        NoiseSpec spec;
        std::string kind;
        get_to(ch, "kind", kind, "noise.channels[]");
        spec.kind = rethrow_as_config([&] { return noise_kind_from_string(kind); });
        get_to(ch, "strength", spec.strength, "noise.channels[]");
        get_to(ch, "targets", spec.targets, "noise.channels[]");
        c.noise.push_back(spec);
      }
    }
  }

  if (root.contains("mitigation")) {
    const json &m = root["mitigation"];
    check_keys(m, "mitigation", {"kind", "epsilons", "calibration_shots"});
    std::string kind = "none";
    get_to(m, "kind", kind, "mitigation");
    if (kind == "none") c.mitigation = Mitigation::None;
    else if (kind == "confusion") c.mitigation = Mitigation::Confusion;
    else if (kind == "zne") c.mitigation = Mitigation::Zne;
    else throw ConfigError("mitigation.kind must be none, confusion or zne");
    get_to(m, "epsilons", c.zne_epsilons, "mitigation");
    get_to(m, "calibration_shots", c.calibration_shots, "mitigation");
  }

  if (root.contains("optimizer")) {
    const json &o = root["optimizer"];
    check_keys(o, "optimizer",
               {"method", "max_iterations", "tolerance", "window", "step_size", "fd_step", "simplex_step",
                "spsa_a", "spsa_c", "spsa_A", "spsa_alpha", "spsa_gamma", "swarm_size", "inertia", "cognitive",
                "social", "lower", "upper", "rho_begin", "rho_end", "rho_max", "qng_alpha", "qng_lambda",
                "qng_spsa", "qfim_step"});
    auto &s = c.optimizer;
    std::string method = to_string(s.method);
    get_to(o, "method", method, "optimizer");
    s.method = rethrow_as_config([&] { return method_from_string(method); });
    get_to(o, "max_iterations", s.max_iterations, "optimizer");
    get_to(o, "tolerance", s.tolerance, "optimizer");
    get_to(o, "window", s.window, "optimizer");
    get_to(o, "step_size", s.step_size, "optimizer");
    get_to(o, "fd_step", s.fd_step, "optimizer");
    get_to(o, "simplex_step", s.simplex_step, "optimizer");
    get_to(o, "spsa_a", s.spsa_a, "optimizer");
    get_to(o, "spsa_c", s.spsa_c, "optimizer");
    get_to(o, "spsa_A", s.spsa_A, "optimizer");
    get_to(o, "spsa_alpha", s.spsa_alpha, "optimizer");
    get_to(o, "spsa_gamma", s.spsa_gamma, "optimizer");
    get_to(o, "swarm_size", s.swarm_size, "optimizer");
    get_to(o, "inertia", s.inertia, "optimizer");
    get_to(o, "cognitive", s.cognitive, "optimizer");
    get_to(o, "social", s.social, "optimizer");
    get_to(o, "lower", s.lower, "optimizer");
    get_to(o, "upper", s.upper, "optimizer");
    get_to(o, "rho_begin", s.rho_begin, "optimizer");
    get_to(o, "rho_end", s.rho_end, "optimizer");
    get_to(o, "rho_max", s.rho_max, "optimizer");
    get_to(o, "qng_alpha", s.qng_alpha, "optimizer");
    get_to(o, "qng_lambda", s.qng_lambda, "optimizer");
    get_to(o, "qng_spsa", s.qng_spsa, "optimizer");
    get_to(o, "qfim_step", s.qfim_step, "optimizer");
  }
  return c;
}

VQEConfig load_config(const std::string &path, bool require_hamiltonian) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), require_hamiltonian);
}

std::string config_to_json(const VQEConfig &c) {
  json j;
  j["seed"] = c.seed;
  j["restarts"] = c.restarts;
  if (c.initial_theta) j["initial_theta"] = *c.initial_theta;
  const auto &h = c.hamiltonian;
  json hj = {{"builder", h.builder}};
  if (h.builder == "schwinger") hj["mass"] = h.mass;
  if (h.builder == "heisenberg") hj["w"] = std::vector<double>(h.heisenberg.begin(), h.heisenberg.end());
  if (h.builder == "factoring") {
    hj["n"] = h.factor_n;
    hj["form"] = h.factoring_form == FactoringForm::Pauli ? "pauli" : "projector";
  }
  if (!h.weights.empty()) hj["weights"] = h.weights;
  if (!h.coefficients.empty()) hj["coefficients"] = h.coefficients;
  if (h.row) hj["row"] = *h.row;
  if (h.bond_length) hj["bond_length"] = *h.bond_length;
  if (!h.path.empty()) hj["path"] = h.path;
  j["hamiltonian"] = hj;

  const auto &a = c.ansatz;
  json aj = {{"family", to_string(a.family)}, {"dim", a.dim}, {"num_qubits", a.num_qubits}, {"modes", a.modes}};
  json plates = json::array();
  for (const auto &p : a.plates) {
    json pj = {{"kind", plate_name(p.kind)}, {"qubit", p.qubit}};
    if (p.kind == PlateOp::Kind::PBD) pj["target"] = p.target;
    plates.push_back(pj);
  }
  aj["plates"] = plates;
  aj["rail_pairs"] = a.rail_pairs;
  if (a.reference) aj["reference"] = *a.reference;
  aj["singles"] = a.singles;
  aj["doubles"] = a.doubles;
  j["ansatz"] = aj;

  j["backend"] = {{"kind", c.backend == Backend::Exact ? "exact" : "sampled"},
                  {"shots", c.shots.shots_per_group},
                  {"allocation", c.shots.allocation == ShotAllocation::Equal ? "equal" : "weighted"},
                  {"grouping", to_string(c.grouping)}};
  json ch = json::array();
  for (const auto &n : c.noise) ch.push_back({{"kind", to_string(n.kind)}, {"strength", n.strength}, {"targets", n.targets}});
  j["noise"] = {{"channels", ch}, {"readout_flip", c.readout_flip}};
  j["mitigation"] = {{"kind", c.mitigation == Mitigation::None     ? "none"
                              : c.mitigation == Mitigation::Zne ? "zne"
                                                                : "confusion"},
                     {"epsilons", c.zne_epsilons},
                     {"calibration_shots", c.calibration_shots}};
  const auto &o = c.optimizer;
  j["optimizer"] = {{"method", to_string(o.method)},
                    {"max_iterations", o.max_iterations},
                    {"tolerance", o.tolerance},
                    {"window", o.window},
                    {"step_size", o.step_size},
                    {"fd_step", o.fd_step},
                    {"simplex_step", o.simplex_step},
                    {"spsa_a", o.spsa_a},
                    {"spsa_c", o.spsa_c},
                    {"spsa_A", o.spsa_A},
                    {"spsa_alpha", o.spsa_alpha},
                    {"spsa_gamma", o.spsa_gamma},
                    {"swarm_size", o.swarm_size},
                    {"inertia", o.inertia},
                    {"cognitive", o.cognitive},
                    {"social", o.social},
                    {"lower", o.lower},
                    {"upper", o.upper},
                    {"rho_begin", o.rho_begin},
                    {"rho_end", o.rho_end},
                    {"rho_max", o.rho_max},
                    {"qng_alpha", o.qng_alpha},
                    {"qng_lambda", o.qng_lambda},
                    {"qng_spsa", o.qng_spsa},
                    {"qfim_step", o.qfim_step}};
  return j.dump(2) + "\n";
}

// ------------------------------------------------------------ objective

EnergyObjective::EnergyObjective(const VQEConfig &cfg, OperatorSum op) : cfg_(cfg), op_(std::move(op)) {
  cfg_.validate(op_);
  cfg_.ansatz = resolve_ansatz(cfg_.ansatz, op_);
  if (cfg_.backend != Backend::Sampled) return;
  groups_ = make_groups(op_, cfg_.grouping);
  const std::size_t k = op_.num_qubits();
  const std::size_t d = std::size_t{1} << k;
  if (cfg_.readout_flip > 0.0) readout_ = bitflip_confusion(k, cfg_.readout_flip);
  if (cfg_.mitigation == Mitigation::Confusion) {
    const auto measure = [&](std::size_t prepared, std::uint64_t shots, std::uint64_t seed) {
      RVector p = RVector::Zero(ix(d));
      p(ix(prepared)) = 1.0;
      Counts c = sample_distribution(p, shots, seed);
      if (readout_) c = apply_confusion(c, *readout_, derive_seed(seed, 1));
      return c;
    };
    confusion_ = calibrate_confusion(measure, d, cfg_.calibration_shots, derive_seed(cfg_.seed, 4));
  }
}

EnergyEval EnergyObjective::evaluate(const RVector &theta, std::span<const NoiseSpec> noise,
                                     std::uint64_t seed) const {
  const QuantumState st = prepare_ansatz(cfg_.ansatz, theta, noise);
  if (cfg_.backend == Backend::Exact) return {expectation_exact(st, op_).real(), 0.0, 0};
  CountsChannel readout;
  if (readout_) {
    const ConfusionMatrix &m = *readout_;
    readout = [&m](const Counts &c, std::uint64_t s) { return apply_confusion(c, m, s); };
  }
  CountsMitigator mitigator;
  if (confusion_) {
    const ConfusionMatrix &m = *confusion_;
    mitigator = [&m](const Counts &c) { return mitigate_counts(c, m).p; };
  }
  const Estimate e = estimate_pauli_sum(st, op_, groups_, cfg_.shots, seed, readout, mitigator);
  return {e.value, e.std_error, e.shots};
}

EnergyEval EnergyObjective::operator()(const RVector &theta) {
  const std::uint64_t seed = derive_seed(derive_seed(cfg_.seed, 3), log_.size());
  EnergyEval out;
  if (cfg_.mitigation == Mitigation::Zne) {
    std::vector<ZnePoint> pts;
    for (std::size_t i = 0; i < cfg_.zne_epsilons.size(); ++i) {
      std::vector<NoiseSpec> noise = cfg_.noise;
      noise.front().strength = cfg_.zne_epsilons[i];
      const EnergyEval e = evaluate(theta, noise, derive_seed(seed, i));
      pts.push_back({cfg_.zne_epsilons[i], e.value, e.std_error});
      out.shots += e.shots;
    }
    const ZneResult r = zne_extrapolate(pts);
    out.value = r.value;
    out.std_error = r.std_error;
  } else {
    out = evaluate(theta, cfg_.noise, seed);
  }
  log_.push_back(out);
  return out;
}

EnergyEval EnergyObjective::at_strength(const RVector &theta, double epsilon) {
  if (cfg_.noise.empty()) throw ConfigError("no noise channel to rescale");
  std::vector<NoiseSpec> noise = cfg_.noise;
  noise.front().strength = epsilon;
  return evaluate(theta, noise, derive_seed(derive_seed(cfg_.seed, 5), extra_calls_++));
}

// ------------------------------------------------------------ run

VQETrace run_vqe(const VQEConfig &cfg) {
  const BuiltHamiltonian h = build_hamiltonian(cfg.hamiltonian);
  VQETrace t = run_vqe(cfg, h.op);
  t.table_reference = h.reference_energy;
  return t;
}

VQETrace run_vqe(const VQEConfig &cfg, const OperatorSum &op) {
  EnergyObjective obj(cfg, op);
  const AnsatzSpec spec = resolve_ansatz(cfg.ansatz, op);
  const std::size_t np = spec.parameter_count();
  if (cfg.initial_theta && cfg.initial_theta->size() != np)
    throw ConfigError("initial_theta has " + std::to_string(cfg.initial_theta->size()) + " entries, ansatz takes " +
                      std::to_string(np));
  const Objective f = [&obj](const RVector &th) { return obj(th).value; };
  const StateFn state = [&spec](const RVector &th) { return prepare_pure(spec, th); };

  VQETrace t;
  std::size_t offset = 0;
  for (std::size_t r = 0; r < cfg.restarts; ++r) {
    RVector theta0(ix(np));
    if (r == 0 && cfg.initial_theta) {
      for (std::size_t i = 0; i < np; ++i) theta0(ix(i)) = (*cfg.initial_theta)[i];
    } else {
      std::mt19937_64 rng(r == 0 ? derive_seed(cfg.seed, 1) : derive_seed(derive_seed(cfg.seed, 6), r));
      std::uniform_real_distribution<double> u(0.0, 2.0 * std::numbers::pi);
      for (std::size_t i = 0; i < np; ++i) theta0(ix(i)) = u(rng);
    }
    OptimizerConfig ocfg = cfg.optimizer;
    ocfg.seed = r == 0 ? derive_seed(cfg.seed, 2) : derive_seed(derive_seed(cfg.seed, 7), r);
    OptTrace run = ocfg.method == Method::Qng ? minimize_qng(f, state, theta0, ocfg) : minimize(f, theta0, ocfg);
    t.total_iterations += run.records.empty() ? 0 : run.records.size() - 1;
    t.total_evaluations += run.evaluations;
    const bool better = r == 0 || run.best_value < t.opt.best_value;
    if (better) {
      t.opt = std::move(run);
      t.winning_start = r;
      const auto &log = obj.log();
      std::vector<std::uint64_t> prefix(log.size() + 1, 0);
      for (std::size_t i = 0; i < log.size(); ++i) prefix[i + 1] = prefix[i] + log[i].shots;
      t.std_errors.clear();
      t.cumulative_shots.clear();
      for (const auto &rec : t.opt.records) {
        const std::size_t k = offset + rec.eval_index;
        t.std_errors.push_back(k < log.size() ? log[k].std_error : 0.0);
        t.cumulative_shots.push_back(prefix[std::min(offset + rec.evaluations, log.size())]);
      }
    }
    offset = obj.calls();
    if (t.opt.status == OptStatus::NanAbort) break;
  }
  t.final_energy = t.opt.best_value;
  t.final_theta = t.opt.best_theta;
  t.exact_reference = ground_energy(op);
  t.status = t.opt.status;
  return t;
}

std::string format_vqe_trace_csv(const VQETrace &t) {
  CsvTable table;
  table.header = {"iter", "value", "stderr", "shots", "evals"};
  const Index n = t.opt.records.empty() ? 0 : t.opt.records.front().theta.size();
  for (Index j = 0; j < n; ++j) table.header.push_back("theta" + std::to_string(j));
  for (std::size_t i = 0; i < t.opt.records.size(); ++i) {
    const auto &r = t.opt.records[i];
    std::vector<std::string> row{std::to_string(r.iteration), format_number(r.value), format_number(t.std_errors[i]),
                                 std::to_string(t.cumulative_shots[i]), std::to_string(r.evaluations)};
    for (Index j = 0; j < n; ++j) row.push_back(format_number(r.theta(j)));
    table.add_row(std::move(row));
  }
  return table.str();
}

std::size_t worker_count() {
  if (const char *env = std::getenv("PVQE_WORKERS"); env && *env) {
    char *end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

} // namespace pvqe
