#include "pvqe/cli.hpp"

#include "pvqe/driver.hpp"
#include "pvqe/error.hpp"
#include "pvqe/linopt.hpp"
#include "pvqe/rng.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#ifndef PVQE_VERSION
#define PVQE_VERSION "0.0.0"
#endif

namespace pvqe {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string version_string() { return PVQE_VERSION; }

std::string RunManifest::to_json() const {
  json j = {{"command", command}, {"config", config_path}, {"seed", seed},
            {"out", out_dir},     {"version", version},    {"timestamp", timestamp}};
  return j.dump(2) + "\n";
}

namespace {

void write_file(const std::string &path, const std::string &text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write " + path);
  os << text;
  if (!os) throw Error("write failed for " + path);
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct Common {
  std::string config;
  std::uint64_t seed = 42;
  std::string out = ".";
  std::size_t max_iterations = 0; // 0 keeps the subcommand default
};

void prepare_out(const Common &c) {
  std::error_code ec;
  fs::create_directories(c.out, ec);
  if (ec) throw Error("cannot create output directory " + c.out + ": " + ec.message());
}

std::string out_path(const Common &c, const std::string &name) { return (fs::path(c.out) / name).string(); }

void write_manifest(const Common &c, const std::string &command) {
  RunManifest m{command, c.config, c.seed, c.out, version_string(), utc_now()};
  write_file(out_path(c, "manifest.json"), m.to_json());
}

VQEConfig sweep_template(const Common &c) {
  VQEConfig cfg = c.config.empty() ? VQEConfig{} : load_config(c.config, false);
  return cfg;
}

std::string bitstring(std::size_t index, std::size_t n) {
  std::string s(n, '0');
  for (std::size_t q = 0; q < n; ++q)
    if ((index >> (n - 1 - q)) & 1) s[q] = '1';
  return s;
}

// ------------------------------------------------------------ dissociation

struct DissociationArgs {
  std::string molecule = "H2";
  std::string coefficients;
};

int run_dissociation(const Common &c, const DissociationArgs &a, std::ostream &out) {
  std::string builder;
  const MoleculeModel model = [&] {
    try {
      return molecule_model_from_string(a.molecule);
    } catch (const Error &e) {
      throw ConfigError(e.what());
    }
  }();
  builder = model == MoleculeModel::H2 ? "h2" : model == MoleculeModel::HeHPlus ? "hehplus" : "lih";
  std::string path = a.coefficients;
  if (path.empty()) path = default_data_dir() + "/" + (builder == "hehplus" ? "hehplus" : builder) + "_sto3g.txt";
  const MolecularCoefficients table = load_coefficients(path);

  VQEConfig base = sweep_template(c);
  if (c.config.empty()) {
    base.ansatz.family = model == MoleculeModel::H2 ? AnsatzFamily::Uccsd : AnsatzFamily::RawQudit;
    if (model == MoleculeModel::LiH) {
      base.optimizer.method = Method::Qng;
      base.optimizer.max_iterations = 2000;
      base.optimizer.window = 100;
    } else {
      base.optimizer.method = Method::Cobyla;
      base.optimizer.max_iterations = 500;
      base.restarts = model == MoleculeModel::HeHPlus ? 3 : 1;
    }
  }
  base.hamiltonian = HamiltonianSource{};
  base.hamiltonian.builder = builder;
  base.hamiltonian.coefficients = path;
  if (c.max_iterations) base.optimizer.max_iterations = c.max_iterations;

  struct Row {
    double bond, vqe, exact;
    std::optional<double> table;
  };
  const std::function<Row(std::size_t)> point = [&](std::size_t i) {
    VQEConfig cfg = base;
    cfg.hamiltonian.row = i;
    cfg.seed = derive_seed(c.seed, i);
    const VQETrace t = run_vqe(cfg);
    return Row{table.rows[i].bond_length, t.final_energy, t.exact_reference, t.table_reference};
  };
  const auto rows = parallel_sweep<Row>(table.rows.size(), point);

  CsvTable csv;
  csv.header = {"bond_length", "E_vqe", "E_exact", "abs_error", "E_table"};
  double worst = 0.0;
  for (const auto &r : rows) {
    worst = std::max(worst, std::abs(r.vqe - r.exact));
    csv.add_row({format_number(r.bond), format_number(r.vqe), format_number(r.exact),
                 format_number(std::abs(r.vqe - r.exact)), r.table ? format_number(*r.table) : ""});
  }
  emit_curve(csv, out_path(c, "dissociation.csv"));
  out << "dissociation " << to_string(model) << ": " << rows.size() << " points, max |E_vqe - E_exact| = "
      << format_number(worst) << "\n";
  return 0;
}

// ------------------------------------------------------------ schwinger

struct SchwingerArgs {
  double m_min = -2.0;
  double m_max = 2.0;
  std::size_t steps = 9;
  std::string backend = "exact";
  std::uint64_t shots = 1000;
  std::string grouping = "qwc";
  std::string noise;
  double epsilon = 0.1;
  std::vector<double> zne;
};

int run_schwinger(const Common &c, const SchwingerArgs &a, std::ostream &out) {
  if (a.steps < 1) throw ConfigError("--steps must be >= 1");
  VQEConfig base = sweep_template(c);
  if (c.config.empty()) {
    base.ansatz.family = AnsatzFamily::RawQudit;
    base.optimizer.method = Method::NelderMead;
    base.optimizer.max_iterations = 160;
    base.restarts = 3;
    if (a.backend == "exact") base.backend = Backend::Exact;
    else if (a.backend == "sampled") base.backend = Backend::Sampled;
    else throw ConfigError("--backend must be exact or sampled");
    base.shots.shots_per_group = a.shots;
    try {
      base.grouping = grouping_from_string(a.grouping);
    } catch (const Error &e) {
      throw ConfigError(e.what());
    }
    if (!a.noise.empty()) {
      NoiseSpec n;
      try {
        n.kind = noise_kind_from_string(a.noise);
      } catch (const Error &e) {
        throw ConfigError(e.what());
      }
      n.strength = a.epsilon;
      base.noise = {n};
    }
    if (!a.zne.empty()) {
      base.mitigation = Mitigation::Zne;
      base.zne_epsilons = a.zne;
    }
  }
  if (c.max_iterations) base.optimizer.max_iterations = c.max_iterations;
  base.hamiltonian = HamiltonianSource{};
  base.hamiltonian.builder = "schwinger";
  const bool noisy = !base.noise.empty();

  struct Row {
    double m, vqe, exact, raw;
  };
  const std::function<Row(std::size_t)> point = [&](std::size_t i) {
    const double m = a.steps == 1 ? a.m_min
                                  : a.m_min + (a.m_max - a.m_min) * static_cast<double>(i) /
                                                  static_cast<double>(a.steps - 1);
    VQEConfig cfg = base;
    cfg.hamiltonian.mass = m;
    cfg.seed = derive_seed(c.seed, i);
    const OperatorSum op = build_schwinger(m);
    const VQETrace t = run_vqe(cfg, op);
    double raw = 0.0;
    if (noisy) {
      EnergyObjective probe(cfg, op);
      raw = probe.at_strength(t.final_theta, cfg.noise.front().strength).value;
    }
    return Row{m, t.final_energy, schwinger_exact_levels(m)[0], raw};
  };
  const auto rows = parallel_sweep<Row>(a.steps, point);

  CsvTable csv;
  csv.header = {"m", "E_vqe", "E_exact"};
  if (noisy) csv.header.push_back("E_raw");
  double worst = 0.0;
  for (const auto &r : rows) {
    worst = std::max(worst, std::abs(r.vqe - r.exact));
    if (noisy) csv.add_numbers({r.m, r.vqe, r.exact, r.raw});
    else csv.add_numbers({r.m, r.vqe, r.exact});
  }
  emit_curve(csv, out_path(c, "schwinger.csv"));
  out << "schwinger: " << rows.size() << " masses, max |E_vqe - E_exact| = " << format_number(worst) << "\n";
  return 0;
}

// ------------------------------------------------------------ factor

struct FactorArgs {
  long n = 35;
  std::uint64_t shots = 10000;
};

int run_factor(const Common &c, const FactorArgs &a, std::ostream &out) {
  VQEConfig cfg = sweep_template(c);
  if (c.config.empty()) {
    cfg.ansatz.family = AnsatzFamily::WaveplateHea;
    cfg.backend = Backend::Sampled;
    cfg.shots.shots_per_group = a.shots;
    cfg.optimizer.method = Method::Cobyla;
    cfg.optimizer.max_iterations = 300;
  }
  if (c.max_iterations) cfg.optimizer.max_iterations = c.max_iterations;
  cfg.hamiltonian = HamiltonianSource{};
  cfg.hamiltonian.builder = "factoring";
  cfg.hamiltonian.factor_n = a.n;
  cfg.seed = c.seed;
  const VQETrace t = run_vqe(cfg);

  const OperatorSum op = build_hamiltonian(cfg.hamiltonian).op;
  const AnsatzSpec spec = resolve_ansatz(cfg.ansatz, op);
  const StateVector psi = prepare_pure(spec, t.final_theta);
  const std::size_t nq = op.num_qubits();
  json probs = json::object();
  json dominant = json::array();
  json factors = json::array();
  for (std::size_t k = 0; k < psi.dim(); ++k) {
    const double p = std::norm(psi.amplitudes()(static_cast<Eigen::Index>(k)));
    const std::string b = bitstring(k, nq);
    probs[b] = p;
    if (p > 0.05) {
      dominant.push_back(b);
      json f = json::array();
      for (char ch : b) f.push_back(ch == '0' ? 5 : 7);
      factors.push_back(f);
    }
  }
  json j = {{"n", a.n},
            {"shots", cfg.shots.shots_per_group},
            {"energy", t.final_energy},
            {"energy_exact", expectation_exact(psi, op).real()},
            {"ground_energy", t.exact_reference},
            {"iterations", t.opt.records.size() - 1},
            {"status", to_string(t.status)},
            {"probabilities", probs},
            {"dominant", dominant},
            {"factors", factors}};
  write_file(out_path(c, "factor.json"), j.dump(2) + "\n");
  out << j.dump(2) << "\n";
  return 0;
}

// ------------------------------------------------------------ mesh

struct MeshArgs {
  std::size_t modes = 8;
  std::size_t samples = 50;
  double transmission = 0.99;
  std::string unitary;
};

int run_mesh(const Common &c, const MeshArgs &a, std::ostream &out) {
  if (!a.unitary.empty()) {
    const ModeUnitary u = read_mode_unitary(a.unitary);
    CsvTable csv;
    csv.header = {"layout", "elements", "depth", "residual", "loss_fidelity"};
    for (MeshLayout layout : {MeshLayout::Clements, MeshLayout::Reck}) {
      const BeamSplitterMesh mesh = decompose(u, layout);
      const std::string name = layout == MeshLayout::Clements ? "clements" : "reck";
      write_file(out_path(c, "mesh_" + name + ".txt"), format_mesh(mesh));
      csv.add_row({name, std::to_string(mesh.elements.size()), std::to_string(mesh_depth(mesh)),
                   format_number((mesh_reconstruct(mesh) - u).norm()),
                   format_number(mesh_fidelity(u, mesh_with_loss(mesh, a.transmission)))});
    }
    emit_curve(csv, out_path(c, "mesh.csv"));
    out << csv.str();
    return 0;
  }
  if (a.modes < 2 || a.modes > kMaxModes) throw ConfigError("--modes must lie in [2, 8]");
  if (a.samples < 1) throw ConfigError("--samples must be >= 1");
  if (!(a.transmission > 0.0 && a.transmission <= 1.0)) throw ConfigError("--transmission must lie in (0, 1]");

  struct Row {
    double f_clements, f_reck, r_clements, r_reck;
  };
  const std::function<Row(std::size_t)> point = [&](std::size_t i) {
    std::mt19937_64 rng(derive_seed(c.seed, i));
    const ModeUnitary u = haar_unitary(a.modes, rng);
    const BeamSplitterMesh mc = clements_decompose(u);
    const BeamSplitterMesh mr = reck_decompose(u);
    return Row{mesh_fidelity(u, mesh_with_loss(mc, a.transmission)),
               mesh_fidelity(u, mesh_with_loss(mr, a.transmission)), (mesh_reconstruct(mc) - u).norm(),
               (mesh_reconstruct(mr) - u).norm()};
  };
  const auto rows = parallel_sweep<Row>(a.samples, point);

  CsvTable csv;
  csv.header = {"sample", "F_clements", "F_reck", "residual_clements", "residual_reck"};
  Row mean{0, 0, 0, 0};
  const double n = static_cast<double>(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto &r = rows[i];
    csv.add_row({std::to_string(i), format_number(r.f_clements), format_number(r.f_reck),
                 format_number(r.r_clements), format_number(r.r_reck)});
    mean.f_clements += r.f_clements / n;
    mean.f_reck += r.f_reck / n;
    mean.r_clements = std::max(mean.r_clements, r.r_clements);
    mean.r_reck = std::max(mean.r_reck, r.r_reck);
  }
  csv.add_row({"mean", format_number(mean.f_clements), format_number(mean.f_reck), format_number(mean.r_clements),
               format_number(mean.r_reck)});
  emit_curve(csv, out_path(c, "mesh.csv"));
  out << "mesh M=" << a.modes << " t=" << format_number(a.transmission) << ": mean fidelity clements "
      << format_number(mean.f_clements) << ", reck " << format_number(mean.f_reck) << "\n";
  return 0;
}

// ------------------------------------------------------------ calibrate

struct CalibrateArgs {
  std::size_t qubits = 2;
  double flip = 0.0;
  std::uint64_t shots = 100000;
};

int run_calibrate(const Common &c, const CalibrateArgs &a, std::ostream &out) {
  if (a.qubits < 1 || a.qubits > kMaxDenseQubits) throw ConfigError("--qubits must lie in [1, 8]");
  if (!(a.flip >= 0.0 && a.flip < 0.5)) throw ConfigError("--flip must lie in [0, 0.5)");
  if (a.shots < 1) throw ConfigError("--shots must be >= 1");
  const std::size_t d = std::size_t{1} << a.qubits;
  const ConfusionMatrix truth = bitflip_confusion(a.qubits, a.flip);
  const auto measure = [&](std::size_t prepared, std::uint64_t shots, std::uint64_t seed) {
    RVector p = RVector::Zero(static_cast<Eigen::Index>(d));
    p(static_cast<Eigen::Index>(prepared)) = 1.0;
    return apply_confusion(sample_distribution(p, shots, seed), truth, derive_seed(seed, 1));
  };
  const ConfusionMatrix m = calibrate_confusion(measure, d, a.shots, c.seed);
  write_file(out_path(c, "confusion.csv"), format_confusion_csv(m));
  out << "calibrated " << d << "x" << d << " confusion matrix, condition number "
      << format_number(m.condition_number()) << ", max deviation from model "
      << format_number((m.entries() - truth.entries()).cwiseAbs().maxCoeff()) << "\n";
  return 0;
}

// ------------------------------------------------------------ run

int run_config(const Common &c, std::ostream &out) {
  if (c.config.empty()) throw ConfigError("run needs --config");
  VQEConfig cfg = load_config(c.config);
  cfg.seed = c.seed;
  if (c.max_iterations) cfg.optimizer.max_iterations = c.max_iterations;
  const VQETrace t = run_vqe(cfg);
  write_file(out_path(c, "trace.csv"), format_vqe_trace_csv(t));
  json j = {{"final_energy", t.final_energy},
            {"final_stderr", t.std_errors.empty() ? 0.0 : t.std_errors.back()},
            {"exact_reference", t.exact_reference},
            {"iterations", t.opt.records.size() - 1},
            {"evaluations", t.opt.evaluations},
            {"shots", t.cumulative_shots.empty() ? 0 : t.cumulative_shots.back()},
            {"status", to_string(t.status)},
            {"final_theta", std::vector<double>(t.final_theta.data(), t.final_theta.data() + t.final_theta.size())}};
  j["table_reference"] = t.table_reference ? json(*t.table_reference) : json(nullptr);
  write_file(out_path(c, "summary.json"), j.dump(2) + "\n");
  out << "run: E = " << format_number(t.final_energy) << " (exact " << format_number(t.exact_reference) << "), "
      << to_string(t.status) << "\n";
  return 0;
}

} // namespace

void emit_curve(const CsvTable &table, const std::string &path) { write_file(path, table.str()); }

int dispatch(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  CLI::App app{"Photonic VQE simulator", "pvqe"};
  app.set_version_flag("--version", version_string());
  app.require_subcommand(1);
  app.fallthrough();

  Common common;
  app.add_option("--config", common.config, "VQEConfig JSON file (template for sweeps)");
  app.add_option("--seed", common.seed, "master seed")->capture_default_str();
  app.add_option("--out", common.out, "output directory")->capture_default_str();
  app.add_option("--max-iterations", common.max_iterations, "override the optimizer iteration cap");

  DissociationArgs dis;
  auto *dis_cmd = app.add_subcommand("dissociation", "energy curve over a bundled coefficient table");
  dis_cmd->add_option("--molecule", dis.molecule, "H2, HeH+ or LiH")->capture_default_str();
  dis_cmd->add_option("--coefficients", dis.coefficients, "coefficient table (default: bundled)");

  SchwingerArgs sw;
  auto *sw_cmd = app.add_subcommand("schwinger", "mass sweep of the two-qubit Schwinger model");
  sw_cmd->add_option("--m-min", sw.m_min)->capture_default_str();
  sw_cmd->add_option("--m-max", sw.m_max)->capture_default_str();
  sw_cmd->add_option("--steps", sw.steps)->capture_default_str();
  sw_cmd->add_option("--backend", sw.backend, "exact or sampled")->capture_default_str();
  sw_cmd->add_option("--shots", sw.shots, "shots per group")->capture_default_str();
  sw_cmd->add_option("--grouping", sw.grouping, "qwc, gc or bell")->capture_default_str();
  sw_cmd->add_option("--noise", sw.noise, "dephasing, depolarizing or white");
  sw_cmd->add_option("--epsilon", sw.epsilon, "noise strength")->capture_default_str();
  sw_cmd->add_option("--zne", sw.zne, "extrapolate over these noise strengths")->delimiter(',');

  FactorArgs fa;
  auto *fa_cmd = app.add_subcommand("factor", "factor n = 35 by sampled VQE on wave plates");
  fa_cmd->add_option("--n", fa.n)->capture_default_str();
  fa_cmd->add_option("--shots", fa.shots, "shots per group")->capture_default_str();

  MeshArgs me;
  auto *me_cmd = app.add_subcommand("mesh", "Reck and Clements decomposition and loss study");
  me_cmd->add_option("--modes", me.modes)->capture_default_str();
  me_cmd->add_option("--samples", me.samples)->capture_default_str();
  me_cmd->add_option("--transmission", me.transmission, "per-element power transmission")->capture_default_str();
  me_cmd->add_option("--unitary", me.unitary, "decompose this unitary file instead of random samples");

  CalibrateArgs ca;
  auto *ca_cmd = app.add_subcommand("calibrate", "estimate a bit-flip confusion matrix");
  ca_cmd->add_option("--qubits", ca.qubits)->capture_default_str();
  ca_cmd->add_option("--flip", ca.flip, "per-qubit flip probability")->capture_default_str();
  ca_cmd->add_option("--shots", ca.shots, "shots per basis state")->capture_default_str();

  auto *run_cmd = app.add_subcommand("run", "run one VQEConfig file");

  std::vector<std::string> argv_store{"pvqe"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char *> argv;
  for (const auto &s : argv_store) argv.push_back(s.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp &) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForVersion &) {
    out << version_string() << "\n";
    return 0;
  } catch (const CLI::ParseError &e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  std::string command;
  try {
    prepare_out(common);
    int rc = 0;
    if (dis_cmd->parsed()) command = "dissociation", rc = run_dissociation(common, dis, out);
    else if (sw_cmd->parsed()) command = "schwinger", rc = run_schwinger(common, sw, out);
    else if (fa_cmd->parsed()) command = "factor", rc = run_factor(common, fa, out);
    else if (me_cmd->parsed()) command = "mesh", rc = run_mesh(common, me, out);
    else if (ca_cmd->parsed()) command = "calibrate", rc = run_calibrate(common, ca, out);
    else if (run_cmd->parsed()) command = "run", rc = run_config(common, out);
    if (rc == 0) write_manifest(common, command);
    return rc;
  } catch (const ConfigError &e) {
    err << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

} // namespace pvqe
