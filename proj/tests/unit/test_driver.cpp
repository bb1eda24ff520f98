#include "pvqe/driver.hpp"

#include "pvqe/error.hpp"
#include "pvqe/linopt.hpp"

#include "helpers.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace pvqe;

namespace {

const double kPi = std::numbers::pi;

RVector zeros(std::size_t n) { return RVector::Zero(static_cast<Eigen::Index>(n)); }

/// Hyperspherical angles and relative phases of a target state.
RVector raw_angles(const StateVector &psi) {
  const std::size_t d = psi.dim();
  RVector t = zeros(2 * d - 2);
  double rest = 1.0;
  for (std::size_t j = 0; j + 1 < d; ++j) {
    const double a = std::abs(psi[j]);
    t(static_cast<Eigen::Index>(j)) = rest > 1e-15 ? std::acos(std::clamp(a / rest, -1.0, 1.0)) : 0.0;
    rest = std::sqrt(std::max(0.0, rest * rest - a * a));
  }
  const double ref = std::arg(psi[0]);
  for (std::size_t j = 1; j < d; ++j) t(static_cast<Eigen::Index>(d - 2 + j)) = std::arg(psi[j]) - ref;
  return t;
}

VQEConfig exact_config(const std::string &builder) {
  VQEConfig c;
  c.hamiltonian.builder = builder;
  c.optimizer.method = Method::Cobyla;
  c.optimizer.max_iterations = 300;
  return c;
}

} // namespace

TEST(Ansatz, RawQuditBasics) {
  const StateVector s = raw_qudit_state(2, zeros(2));
  EXPECT_NEAR(std::abs(s[0]), 1.0, 1e-15);
  RVector t = zeros(2);
  t(0) = kPi / 2;
  EXPECT_NEAR(std::abs(raw_qudit_state(2, t)[1]), 1.0, 1e-15);
  EXPECT_THROW(raw_qudit_state(3, zeros(3)), ValidationError);
  AnsatzSpec a;
  a.dim = 4;
  EXPECT_EQ(a.parameter_count(), 6u);
}

TEST(Ansatz, RawQuditReachesHaarStates) {
  std::mt19937_64 rng(51);
  for (int k = 0; k < 100; ++k) {
    const StateVector target = test::random_state(4, rng);
    const StateVector got = raw_qudit_state(4, raw_angles(target));
    EXPECT_NEAR(fidelity(got, target), 1.0, 1e-10);
  }
}

TEST(Ansatz, WaveplateCircuitMakesBell) {
  AnsatzSpec a;
  a.family = AnsatzFamily::WaveplateHea;
  a.num_qubits = 2;
  a.plates = {{PlateOp::Kind::HWP, 0, 0}, {PlateOp::Kind::PBD, 0, 1}};
  EXPECT_EQ(a.parameter_count(), 1u);
  RVector t(1);
  t << kPi / 8;
  const StateVector s = prepare_pure(a, t);
  EXPECT_NEAR(s[0].real(), 1.0 / std::sqrt(2.0), 1e-14);
  EXPECT_NEAR(s[3].real(), 1.0 / std::sqrt(2.0), 1e-14);

  a.plates = default_plate_layout(2);
  EXPECT_EQ(a.parameter_count(), 8u);
  EXPECT_NEAR(std::abs(prepare_pure(a, zeros(8))[0]), 1.0, 1e-14);
  EXPECT_THROW(prepare_pure(a, zeros(3)), ValidationError);
}

TEST(Ansatz, MeshPathQuditIsFirstColumn) {
  AnsatzSpec a;
  a.family = AnsatzFamily::MeshPhases;
  a.modes = 3;
  std::mt19937_64 rng(52);
  std::uniform_real_distribution<double> u(-kPi, kPi);
  RVector t(static_cast<Eigen::Index>(a.parameter_count()));
  for (auto &x : t) x = u(rng);
  BeamSplitterMesh mesh;
  mesh.mode_count = 3;
  mesh.elements = mesh_layout(3, MeshLayout::Clements);
  Eigen::Index k = 0;
  for (auto &e : mesh.elements) {
    e.theta = t(k++);
    e.phi = t(k++);
  }
  for (int m = 0; m < 3; ++m) mesh.output_phases.push_back(t(k++));
  const CVector col = mesh_reconstruct(mesh).col(0);
  EXPECT_NEAR(std::abs(col.dot(prepare_pure(a, t).amplitudes())), 1.0, 1e-12);

  a.modes = 4;
  a.rail_pairs = {{0, 1}, {2, 3}};
  RVector z = zeros(a.parameter_count());
  const StateVector s = prepare_pure(a, z);
  EXPECT_EQ(s.dim(), 4u);
  EXPECT_NEAR(std::abs(s[0]), 1.0, 1e-12);
}

TEST(Ansatz, UccsdZeroIsReference) {
  BuiltHamiltonian h = build_hamiltonian({.builder = "h2", .row = 4});
  AnsatzSpec a;
  a.family = AnsatzFamily::Uccsd;
  const AnsatzSpec r = resolve_ansatz(a, h.op);
  ASSERT_TRUE(r.reference.has_value());
  const CMatrix m = h.op.to_matrix();
  Eigen::Index best = 0;
  m.diagonal().real().minCoeff(&best);
  EXPECT_EQ(*r.reference, static_cast<std::size_t>(best));
  const StateVector s = prepare_pure(r, zeros(r.parameter_count()));
  EXPECT_NEAR(std::abs(s[*r.reference]), 1.0, 1e-14);
}

TEST(Ansatz, NoisyPreparationIsMixed) {
  AnsatzSpec a;
  a.dim = 4;
  const std::vector<NoiseSpec> noise = {{NoiseKind::White, 0.5, {}}};
  const QuantumState s = prepare_ansatz(a, zeros(6), noise);
  ASSERT_TRUE(std::holds_alternative<DensityMatrix>(s));
  // White noise halves the expectation of a traceless operator.
  const OperatorSum zz = build_heisenberg(0, 0, 1);
  EXPECT_NEAR(expectation_exact(s, zz).real(), 0.5, 1e-14);
  EXPECT_TRUE(std::holds_alternative<StateVector>(prepare_ansatz(a, zeros(6))));
}

TEST(Hamiltonian, BuildersAndErrors) {
  EXPECT_EQ(build_hamiltonian({.builder = "schwinger", .mass = 0.5}).op.to_matrix(),
            build_schwinger(0.5).to_matrix());
  const BuiltHamiltonian by_bond = build_hamiltonian({.builder = "hehplus", .bond_length = 0.9});
  ASSERT_TRUE(by_bond.reference_energy.has_value());
  EXPECT_NEAR(ground_energy(by_bond.op), *by_bond.reference_energy, 1e-6);
  EXPECT_THROW(build_hamiltonian({.builder = "hehplus", .bond_length = 0.93}), ConfigError);
  EXPECT_THROW(build_hamiltonian({.builder = "benzene"}), ConfigError);
  EXPECT_THROW(build_hamiltonian({.builder = "factoring", .factor_n = 21}), Error);
}

TEST(Config, ParseValidateAndDump) {
  const std::string text = R"({
    "hamiltonian": {"builder": "schwinger", "mass": 0.25},
    "ansatz": {"family": "raw_qudit"},
    "backend": {"kind": "sampled", "shots": 2000, "grouping": "gc"},
    "optimizer": {"method": "nelder_mead", "max_iterations": 50},
    "restarts": 2,
    "seed": 9
  })";
  const VQEConfig c = parse_config(text);
  EXPECT_EQ(c.hamiltonian.mass, 0.25);
  EXPECT_EQ(c.backend, Backend::Sampled);
  EXPECT_EQ(c.grouping, Grouping::GC);
  EXPECT_EQ(c.shots.shots_per_group, 2000u);
  EXPECT_EQ(c.optimizer.method, Method::NelderMead);
  EXPECT_EQ(c.restarts, 2u);
  const VQEConfig again = parse_config(config_to_json(c));
  EXPECT_EQ(config_to_json(again), config_to_json(c));

  EXPECT_THROW(parse_config(R"({"hamiltonian": {"builder": "h2"}, "sedd": 1})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"hamiltonian": {"builder": "h2", "mas": 1}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"hamiltonian": {"builder": "h2"}, "seed": "x"})"), ConfigError);
  EXPECT_THROW(parse_config("{not json"), ConfigError);
  EXPECT_THROW(parse_config(R"({"seed": 1})"), ConfigError);
  EXPECT_NO_THROW(parse_config(R"({"seed": 1})", false));
}

TEST(Config, CrossFieldChecks) {
  const OperatorSum op = build_schwinger(0.0);
  VQEConfig c = exact_config("schwinger");
  c.validate(op);
  c.readout_flip = 0.1;
  EXPECT_THROW(c.validate(op), ConfigError);
  c.backend = Backend::Sampled;
  EXPECT_NO_THROW(c.validate(op));
  c.mitigation = Mitigation::Zne;
  EXPECT_THROW(c.validate(op), ConfigError);
  c.noise = {{NoiseKind::White, 0.1, {}}};
  c.zne_epsilons = {0.1, 0.1};
  EXPECT_THROW(c.validate(op), ConfigError);
  c.zne_epsilons = {0.1, 0.2};
  EXPECT_NO_THROW(c.validate(op));
  c.restarts = 0;
  EXPECT_THROW(c.validate(op), ConfigError);
  c.restarts = 1;
  c.grouping = Grouping::Bell;
  EXPECT_NO_THROW(c.validate(op));
}

TEST(Objective, ExactAndSampledOnEigenstates) {
  VQEConfig c = exact_config("heisenberg");
  c.ansatz.dim = 4;
  CVector singlet(4);
  singlet << 0, 1, -1, 0;
  const RVector t = raw_angles(StateVector::normalized(singlet));
  EnergyObjective exact(c, build_heisenberg(1, 1, 1));
  EXPECT_NEAR(exact(t).value, -3.0, 1e-12);
  EXPECT_EQ(exact(t).std_error, 0.0);

  c.backend = Backend::Sampled;
  c.grouping = Grouping::Bell;
  c.shots.shots_per_group = 500;
  EnergyObjective bell(c, build_heisenberg(1, 1, 1));
  EXPECT_EQ(bell.groups().size(), 1u);
  const EnergyEval e = bell(t);
  EXPECT_NEAR(e.value, -3.0, 1e-12);
  EXPECT_NEAR(e.std_error, 0.0, 1e-12);
  EXPECT_EQ(e.shots, 500u);
  EXPECT_EQ(bell.calls(), 1u);
}

TEST(Objective, VariationalBoundAndGroupingIndependence) {
  std::mt19937_64 rng(53);
  std::uniform_real_distribution<double> u(-kPi, kPi);
  const OperatorSum op = build_hamiltonian({.builder = "hehplus", .row = 3}).op;
  const double e0 = ground_energy(op);
  VQEConfig c = exact_config("hehplus");
  c.ansatz.dim = 4;
  EnergyObjective f(c, op);
  VQEConfig sq = c, sg = c;
  sq.backend = sg.backend = Backend::Sampled;
  sq.shots.shots_per_group = sg.shots.shots_per_group = 20000;
  sg.grouping = Grouping::GC;
  EnergyObjective fq(sq, op), fg(sg, op);
  for (int k = 0; k < 50; ++k) {
    RVector t(6);
    for (auto &x : t) x = u(rng);
    const double e = f(t).value;
    EXPECT_GE(e, e0 - 1e-12);
    const EnergyEval a = fq(t), b = fg(t);
    const double tol = 5.0 * std::hypot(a.std_error, b.std_error) + 1e-12;
    EXPECT_NEAR(a.value, e, 5.0 * a.std_error + 1e-12);
    EXPECT_NEAR(a.value, b.value, tol);
  }
}

TEST(Objective, ConfusionMitigationRemovesReadoutBias) {
  VQEConfig c = exact_config("schwinger");
  c.ansatz.dim = 4;
  c.backend = Backend::Sampled;
  c.shots.shots_per_group = 50000;
  c.readout_flip = 0.1;
  const OperatorSum op = build_schwinger(0.0);
  const RVector t = zeros(6);
  const double exact = expectation_exact(StateVector::basis(4, 0), op).real();
  EnergyObjective raw(c, op);
  const EnergyEval r = raw(t);
  c.mitigation = Mitigation::Confusion;
  EnergyObjective mit(c, op);
  ASSERT_TRUE(mit.confusion().has_value());
  const EnergyEval m = mit(t);
  EXPECT_GT(std::abs(r.value - exact), 5 * r.std_error);
  EXPECT_NEAR(m.value, exact, 5 * m.std_error + 0.01);
}

TEST(Objective, ZneOnWhiteNoiseIsExact) {
  VQEConfig c = exact_config("schwinger");
  c.ansatz.dim = 4;
  c.noise = {{NoiseKind::White, 0.1, {}}};
  c.mitigation = Mitigation::Zne;
  c.zne_epsilons = {0.1, 0.2};
  const OperatorSum op = build_schwinger(0.3);
  EnergyObjective f(c, op);
  std::mt19937_64 rng(54);
  std::uniform_real_distribution<double> u(-kPi, kPi);
  RVector t(6);
  for (auto &x : t) x = u(rng);
  const double ideal = expectation_exact(raw_qudit_state(4, t), op).real();
  EXPECT_NEAR(f(t).value, ideal, 1e-12);
  EXPECT_GT(std::abs(f.at_strength(t, 0.1).value - ideal), 1e-6);
}

TEST(RunVqe, SchwingerMassZero) {
  VQEConfig c = exact_config("schwinger");
  c.restarts = 3;
  c.optimizer.max_iterations = 160;
  c.optimizer.method = Method::NelderMead;
  const VQETrace t = run_vqe(c);
  EXPECT_NEAR(t.final_energy, schwinger_exact_levels(0.0)[0], 1e-6);
  EXPECT_NEAR(t.exact_reference, schwinger_exact_levels(0.0)[0], 1e-12);
  EXPECT_LE(t.total_iterations, 500u);
  EXPECT_EQ(t.std_errors.size(), t.opt.records.size());
  const VQETrace again = run_vqe(c);
  EXPECT_EQ(again.final_energy, t.final_energy);
  EXPECT_EQ(again.winning_start, t.winning_start);
}

TEST(RunVqe, H2UccsdWithinChemicalAccuracy) {
  VQEConfig c = exact_config("h2");
  c.hamiltonian.row = 4;
  c.ansatz.family = AnsatzFamily::Uccsd;
  const VQETrace t = run_vqe(c);
  ASSERT_TRUE(t.table_reference.has_value());
  EXPECT_NEAR(t.final_energy, *t.table_reference, 1.6e-3);
  EXPECT_GE(t.final_energy, t.exact_reference - 1e-10);
}

TEST(RunVqe, FactoringOnSampledBackend) {
  VQEConfig c = exact_config("factoring");
  c.ansatz.family = AnsatzFamily::WaveplateHea;
  c.backend = Backend::Sampled;
  c.shots.shots_per_group = 10000;
  const VQETrace t = run_vqe(c);
  const OperatorSum op = build_factoring(35, FactoringForm::Pauli);
  const AnsatzSpec a = resolve_ansatz(c.ansatz, op);
  const RVector p = prepare_pure(a, t.final_theta).probabilities();
  EXPECT_GE(p(1) + p(2), 0.95);
  EXPECT_LE(t.final_energy, 1.0);
  EXPECT_NEAR(t.exact_reference, 0.0, 1e-9);
  for (std::size_t i = 1; i < t.cumulative_shots.size(); ++i)
    EXPECT_GE(t.cumulative_shots[i], t.cumulative_shots[i - 1]);
}

TEST(RunVqe, TraceCsv) {
  VQEConfig c = exact_config("schwinger");
  c.optimizer.max_iterations = 10;
  const std::string csv = format_vqe_trace_csv(run_vqe(c));
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "iter,value,stderr,shots,evals,theta0,theta1,theta2,theta3,theta4,theta5");
}

TEST(Sweep, ParallelKeepsOrderAndRethrows) {
  const std::function<int(std::size_t)> sq = [](std::size_t i) { return static_cast<int>(i * i); };
  const auto v = parallel_sweep<int>(20, sq, 3);
  for (std::size_t i = 0; i < 20; ++i) EXPECT_EQ(v[i], static_cast<int>(i * i));
  const std::function<int(std::size_t)> bad = [](std::size_t i) -> int {
    if (i == 7) throw ConfigError("seven");
    return 0;
  };
  EXPECT_THROW(parallel_sweep<int>(10, bad, 2), ConfigError);
  EXPECT_GE(worker_count(), 1u);
}
