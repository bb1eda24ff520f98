// Acceptance run: one PASS/FAIL line per criterion, non-zero exit on failure.

#include "pvqe/driver.hpp"
#include "pvqe/error.hpp"
#include "pvqe/hamiltonians.hpp"
#include "pvqe/linopt.hpp"
#include "pvqe/measurement.hpp"
#include "pvqe/noise.hpp"
#include "pvqe/optimizers.hpp"
#include "pvqe/qstate.hpp"
#include "pvqe/rng.hpp"

#include "../unit/helpers.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace pvqe;
using pvqe::test::random_density;
using pvqe::test::random_state;

namespace {

const double kPi = std::numbers::pi;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string &what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

// Energies of every exact-backend trace seen during the run, with the
// ground level they must stay above.
struct TraceBound {
  std::string label;
  std::vector<double> values;
  double ground;
};
std::vector<TraceBound> g_exact_traces;

void record_trace(const std::string &label, const VQETrace &t) {
  TraceBound b{label, {}, t.exact_reference};
  for (const auto &r : t.opt.records) b.values.push_back(r.value);
  g_exact_traces.push_back(std::move(b));
}

double max_abs(const CMatrix &m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

const std::vector<double> kMassGrid = {-2, -1.5, -1, -0.5, 0, 0.5, 1, 1.5, 2};

VQEConfig schwinger_config(double m, std::size_t i) {
  VQEConfig cfg;
  cfg.hamiltonian.builder = "schwinger";
  cfg.hamiltonian.mass = m;
  cfg.ansatz.family = AnsatzFamily::RawQudit;
  cfg.optimizer.method = Method::NelderMead;
  cfg.optimizer.max_iterations = 160;
  cfg.restarts = 3;
  cfg.seed = derive_seed(42, i);
  return cfg;
}

// ------------------------------------------------------------------ 1

void schwinger(Outcome &o, double seconds_budget) {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  std::size_t most_iters = 0;
  for (std::size_t i = 0; i < kMassGrid.size(); ++i) {
    const double m = kMassGrid[i];
    const VQETrace t = run_vqe(schwinger_config(m, i));
    record_trace("schwinger m=" + std::to_string(m), t);
    const double analytic = 0.5 - std::sqrt(m * m + m + 17.0 / 4.0);
    worst = std::max(worst, std::abs(t.final_energy - analytic));
    most_iters = std::max(most_iters, t.total_iterations);

    const std::vector<double> spec = exact_eigensolve(build_schwinger(m));
    bool has1 = false, has2 = false;
    for (double e : spec) {
      has1 = has1 || std::abs(e - 1.0) < 1e-10;
      has2 = has2 || std::abs(e - 2.0) < 1e-10;
    }
    o.require(has1 && has2, "E=1 and E=2 in spectrum at m=" + std::to_string(m));
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  o.require(worst <= 1e-2, "max error <= 1e-2");
  o.require(most_iters <= 500, "iteration budget");
  o.require(secs < seconds_budget, "runtime < 30 s");
  o.detail << "max |E_vqe - E_analytic| = " << worst << ", at most " << most_iters << " NM iterations per mass, sweep " << secs << " s";
}

// ------------------------------------------------------------------ 2

void factoring(Outcome &o) {
  VQEConfig cfg;
  cfg.hamiltonian.builder = "factoring";
  cfg.hamiltonian.factor_n = 35;
  cfg.ansatz.family = AnsatzFamily::WaveplateHea;
  cfg.backend = Backend::Sampled;
  cfg.shots.shots_per_group = 10000;
  cfg.optimizer.method = Method::Cobyla;
  cfg.optimizer.max_iterations = 300;
  const VQETrace t = run_vqe(cfg);

  const OperatorSum op = build_factoring(35, FactoringForm::Pauli);
  const AnsatzSpec spec = resolve_ansatz(cfg.ansatz, op);
  const StateVector psi = prepare_pure(spec, t.final_theta);
  const RVector p = psi.probabilities();
  const double mass = p(1) + p(2);
  const double energy = expectation_exact(psi, op).real();
  const double ground = exact_eigensolve(op).front();
  const double form_gap = max_abs(op.to_matrix() - build_factoring(35, FactoringForm::Projector).to_matrix());

  o.require(mass >= 0.95, "mass on {01,10} >= 0.95");
  o.require(energy <= 1.0 && t.final_energy <= 1.0, "energy <= 1");
  o.require(std::abs(ground) <= 1e-12, "ground energy 0");
  o.require(form_gap <= 1e-12, "forms identical");
  o.detail << "P(01)+P(10) = " << mass << ", E = " << energy << " (sampled " << t.final_energy
           << "), ground = " << ground << ", form gap = " << form_gap;
}

// ------------------------------------------------------------------ 3

void chemistry(Outcome &o, double seconds_budget) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::string dir = PVQE_DATA_DIR;
  double worst_small = 0.0, worst_lih = 0.0;
  std::size_t rows_small = 0, lih_params = 0;

  for (const std::string builder : {"h2", "hehplus"}) {
    const std::string path = dir + "/" + builder + "_sto3g.txt";
    const MolecularCoefficients table = load_coefficients(path);
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
      VQEConfig cfg;
      cfg.hamiltonian.builder = builder;
      cfg.hamiltonian.coefficients = path;
      cfg.hamiltonian.row = i;
      cfg.ansatz.family = builder == "h2" ? AnsatzFamily::Uccsd : AnsatzFamily::RawQudit;
      cfg.optimizer.method = Method::Cobyla;
      cfg.optimizer.max_iterations = 500;
      cfg.restarts = builder == "h2" ? 1 : 3;
      cfg.seed = derive_seed(42, i);
      const VQETrace t = run_vqe(cfg);
      record_trace(builder + " row " + std::to_string(i), t);
      worst_small = std::max(worst_small, std::abs(t.final_energy - t.exact_reference));
      ++rows_small;
    }
  }

  const std::string lih_path = dir + "/lih_sto3g.txt";
  const MolecularCoefficients lih = load_coefficients(lih_path);
  for (std::size_t i = 0; i < lih.rows.size(); ++i) {
    VQEConfig cfg;
    cfg.hamiltonian.builder = "lih";
    cfg.hamiltonian.coefficients = lih_path;
    cfg.hamiltonian.row = i;
    cfg.ansatz.family = AnsatzFamily::RawQudit;
    cfg.optimizer.method = Method::Qng;
    cfg.optimizer.max_iterations = 2000;
    cfg.optimizer.window = 100;
    cfg.seed = derive_seed(42, i);
    const OperatorSum op = lih.hamiltonian(i);
    lih_params = resolve_ansatz(cfg.ansatz, op).parameter_count();
    const VQETrace t = run_vqe(cfg);
    record_trace("lih row " + std::to_string(i), t);
    worst_lih = std::max(worst_lih, std::abs(t.final_energy - t.exact_reference));
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  o.require(worst_small <= 1.6e-3, "H2/HeH+ within 1.6e-3");
  o.require(lih_params == 30, "LiH raw_qudit has 30 parameters");
  o.require(worst_lih <= 0.05, "LiH within 0.05");
  o.require(secs < seconds_budget, "runtime < 5 min");
  o.detail << rows_small << " H2/HeH+ rows, max error " << worst_small << "; " << lih.rows.size()
           << " LiH rows (QNG, " << lih_params << " parameters), max error " << worst_lih << "; " << secs << " s";
}

// ------------------------------------------------------------------ 4

void grouping(Outcome &o) {
  std::vector<double> w(9, 0.3);
  const OperatorSum heh = build_hehplus(w);
  const std::size_t nq = qwc_groups(heh).size();
  const std::size_t ng = gc_groups(heh).size();

  OperatorSum xyz(2);
  xyz.add(1.0, PauliString("XX"));
  xyz.add(1.0, PauliString("YY"));
  xyz.add(1.0, PauliString("ZZ"));
  const std::size_t nb = bell_groups(xyz).size();

  std::mt19937_64 rng(404);
  std::size_t misses = 0;
  double worst_ratio = 0.0;
  for (int k = 0; k < 20; ++k) {
    const StateVector psi = random_state(4, rng);
    const BellResult r = bell_measurement(psi, 20000, derive_seed(404, k));
    const std::array<std::pair<double, double>, 3> got = {
        std::pair{r.xx, r.xx_err}, std::pair{r.yy, r.yy_err}, std::pair{r.zz, r.zz_err}};
    const std::array<const char *, 3> names = {"XX", "YY", "ZZ"};
    for (std::size_t j = 0; j < 3; ++j) {
      OperatorSum single(2);
      single.add(1.0, PauliString(names[j]));
      const double exact = expectation_exact(psi, single).real();
      const double ratio = std::abs(got[j].first - exact) / std::max(got[j].second, 1e-12);
      worst_ratio = std::max(worst_ratio, ratio);
      misses += ratio > 4.0;
    }
  }
  o.require(nq == 4, "4 QWC groups");
  o.require(ng == 3, "3 GC groups");
  o.require(nb == 1, "1 Bell group");
  o.require(misses == 0, "Bell estimates within 4 stderr");
  o.detail << "HeH+ QWC " << nq << ", GC " << ng << "; XX+YY+ZZ Bell " << nb << "; worst |err|/stderr "
           << worst_ratio << " over 20 states";
}

// ------------------------------------------------------------------ 5

void mesh(Outcome &o) {
  std::mt19937_64 rng(5);
  double worst = 0.0;
  for (std::size_t m = 2; m <= 8; ++m)
    for (int k = 0; k < 100; ++k) {
      const ModeUnitary u = haar_unitary(m, rng);
      for (MeshLayout l : {MeshLayout::Reck, MeshLayout::Clements})
        worst = std::max(worst, (mesh_reconstruct(decompose(u, l)) - u).norm());
    }
  double clements = 0.0, reck = 0.0;
  for (int k = 0; k < 50; ++k) {
    const ModeUnitary u = haar_unitary(8, rng);
    clements += mesh_fidelity(u, mesh_with_loss(clements_decompose(u), 0.99)) / 50.0;
    reck += mesh_fidelity(u, mesh_with_loss(reck_decompose(u), 0.99)) / 50.0;
  }
  o.require(worst <= 1e-10, "reconstruction within 1e-10");
  o.require(clements >= reck, "Clements fidelity >= Reck");
  o.detail << "max Frobenius residual " << worst << " over 1400 decompositions; t=0.99, M=8: Clements "
           << clements << ", Reck " << reck;
}

// ------------------------------------------------------------------ 6

// Applies a^dagger_j -> sum_i U_ij a^dagger_i photon by photon to the vacuum.
std::map<std::vector<unsigned>, Complex> creation_oracle(const CMatrix &u, const std::vector<unsigned> &input) {
  const std::size_t modes = static_cast<std::size_t>(u.rows());
  std::map<std::vector<unsigned>, Complex> state{{std::vector<unsigned>(modes, 0), 1.0}};
  double fact = 1.0;
  for (std::size_t j = 0; j < input.size(); ++j)
    for (unsigned c = 0; c < input[j]; ++c) {
      fact *= c + 1;
      std::map<std::vector<unsigned>, Complex> next;
      for (const auto &[occ, amp] : state)
        for (std::size_t i = 0; i < modes; ++i) {
          std::vector<unsigned> o2 = occ;
          ++o2[i];
          next[o2] += amp * u(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * std::sqrt(double(o2[i]));
        }
      state = std::move(next);
    }
  for (auto &[occ, amp] : state) amp /= std::sqrt(fact);
  return state;
}

void fock(Outcome &o) {
  std::mt19937_64 rng(6);
  const std::vector<FockState> inputs = fock_basis(4, 2);
  std::uniform_int_distribution<std::size_t> pick(0, inputs.size() - 1);
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    const CMatrix u = haar_unitary(4, rng);
    const FockState in = inputs[pick(rng)];
    const AmplitudeMap got = fock_evolve(u, in);
    const auto want = creation_oracle(u, in.occupations);
    for (const FockState &s : fock_basis(4, 2)) {
      const auto it = want.find(s.occupations);
      const Complex w = it == want.end() ? Complex{} : it->second;
      worst = std::max(worst, std::abs(got.amplitude(s) - w));
    }
  }
  const CMatrix bs = bs_embed(MeshElement{0, 1, kPi / 4, 0.0}, 2);
  const double coincidence = fock_evolve(bs, FockState{{1, 1}}).probability(FockState{{1, 1}});
  o.require(worst <= 1e-10, "permanent matches oracle");
  o.require(coincidence <= 1e-12, "HOM coincidence zero");
  o.detail << "max amplitude error " << worst << " over 50 unitaries; HOM coincidence " << coincidence;
}

// ------------------------------------------------------------------ 7

void mitigation(Outcome &o) {
  std::mt19937_64 rng(7);
  double roundtrip = 0.0;
  for (int k = 0; k < 20; ++k) {
    const ConfusionMatrix c = bitflip_confusion(2, 0.05 + 0.02 * k);
    const RVector p = random_state(4, rng).probabilities();
    roundtrip = std::max(roundtrip, (mitigate_distribution(c.forward(p), c).p - p).cwiseAbs().maxCoeff());
  }

  const ConfusionMatrix truth = bitflip_confusion(2, 0.1);
  const MeasureFn measure = [&](std::size_t prepared, std::uint64_t shots, std::uint64_t seed) {
    const Counts ideal = sample_distribution(StateVector::basis(4, prepared).probabilities(), shots, seed);
    return apply_confusion(ideal, truth, derive_seed(seed, 1));
  };
  const ConfusionMatrix cal = calibrate_confusion(measure, 4, 100000, 77);
  double worst_z = 0.0;
  for (int k = 0; k < 10; ++k) {
    const StateVector psi = random_state(4, rng);
    const Counts raw = apply_confusion(sample_distribution(psi.probabilities(), 100000, derive_seed(78, k)), truth,
                                       derive_seed(79, k));
    const RVector q = mitigate_counts(raw, cal).p;
    for (const char *z : {"ZI", "IZ", "ZZ"}) {
      OperatorSum single(2);
      single.add(1.0, PauliString(z));
      const double exact = expectation_exact(psi, single).real();
      worst_z = std::max(worst_z, std::abs(z_expectation(q, SignedZ{1, PauliString(z)}) - exact));
    }
  }

  std::vector<ZnePoint> line = {{0.1, 2.0 + 3.0 * 0.1, 0.0}, {0.25, 2.0 + 3.0 * 0.25, 0.0}, {0.4, 2.0 + 3.0 * 0.4, 0.0}};
  const double intercept3 = zne_estimate(line);
  line.pop_back();
  const double intercept2 = zne_estimate(line);
  const double var = zne_variance(1.0, 1.0, 2.0);

  std::size_t wins = 0;
  for (std::size_t i = 0; i < kMassGrid.size(); ++i) {
    VQEConfig cfg = schwinger_config(kMassGrid[i], i);
    cfg.noise = {NoiseSpec{NoiseKind::Depolarizing, 0.1, {}}};
    cfg.mitigation = Mitigation::Zne;
    cfg.zne_epsilons = {0.1, 0.2};
    const OperatorSum op = build_schwinger(kMassGrid[i]);
    const VQETrace t = run_vqe(cfg, op);
    EnergyObjective probe(cfg, op);
    const double raw = probe.at_strength(t.final_theta, 0.1).value;
    const double exact = schwinger_exact_levels(kMassGrid[i])[0];
    wins += std::abs(t.final_energy - exact) < std::abs(raw - exact);
  }
  const double win_rate = static_cast<double>(wins) / static_cast<double>(kMassGrid.size());

  o.require(roundtrip <= 1e-12, "forward then invert");
  o.require(worst_z <= 0.02, "mitigated Z within 0.02");
  o.require(std::abs(intercept2 - 2.0) <= 1e-12 && std::abs(intercept3 - 2.0) <= 1e-12, "linear ZNE exact");
  o.require(std::abs(var - 5.0) <= 1e-12, "variance 5.0");
  o.require(win_rate >= 0.9, "ZNE beats raw on >= 90% of masses");
  o.detail << "round trip " << roundtrip << "; max mitigated Z error " << worst_z << "; intercepts " << intercept2
           << ", " << intercept3 << "; Var(1,1,2) = " << var << "; ZNE wins " << wins << "/" << kMassGrid.size()
           << " (depolarizing, eps 0.1/0.2)";
}

// ------------------------------------------------------------------ 8

StateVector ry_state(const RVector &t) {
  CVector v(2);
  v << std::cos(t(0) / 2), std::sin(t(0) / 2);
  return StateVector(v);
}

double z_energy(const RVector &t) { return std::cos(t(0)); }

void optimizers(Outcome &o) {
  const Objective quad = [](const RVector &t) {
    return (t(0) - 1.0) * (t(0) - 1.0) + 2.0 * (t(1) + 0.5) * (t(1) + 0.5);
  };
  RVector x0(2);
  x0 << -0.5, 0.7;
  double worst_gap = 0.0;
  std::string worst_name;
  for (Method m : {Method::GradientDescent, Method::NelderMead, Method::Spsa, Method::Pso, Method::Cobyla}) {
    OptimizerConfig c;
    c.method = m;
    c.max_iterations = 2000;
    c.step_size = 0.1;
    c.window = 0;
    c.seed = 8;
    const double gap = minimize(quad, x0, c).best_value;
    if (gap > worst_gap) {
      worst_gap = gap;
      worst_name = to_string(m);
    }
    o.require(gap <= 1e-4, to_string(m) + " reaches 1e-4");
  }

  RVector th(1);
  th << 1.1;
  const double f = qfim(ry_state, th)(0, 0);

  OptimizerConfig q;
  q.method = Method::Qng;
  q.max_iterations = 50;
  q.step_size = 0.2;
  q.qng_alpha = 0.0;
  q.seed = 8;
  RVector start(1);
  start << 0.4;
  const OptTrace qa = minimize_qng(z_energy, ry_state, start, q);
  OptimizerConfig g = q;
  g.method = Method::GradientDescent;
  const OptTrace ga = minimize(z_energy, start, g);
  bool identical = qa.records.size() == ga.records.size();
  for (std::size_t i = 0; identical && i < qa.records.size(); ++i)
    identical = qa.records[i].value == ga.records[i].value && qa.records[i].theta == ga.records[i].theta;

  q.qng_alpha = 1.0;
  q.qng_lambda = 0.0;
  q.max_iterations = 500;
  q.tolerance = 1e-12;
  q.window = 5;
  g = q;
  g.method = Method::GradientDescent;
  const OptTrace qn = minimize_qng(z_energy, ry_state, start, q);
  const OptTrace gd = minimize(z_energy, start, g);
  const bool reached = std::abs(qn.best_theta(0) - kPi) < 1e-3;

  o.require(std::abs(f - 1.0) <= 1e-6, "QFIM = 1");
  o.require(identical, "QNG alpha=0 identical to GD");
  o.require(reached && qn.records.size() <= gd.records.size(), "QNG iterations <= GD");
  o.detail << "worst quadratic gap " << worst_gap << " (" << worst_name << "); QFIM " << f
           << "; alpha=0 trace identical: " << (identical ? "yes" : "no") << "; QNG " << qn.records.size() - 1
           << " vs GD " << gd.records.size() - 1 << " iterations";
}

// ------------------------------------------------------------------ 9

void invariants(Outcome &o, double seconds_budget) {
  const auto t0 = std::chrono::steady_clock::now();

  // Jordan-Wigner canonical anticommutation on 4 modes.
  double car = 0.0;
  const std::size_t modes = 4;
  const CMatrix id = CMatrix::Identity(16, 16);
  auto anti = [&](LadderOp a, LadderOp b) {
    FermionOperator f(modes);
    f.add(1.0, {a, b});
    f.add(1.0, {b, a});
    return jordan_wigner(f).to_matrix();
  };
  for (std::size_t i = 0; i < modes; ++i)
    for (std::size_t j = 0; j < modes; ++j) {
      const CMatrix want = i == j ? id : CMatrix::Zero(16, 16);
      car = std::max(car, max_abs(anti(annihilate(i), create(j)) - want));
      car = std::max(car, max_abs(anti(annihilate(i), annihilate(j))));
    }

  // Hermiticity and grouping exact cover for every builder.
  std::vector<OperatorSum> ops;
  for (double m : kMassGrid) ops.push_back(build_schwinger(m));
  ops.push_back(build_heisenberg(1.0, 0.5, -0.3));
  ops.push_back(build_factoring(35, FactoringForm::Pauli));
  ops.push_back(build_factoring(35, FactoringForm::Projector));
  const std::string dir = PVQE_DATA_DIR;
  for (const char *name : {"h2", "hehplus", "lih"}) {
    const MolecularCoefficients t = load_coefficients(dir + "/" + name + "_sto3g.txt");
    for (std::size_t i = 0; i < t.rows.size(); ++i) ops.push_back(t.hamiltonian(i));
  }
  std::size_t non_hermitian = 0, cover_failures = 0;
  for (const auto &op : ops) {
    non_hermitian += !op.is_hermitian();
    for (Grouping g : {Grouping::QWC, Grouping::GC}) {
      try {
        check_exact_cover(op, make_groups(op, g));
      } catch (const Error &) {
        ++cover_failures;
      }
    }
  }

  // Short exact runs join the traces recorded by earlier criteria.
  for (std::size_t i = 0; i < 3; ++i) {
    VQEConfig cfg;
    cfg.hamiltonian.builder = "heisenberg";
    cfg.hamiltonian.heisenberg = {1.0, 0.5 * i, -0.3};
    cfg.optimizer.max_iterations = 80;
    cfg.optimizer.method = i == 0 ? Method::Cobyla : i == 1 ? Method::NelderMead : Method::Spsa;
    cfg.seed = derive_seed(9, i);
    record_trace("heisenberg " + std::to_string(i), run_vqe(cfg));
  }
  std::size_t violations = 0, points = 0;
  for (const auto &tb : g_exact_traces)
    for (double v : tb.values) {
      ++points;
      violations += v < tb.ground - 1e-9;
    }

  // Channel trace preservation and positivity.
  std::mt19937_64 rng(99);
  double trace_err = 0.0, min_eig = 0.0;
  for (int k = 0; k < 30; ++k) {
    const DensityMatrix rho = random_density(4, rng);
    for (NoiseKind kind : {NoiseKind::Dephasing, NoiseKind::Depolarizing, NoiseKind::White})
      for (double e : {0.0, 0.3, 1.0}) {
        const DensityMatrix out = apply_channel(rho, NoiseSpec{kind, e, {}});
        trace_err = std::max(trace_err, std::abs(out.entries().trace() - 1.0));
        Eigen::SelfAdjointEigenSolver<CMatrix> es(out.entries());
        min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
      }
  }

  // Sampled runs repeat exactly under a fixed seed.
  auto sampled = [] {
    VQEConfig cfg = schwinger_config(0.5, 0);
    cfg.backend = Backend::Sampled;
    cfg.restarts = 1;
    cfg.optimizer.max_iterations = 40;
    cfg.seed = 1234;
    return run_vqe(cfg);
  };
  const VQETrace a = sampled(), b = sampled();
  bool same = a.opt.records.size() == b.opt.records.size() && a.cumulative_shots == b.cumulative_shots;
  for (std::size_t i = 0; same && i < a.opt.records.size(); ++i)
    same = a.opt.records[i].value == b.opt.records[i].value && a.opt.records[i].theta == b.opt.records[i].theta;

  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  o.require(car <= 1e-12, "JW anticommutation");
  o.require(non_hermitian == 0, "hermiticity");
  o.require(cover_failures == 0, "exact cover");
  o.require(violations == 0, "variational bound");
  o.require(trace_err <= 1e-12 && min_eig >= -1e-12, "channel trace and positivity");
  o.require(same, "determinism");
  o.require(secs < seconds_budget, "runtime < 60 s");
  o.detail << "CAR residual " << car << "; " << ops.size() << " operators hermitian and covered; " << points
           << " trace points over " << g_exact_traces.size() << " exact traces above ground; channel trace error "
           << trace_err << "; deterministic: " << (same ? "yes" : "no") << "; " << secs << " s";
}

} // namespace

int main() {
  struct Criterion {
    int id;
    const char *name;
    std::function<void(Outcome &)> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "Schwinger ground level", [](Outcome &o) { schwinger(o, 30.0); }},
      {2, "factoring 35", factoring},
      {3, "chemistry dissociation curves", [](Outcome &o) { chemistry(o, 300.0); }},
      {4, "measurement grouping", grouping},
      {5, "mesh decomposition and loss", mesh},
      {6, "two-photon Fock evolution", fock},
      {7, "error mitigation", mitigation},
      {8, "optimizer soundness", optimizers},
      {9, "structural invariants", [](Outcome &o) { invariants(o, 60.0); }},
  };
  int failures = 0;
  for (const auto &c : criteria) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.run(o);
    } catch (const std::exception &e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failures += !o.pass;
    std::printf("%s criterion %d (%s): %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.str().c_str(),
                secs);
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
