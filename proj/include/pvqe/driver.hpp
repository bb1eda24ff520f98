#pragma once

// VQE assembly: ansatz families, experiment configuration, the energy
// objective over exact or sampled backends, and the optimization loop.

#include "pvqe/hamiltonians.hpp"
#include "pvqe/measurement.hpp"
#include "pvqe/noise.hpp"
#include "pvqe/optimizers.hpp"
#include "pvqe/qstate.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace pvqe {

enum class AnsatzFamily { WaveplateHea, MeshPhases, Uccsd, RawQudit };

std::string to_string(AnsatzFamily f);
AnsatzFamily ansatz_family_from_string(const std::string &s);

/// One optical element of a wave-plate circuit. Plates carry one angle each;
/// the PBD entangler has no parameter.
struct PlateOp {
  enum class Kind { HWP, QWP, PBD } kind = Kind::HWP;
  std::size_t qubit = 0;  // plate qubit, or control of the PBD
  std::size_t target = 1; // PBD target
};

struct AnsatzSpec {
  AnsatzFamily family = AnsatzFamily::RawQudit;

  /// raw_qudit: state dimension d.
  std::size_t dim = 0;

  /// waveplate_hea and uccsd: register size.
  std::size_t num_qubits = 0;
  /// waveplate_hea: circuit applied to |0...0> in order.
  std::vector<PlateOp> plates;

  /// mesh_phases: square mesh over `modes`; with rail pairs one photon enters
  /// the first rail of every pair and the output is post-selected, without
  /// them one photon in mode 0 gives a path qudit of dimension `modes`.
  std::size_t modes = 0;
  std::vector<std::pair<std::size_t, std::size_t>> rail_pairs;

  /// uccsd: reference basis index (default: lowest diagonal energy) and
  /// excitations, one parameter each.
  std::optional<std::size_t> reference;
  std::vector<std::array<std::size_t, 2>> singles;
  std::vector<std::array<std::size_t, 4>> doubles;

  std::size_t parameter_count() const;
  /// Dimension of the prepared state.
  std::size_t state_dim() const;
  void validate() const;
};

/// Plates HWP+QWP on every qubit, a PBD chain, then HWP+QWP again.
std::vector<PlateOp> default_plate_layout(std::size_t num_qubits);
/// Singles a<-i and doubles (a,b)<-(i,j) from the occupied qubits of
/// `reference` to the empty ones.
void fill_default_excitations(AnsatzSpec &spec);

/// d-1 polar angles then d-1 relative phases; theta = 0 gives |0>.
StateVector raw_qudit_state(std::size_t dim, const RVector &theta);

StateVector prepare_pure(const AnsatzSpec &spec, const RVector &theta);
/// Pure state when `noise` is empty, else the channels applied in order.
QuantumState prepare_ansatz(const AnsatzSpec &spec, const RVector &theta,
                            std::span<const NoiseSpec> noise = {});

struct HamiltonianSource {
  /// schwinger, heisenberg, factoring, h2, hehplus, lih, operator_file
  std::string builder;
  double mass = 0.0;
  std::array<double, 3> heisenberg{1.0, 1.0, 1.0};
  long factor_n = 35;
  FactoringForm factoring_form = FactoringForm::Pauli;
  /// Molecules: explicit weights, or a coefficient table and row.
  std::vector<double> weights;
  std::string coefficients;
  std::optional<std::size_t> row;
  std::optional<double> bond_length;
  /// operator_file
  std::string path;
};

struct BuiltHamiltonian {
  OperatorSum op;
  std::optional<double> reference_energy; // from the coefficient table
  std::string label;
};

BuiltHamiltonian build_hamiltonian(const HamiltonianSource &src);

enum class Backend { Exact, Sampled };
enum class Mitigation { None, Confusion, Zne };

struct VQEConfig {
  HamiltonianSource hamiltonian;
  AnsatzSpec ansatz;
  Backend backend = Backend::Exact;
  ShotPlan shots;
  Grouping grouping = Grouping::QWC;
  std::vector<NoiseSpec> noise;
  double readout_flip = 0.0;
  Mitigation mitigation = Mitigation::None;
  std::vector<double> zne_epsilons{0.1, 0.2};
  std::uint64_t calibration_shots = 100000;
  OptimizerConfig optimizer;
  std::optional<std::vector<double>> initial_theta;
  /// Independent optimizations from fresh random starts; the lowest final
  /// energy wins. initial_theta, if set, seeds the first one.
  std::size_t restarts = 1;
  std::uint64_t seed = 42;

  /// Cross-field checks against the built operator. Throws ConfigError.
  void validate(const OperatorSum &op) const;
};

/// Parses the JSON schema documented in the README; unknown keys are
/// rejected. Throws ConfigError. Sweep templates may omit the hamiltonian.
VQEConfig parse_config(const std::string &json_text, bool require_hamiltonian = true);
VQEConfig load_config(const std::string &path, bool require_hamiltonian = true);
/// Canonical JSON dump (every field, defaults included).
std::string config_to_json(const VQEConfig &cfg);

/// Directory of the bundled coefficient tables: $PVQE_DATA_DIR if set,
/// otherwise the source tree's data directory.
std::string default_data_dir();

struct EnergyEval {
  double value = 0.0;
  double std_error = 0.0;
  std::uint64_t shots = 0;
};

/// theta -> (E, stderr). Stateful: each call on a sampled backend draws a
/// fresh seed from the configuration's master seed and the call counter.
class EnergyObjective {
public:
  EnergyObjective(const VQEConfig &cfg, OperatorSum op);

  EnergyEval operator()(const RVector &theta);
  /// Evaluation with the first noise channel's strength replaced.
  EnergyEval at_strength(const RVector &theta, double epsilon);

  const OperatorSum &op() const noexcept { return op_; }
  const std::vector<MeasurementGroup> &groups() const noexcept { return groups_; }
  const std::vector<EnergyEval> &log() const noexcept { return log_; }
  std::size_t calls() const noexcept { return log_.size(); }
  const std::optional<ConfusionMatrix> &confusion() const noexcept { return confusion_; }

private:
  EnergyEval evaluate(const RVector &theta, std::span<const NoiseSpec> noise, std::uint64_t seed) const;

  VQEConfig cfg_;
  OperatorSum op_;
  std::vector<MeasurementGroup> groups_;
  std::optional<ConfusionMatrix> confusion_;
  std::optional<ConfusionMatrix> readout_;
  std::vector<EnergyEval> log_;
  std::size_t extra_calls_ = 0;
};

struct VQETrace {
  OptTrace opt; // the winning start
  std::vector<double> std_errors;             // per record
  std::vector<std::uint64_t> cumulative_shots; // per record, counting earlier starts
  std::size_t winning_start = 0;
  std::size_t total_iterations = 0; // over all starts
  std::size_t total_evaluations = 0;
  double final_energy = 0.0;
  RVector final_theta;
  double exact_reference = 0.0;
  std::optional<double> table_reference;
  OptStatus status = OptStatus::MaxIterations;
};

/// Fills ansatz defaults that depend on the operator (dimension, register
/// size, plate layout, uccsd reference and excitations).
AnsatzSpec resolve_ansatz(const AnsatzSpec &spec, const OperatorSum &op);

VQETrace run_vqe(const VQEConfig &cfg);
/// Same loop on a prebuilt operator.
VQETrace run_vqe(const VQEConfig &cfg, const OperatorSum &op);

/// `iter,value,stderr,shots,evals,theta0,...`
std::string format_vqe_trace_csv(const VQETrace &t);

/// $PVQE_WORKERS if set and positive, else hardware concurrency (at least 1).
std::size_t worker_count();

/// Evaluates f(0..n-1) across worker threads; results keep index order and
/// the first failing index's exception is rethrown.
template <class T>
std::vector<T> parallel_sweep(std::size_t n, const std::function<T(std::size_t)> &f,
                              std::size_t workers = worker_count()) {
  std::vector<std::optional<T>> out(n);
  std::vector<std::exception_ptr> errs(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        out[i].emplace(f(i));
      } catch (...) {
        errs[i] = std::current_exception();
      }
    }
  };
  workers = std::max<std::size_t>(1, std::min(workers, n));
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto &t : pool) t.join();
  for (auto &e : errs)
    if (e) std::rethrow_exception(e);
  std::vector<T> res;
  res.reserve(n);
  for (auto &o : out) res.push_back(std::move(*o));
  return res;
}

} // namespace pvqe
