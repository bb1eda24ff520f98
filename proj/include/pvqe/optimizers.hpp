#pragma once

// Minimizers over real parameter vectors: finite-difference gradient descent,
// Nelder-Mead, SPSA, particle swarm, a linear trust-region method in the
// spirit of COBYLA, and quantum natural gradient.

#include "pvqe/qstate.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace pvqe {

enum class Method { GradientDescent, NelderMead, Spsa, Pso, Cobyla, Qng };

std::string to_string(Method m);
/// gd, nelder_mead, spsa, pso, cobyla, qng
Method method_from_string(const std::string &s);

struct OptimizerConfig {
  Method method = Method::Cobyla;
  std::size_t max_iterations = 500;
  /// Stop when the best value improves by less than this over `window`
  /// iterations. window = 0 disables the test.
  double tolerance = 1e-10;
  std::size_t window = 20;
  std::uint64_t seed = 0;

  // gradient descent and QNG
  double step_size = 0.1;
  double fd_step = 1e-5;

  // Nelder-Mead
  double simplex_step = 0.5;

  // SPSA: a_k = a / (k + 1 + A)^alpha, c_k = c / (k + 1)^gamma
  double spsa_a = 0.2;
  double spsa_c = 0.1;
  double spsa_A = 10.0;
  double spsa_alpha = 0.602;
  double spsa_gamma = 0.101;

  // particle swarm; the box defaults to theta0 +- pi
  std::size_t swarm_size = 20;
  double inertia = 0.7;
  double cognitive = 1.5;
  double social = 1.5;
  std::vector<double> lower;
  std::vector<double> upper;

  // linear trust region
  double rho_begin = 0.5;
  double rho_end = 1e-8;
  double rho_max = 1.0;

  // quantum natural gradient
  double qng_alpha = 1.0;
  double qng_lambda = 1e-3;
  bool qng_spsa = false;
  double qfim_step = 1e-4;

  void validate() const;
};

struct IterationRecord {
  std::size_t iteration = 0;
  RVector theta;
  double value = 0.0;
  std::size_t evaluations = 0; // cumulative, after this iteration
  std::size_t eval_index = 0;  // which evaluation produced `value`
};

enum class OptStatus { Converged, MaxIterations, NanAbort };

std::string to_string(OptStatus s);

struct OptTrace {
  std::vector<IterationRecord> records; // records[0] is the starting point
  RVector best_theta;
  double best_value = 0.0;
  std::size_t best_eval_index = 0;
  std::size_t evaluations = 0;
  OptStatus status = OptStatus::MaxIterations;
};

using Objective = std::function<double(const RVector &)>;
using StateFn = std::function<StateVector(const RVector &)>;

/// Every method except Qng. A non-finite objective value stops the run and
/// returns the trace so far with status NanAbort.
OptTrace minimize(const Objective &f, const RVector &theta0, const OptimizerConfig &cfg);

/// F_jk = 4 Re(<d_j psi|d_k psi> - <d_j psi|psi><psi|d_k psi>) by central
/// differences after aligning the global phase of neighbours to psi(theta).
RMatrix qfim(const StateFn &state, const RVector &theta, double h = 1e-4);

/// theta <- theta - eta (F + lambda I)^(-alpha) grad E, with F either the
/// exact QFIM or a running SPSA estimate. alpha = 0 reproduces gradient
/// descent exactly.
OptTrace minimize_qng(const Objective &f, const StateFn &state, const RVector &theta0,
                      const OptimizerConfig &cfg);

/// `iter,value,evals,theta0,theta1,...`
std::string format_trace_csv(const OptTrace &t);

} // namespace pvqe
