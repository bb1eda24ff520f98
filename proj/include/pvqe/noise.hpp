#pragma once

// Noise channels, readout confusion matrices and zero-noise extrapolation.

#include "pvqe/measurement.hpp"
#include "pvqe/qstate.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace pvqe {

enum class NoiseKind { Dephasing, Depolarizing, White };

std::string to_string(NoiseKind k);
NoiseKind noise_kind_from_string(const std::string &s);

struct NoiseSpec {
  NoiseKind kind = NoiseKind::White;
  double strength = 0.0;
  /// Qubits acted on; empty means every qubit. Ignored by White.
  std::vector<std::size_t> targets;

  void validate(std::size_t num_qubits) const;
};

/// dephasing:    (1-e) rho + e (rho + Z rho Z)/2 on each target
/// depolarizing: (1-e) rho + e (1/4) sum_P P rho P on each target
/// white:        (1-e) rho + e I/d
DensityMatrix apply_channel(const DensityMatrix &rho, const NoiseSpec &spec);
DensityMatrix apply_channels(DensityMatrix rho, std::span<const NoiseSpec> specs);

/// Column-stochastic readout map, entries(j, k) = p(observe j | prepared k).
class ConfusionMatrix {
public:
  explicit ConfusionMatrix(RMatrix entries, double tol = 1e-9);
  static ConfusionMatrix identity(std::size_t dim);

  const RMatrix &entries() const noexcept { return m_; }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(m_.rows()); }
  /// 2-norm condition number (infinite when singular).
  double condition_number() const;
  RVector forward(const RVector &p) const { return m_ * p; }

private:
  RMatrix m_;
};

/// Independent symmetric bit flips with probability p on each of k qubits.
ConfusionMatrix bitflip_confusion(std::size_t num_qubits, double p);
/// Resamples each recorded outcome through the matrix's column.
Counts apply_confusion(const Counts &c, const ConfusionMatrix &m, std::uint64_t seed);

/// Prepares basis state `prepared`, measures `shots` times.
using MeasureFn = std::function<Counts(std::size_t prepared, std::uint64_t shots, std::uint64_t seed)>;

inline constexpr double kMaxConfusionCondition = 1e6;

/// Column k is the outcome distribution when preparing basis_states[k]; the
/// prepared states must be a permutation of 0..dim-1.
ConfusionMatrix calibrate_confusion(const MeasureFn &measure, std::span<const std::size_t> basis_states,
                                    std::uint64_t shots, std::uint64_t seed,
                                    double max_condition = kMaxConfusionCondition);
ConfusionMatrix calibrate_confusion(const MeasureFn &measure, std::size_t dim, std::uint64_t shots,
                                    std::uint64_t seed, double max_condition = kMaxConfusionCondition);

struct QuasiDistribution {
  RVector p;
  bool has_negative = false;
};

/// Lambda^{-1} p, negative entries kept and flagged.
QuasiDistribution mitigate_distribution(const RVector &p, const ConfusionMatrix &m);
QuasiDistribution mitigate_counts(const Counts &c, const ConfusionMatrix &m);

std::string format_confusion_csv(const ConfusionMatrix &m);
ConfusionMatrix parse_confusion_csv(std::istream &in);

struct ZnePoint {
  double epsilon = 0.0;
  double energy = 0.0;
  double std_error = 0.0;
};

struct ZneResult {
  double value = 0.0;
  double std_error = 0.0;
};

/// Two points: (e2 E1 - e1 E2)/(e2 - e1). More points: least-squares line
/// evaluated at zero noise. The error is propagated from per-point errors.
ZneResult zne_extrapolate(std::span<const ZnePoint> points);
double zne_estimate(std::span<const ZnePoint> points);
/// sigma^2 (e2^2 + e1^2)/(e2 - e1)^2.
double zne_variance(double sigma, double eps1, double eps2);

/// `epsilon,energy,stderr` rows followed by `zne,<E>,<stderr>`.
std::string format_zne_csv(std::span<const ZnePoint> points, const ZneResult &r);

} // namespace pvqe
