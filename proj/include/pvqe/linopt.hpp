#pragma once

// Linear optics: programmable beam-splitter meshes (triangular and square
// layouts), loss, multi-photon Fock evolution through permanents, dual-rail
// post-selection and polarization wave-plate gates.

#include "pvqe/qstate.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace pvqe {

/// M x M complex mode transformation.
using ModeUnitary = CMatrix;

/// Two-mode element acting on adjacent modes (m, m+1):
///   [[e^{i phi} cos theta, -sin theta],
///    [e^{i phi} sin theta,  cos theta]]
struct MeshElement {
  std::size_t m = 0;
  std::size_t n = 1;
  double theta = 0.0;
  double phi = 0.0;
};

enum class MeshLayout { Reck, Clements };

/// U = D * T_L * ... * T_2 * T_1, where `elements` are listed in the order
/// light meets them (T_1 first) and D = diag(exp(i * output_phases)).
struct BeamSplitterMesh {
  std::size_t mode_count = 0;
  std::vector<MeshElement> elements;
  std::vector<double> output_phases;

  void validate() const;
};

ModeUnitary bs_embed(const MeshElement &e, std::size_t mode_count);
ModeUnitary mesh_reconstruct(const BeamSplitterMesh &mesh);

/// Square-mesh decomposition, M(M-1)/2 elements.
BeamSplitterMesh clements_decompose(const ModeUnitary &u, double tol = kUnitaryTolerance);
/// Triangular-mesh decomposition, M(M-1)/2 elements.
BeamSplitterMesh reck_decompose(const ModeUnitary &u, double tol = kUnitaryTolerance);
BeamSplitterMesh decompose(const ModeUnitary &u, MeshLayout layout, double tol = kUnitaryTolerance);

/// Adjacent-pair positions (light order) of a full mesh with zero angles.
std::vector<MeshElement> mesh_layout(std::size_t mode_count, MeshLayout layout);
/// Number of beam-splitter layers (optical depth) of the layout's mesh.
std::size_t mesh_depth(const BeamSplitterMesh &mesh);

/// Mesh transfer matrix with every element's 2x2 block scaled by sqrt(t).
CMatrix mesh_with_loss(const BeamSplitterMesh &mesh, double transmission);
/// |Tr(U^dagger A)|^2 / (M Tr(A^dagger A)), in [0, 1].
double mesh_fidelity(const ModeUnitary &ideal, const CMatrix &actual);

/// Haar-distributed unitary: QR of a complex Gaussian matrix with the phases
/// of R's diagonal moved into Q.
ModeUnitary haar_unitary(std::size_t dim, std::mt19937_64 &rng);

inline constexpr std::size_t kMaxPhotons = 3;
inline constexpr std::size_t kMaxModes = 8;

/// Photon occupation numbers per mode.
struct FockState {
  std::vector<unsigned> occupations;

  std::size_t photons() const;
  friend auto operator<=>(const FockState &, const FockState &) = default;
};

/// Output amplitudes keyed by Fock state.
struct AmplitudeMap {
  std::map<FockState, Complex> amplitudes;

  double total_probability() const;
  Complex amplitude(const FockState &s) const;
  double probability(const FockState &s) const { return std::norm(amplitude(s)); }
};

/// Permanent by Ryser's formula with Gray-code updates.
Complex permanent(const CMatrix &a);

/// All occupation patterns of `photons` photons in `modes` modes, in
/// lexicographically descending order of occupations.
std::vector<FockState> fock_basis(std::size_t modes, std::size_t photons);

/// <S|U|T> = Perm(U_{S,T}) / sqrt(prod s_i! prod t_j!) for every output S.
/// Accepts subunitary (lossy) transfer matrices.
AmplitudeMap fock_evolve(const CMatrix &u, const FockState &input);

struct PostSelected {
  StateVector state;
  double success_probability;
};

/// Keeps outputs with exactly one photon in each (first, second) rail pair;
/// |0> = photon in the first rail. Pair q is qubit q.
PostSelected dual_rail_postselect(const AmplitudeMap &amps,
                                  std::span<const std::pair<std::size_t, std::size_t>> rail_pairs);

enum class WaveplateKind { HWP, QWP };

/// Jones matrices in the {|H>, |V>} basis with the fast axis at `angle`
/// (radians) from H:
///   HWP = [[cos 2a, sin 2a], [sin 2a, -cos 2a]]
///   QWP = [[cos^2 a + i sin^2 a, (1 - i) sin a cos a],
///          [(1 - i) sin a cos a, sin^2 a + i cos^2 a]]
CMatrix waveplate(WaveplateKind kind, double angle);
/// Polarizing beam displacer as a CNOT: polarization (qubit 0) controls the
/// path (qubit 1).
CMatrix pbd_cnot();

/// HOM visibility to noise strength, 1 - V.
double visibility_to_noise(double visibility);

/// `M` on the first line, then M rows of M `re,im` entries.
ModeUnitary parse_mode_unitary(std::istream &in);
ModeUnitary read_mode_unitary(const std::string &path);
std::string format_mode_unitary(const ModeUnitary &u);
/// One element per line `m n theta phi`, then `D: p0 ... p{M-1}`.
std::string format_mesh(const BeamSplitterMesh &mesh);
BeamSplitterMesh parse_mesh(std::istream &in);

} // namespace pvqe
