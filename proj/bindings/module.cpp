#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "pvqe/cli.hpp"
#include "pvqe/driver.hpp"
#include "pvqe/error.hpp"
#include "pvqe/hamiltonians.hpp"
#include "pvqe/linopt.hpp"
#include "pvqe/measurement.hpp"
#include "pvqe/noise.hpp"
#include "pvqe/qstate.hpp"

#include <random>
#include <sstream>

namespace py = pybind11;
using namespace pvqe;

namespace {

OperatorSum make_operator(const std::vector<std::pair<Complex, std::string>> &terms) {
  if (terms.empty()) throw ValidationError("operator needs at least one term");
  OperatorSum op(terms.front().second.size());
  for (const auto &[c, s] : terms) op.add(c, PauliString(s));
  return op;
}

MeshLayout layout_from(const std::string &s) {
  if (s == "clements") return MeshLayout::Clements;
  if (s == "reck") return MeshLayout::Reck;
  throw ValidationError("layout must be clements or reck");
}

py::dict trace_dict(const VQETrace &t) {
  py::dict d;
  std::vector<double> values;
  for (const auto &r : t.opt.records) values.push_back(r.value);
  d["final_energy"] = t.final_energy;
  d["final_theta"] = t.final_theta;
  d["exact_reference"] = t.exact_reference;
  d["table_reference"] = t.table_reference;
  d["status"] = to_string(t.status);
  d["values"] = values;
  d["std_errors"] = t.std_errors;
  d["cumulative_shots"] = t.cumulative_shots;
  d["evaluations"] = t.opt.evaluations;
  return d;
}

} // namespace

PYBIND11_MODULE(_pvqe, m) {
  m.doc() = "Photonic VQE simulator core";
  m.attr("__version__") = version_string();

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<DimensionError>(m, "DimensionError", base.ptr());
  py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());

  py::class_<OperatorSum>(m, "OperatorSum")
      .def(py::init(&make_operator), py::arg("terms"))
      .def_static("parse", [](const std::string &text) { return parse_operator_sum(std::string_view(text)); })
      .def_property_readonly("num_qubits", &OperatorSum::num_qubits)
      .def("terms",
           [](const OperatorSum &op) {
             std::vector<std::pair<Complex, std::string>> out;
             for (const auto &t : op.terms()) out.emplace_back(t.coefficient, t.string.str());
             return out;
           })
      .def("coefficient", [](const OperatorSum &op, const std::string &s) { return op.coefficient(PauliString(s)); })
      .def("is_hermitian", [](const OperatorSum &op) { return op.is_hermitian(); })
      .def("to_matrix", &OperatorSum::to_matrix)
      .def("__len__", &OperatorSum::size)
      .def("__str__", &format_operator_sum)
      .def(py::self + py::self)
      .def(py::self - py::self)
      .def(py::self * py::self);

  m.def("build_h2", [](const std::vector<double> &w) { return build_h2(w); }, py::arg("weights"));
  m.def("build_hehplus", [](const std::vector<double> &w) { return build_hehplus(w); }, py::arg("weights"));
  m.def("build_heisenberg", &build_heisenberg, py::arg("w1"), py::arg("w2"), py::arg("w3"));
  m.def("build_schwinger", &build_schwinger, py::arg("mass"));
  m.def("schwinger_exact_levels", &schwinger_exact_levels, py::arg("mass"));
  m.def(
      "build_factoring",
      [](long n, const std::string &form) {
        if (form != "pauli" && form != "projector") throw ValidationError("form must be pauli or projector");
        return build_factoring(n, form == "pauli" ? FactoringForm::Pauli : FactoringForm::Projector);
      },
      py::arg("n") = 35, py::arg("form") = "pauli");
  m.def(
      "load_molecule",
      [](const std::string &path, std::size_t row) {
        const MolecularCoefficients t = load_coefficients(path);
        if (row >= t.rows.size()) throw ValidationError("row out of range");
        return py::make_tuple(t.hamiltonian(row), t.rows[row].bond_length, t.rows[row].reference_energy);
      },
      py::arg("path"), py::arg("row") = 0);
  m.def("coefficient_rows", [](const std::string &path) { return load_coefficients(path).rows.size(); });

  m.def("exact_eigensolve", &exact_eigensolve, py::arg("op"));
  m.def("ground_energy", &ground_energy, py::arg("op"));
  m.def(
      "expectation",
      [](const CVector &psi, const OperatorSum &op) { return expectation_exact(StateVector(psi), op); },
      py::arg("state"), py::arg("op"));

  m.def(
      "groups",
      [](const OperatorSum &op, const std::string &grouping) {
        std::vector<std::vector<std::string>> out;
        for (const auto &g : make_groups(op, grouping_from_string(grouping))) {
          std::vector<std::string> strs;
          for (const auto &s : g.strings) strs.push_back(s.str());
          out.push_back(std::move(strs));
        }
        return out;
      },
      py::arg("op"), py::arg("grouping") = "qwc");
  m.def(
      "estimate",
      [](const OperatorSum &op, const CVector &psi, const std::string &grouping, std::uint64_t shots,
         std::uint64_t seed) {
        const auto groups = make_groups(op, grouping_from_string(grouping));
        ShotPlan plan;
        plan.shots_per_group = shots;
        const Estimate e = estimate_pauli_sum(StateVector(psi), op, groups, plan, seed);
        return py::make_tuple(e.value, e.std_error, e.shots);
      },
      py::arg("op"), py::arg("state"), py::arg("grouping") = "qwc", py::arg("shots") = 1000, py::arg("seed") = 0);

  m.def(
      "haar_unitary",
      [](std::size_t dim, std::uint64_t seed) {
        std::mt19937_64 rng(seed);
        return haar_unitary(dim, rng);
      },
      py::arg("dim"), py::arg("seed") = 0);
  m.def(
      "decompose",
      [](const CMatrix &u, const std::string &layout) {
        const BeamSplitterMesh mesh = decompose(u, layout_from(layout));
        std::vector<std::tuple<std::size_t, std::size_t, double, double>> el;
        for (const auto &e : mesh.elements) el.emplace_back(e.m, e.n, e.theta, e.phi);
        return py::make_tuple(el, mesh.output_phases);
      },
      py::arg("u"), py::arg("layout") = "clements");
  m.def(
      "reconstruct",
      [](std::size_t modes, const std::vector<std::tuple<std::size_t, std::size_t, double, double>> &elements,
         const std::vector<double> &phases) {
        BeamSplitterMesh mesh;
        mesh.mode_count = modes;
        for (const auto &[a, b, t, p] : elements) mesh.elements.push_back({a, b, t, p});
        mesh.output_phases = phases;
        return mesh_reconstruct(mesh);
      },
      py::arg("modes"), py::arg("elements"), py::arg("output_phases"));
  m.def(
      "lossy_fidelity",
      [](const CMatrix &u, const std::string &layout, double t) {
        return mesh_fidelity(u, mesh_with_loss(decompose(u, layout_from(layout)), t));
      },
      py::arg("u"), py::arg("layout"), py::arg("transmission"));
  m.def("permanent", &permanent, py::arg("a"));
  m.def(
      "two_photon_coincidence",
      [](const CMatrix &u, std::size_t a, std::size_t b) {
        FockState in;
        in.occupations.assign(static_cast<std::size_t>(u.rows()), 0);
        in.occupations.at(a) += 1;
        in.occupations.at(b) += 1;
        const AmplitudeMap out = fock_evolve(u, in);
        FockState target = in;
        return std::norm(out.amplitude(target));
      },
      py::arg("u"), py::arg("a") = 0, py::arg("b") = 1);

  m.def(
      "bitflip_confusion", [](std::size_t k, double p) { return bitflip_confusion(k, p).entries(); },
      py::arg("num_qubits"), py::arg("p"));
  m.def(
      "mitigate",
      [](const RVector &p, const RMatrix &m) { return mitigate_distribution(p, ConfusionMatrix(m)).p; },
      py::arg("p"), py::arg("confusion"));
  m.def(
      "zne_extrapolate",
      [](const std::vector<std::tuple<double, double, double>> &pts) {
        std::vector<ZnePoint> v;
        for (const auto &[e, E, s] : pts) v.push_back({e, E, s});
        const ZneResult r = zne_extrapolate(v);
        return py::make_tuple(r.value, r.std_error);
      },
      py::arg("points"));
  m.def("zne_variance", &zne_variance, py::arg("sigma"), py::arg("eps1"), py::arg("eps2"));

  m.def(
      "raw_qudit_state", [](std::size_t dim, const RVector &theta) { return raw_qudit_state(dim, theta).amplitudes(); },
      py::arg("dim"), py::arg("theta"));
  m.def(
      "normalize_config", [](const std::string &text) { return config_to_json(parse_config(text)); },
      py::arg("config_json"));
  m.def(
      "run_vqe",
      [](const std::string &text) {
        const VQEConfig cfg = parse_config(text);
        VQETrace t;
        {
          py::gil_scoped_release release;
          t = run_vqe(cfg);
        }
        return trace_dict(t);
      },
      py::arg("config_json"));
  m.def(
      "cli",
      [](const std::vector<std::string> &args) {
        std::ostringstream out, err;
        const int rc = dispatch(args, out, err);
        return py::make_tuple(rc, out.str(), err.str());
      },
      py::arg("args"));
}
