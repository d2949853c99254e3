#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "traffic/config.hpp"
#include "traffic/dynamics.hpp"
#include "traffic/invariance.hpp"
#include "traffic/markov.hpp"
#include "traffic/velocity.hpp"

namespace py = pybind11;
using namespace traffic;
using namespace pybind11::literals;

namespace {

std::vector<double> to_vector(std::span<const double> s) { return {s.begin(), s.end()}; }

Configuration make_ring(double L, std::vector<double> x, py::object radius) {
  if (py::isinstance<py::float_>(radius) || py::isinstance<py::int_>(radius))
    return Configuration::ring(L, std::move(x), radius.cast<double>());
  return Configuration::ring(L, std::move(x), radius.cast<std::vector<double>>());
}

Configuration make_line(std::vector<double> x, py::object radius) {
  if (py::isinstance<py::float_>(radius) || py::isinstance<py::int_>(radius))
    return Configuration::line(std::move(x), radius.cast<double>());
  return Configuration::line(std::move(x), radius.cast<std::vector<double>>());
}

}  // namespace

PYBIND11_MODULE(_traffic, m) {
  m.doc() = "Parallel-update exclusion process: dynamics, invariant Markov measures, velocities.";

  auto domain = py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<AdmissibilityError>(m, "AdmissibilityError", domain.ptr());

  py::enum_<Space>(m, "Space").value("Lattice", Space::Lattice).value("Continuum", Space::Continuum);

  py::class_<ProcessParams>(m, "ProcessParams")
      .def(py::init<double, double, Space>(), py::arg("p"), py::arg("v"),
           py::arg("space") = Space::Continuum)
      .def_property_readonly("p", &ProcessParams::p)
      .def_property_readonly("v", &ProcessParams::v)
      .def_property_readonly("space", &ProcessParams::space);

  py::class_<Configuration>(m, "Configuration")
      .def_static("ring", &make_ring, py::arg("circumference"), py::arg("positions"), py::arg("radius"))
      .def_static("line", &make_line, py::arg("positions"), py::arg("radius"))
      .def_property_readonly("is_ring", &Configuration::is_ring)
      .def_property_readonly("circumference", &Configuration::circumference)
      .def_property_readonly("positions", [](const Configuration& c) { return to_vector(c.positions()); })
      .def_property_readonly("winding", [](const Configuration& c) { return to_vector(c.winding()); })
      .def_property_readonly("radii", [](const Configuration& c) {
        std::vector<double> r(c.size());
        for (std::size_t i = 0; i < r.size(); ++i) r[i] = c.radius(i);
        return r;
      })
      .def("wrapped_position", &Configuration::wrapped_position)
      .def("__len__", &Configuration::size)
      .def("__eq__", [](const Configuration& a, const Configuration& b) { return a == b; });

  m.def("is_admissible", [](const Configuration& c) { return check_admissible(c).ok; });
  m.def("gaps", &gaps);
  m.def("density", &density);
  m.def("radius_conjugate", &radius_conjugate, py::arg("cfg"), py::arg("r_new"));
  m.def("scale_shift", &scale_shift, py::arg("cfg"), py::arg("u"), py::arg("w"));
  m.def("encode_word", [](const Configuration& c) { return word_to_string(encode_word(c)); });
  m.def("decode_word", [](const std::string& w) { return decode_word(word_from_string(w)); });

  m.def("step", [](const Configuration& c, const ProcessParams& p, std::uint64_t seed, std::uint64_t t) {
    return step(c, p, CoinStream(seed), t);
  }, py::arg("cfg"), py::arg("params"), py::arg("seed"), py::arg("t"));
  m.def("run", [](const Configuration& c, const ProcessParams& p, std::uint64_t steps, std::uint64_t seed) {
    RunOptions opt;
    opt.steps = steps;
    opt.seed = seed;
    auto s = run(c, p, opt);
    return py::make_tuple(s.final_state, s.displacement);
  }, py::arg("cfg"), py::arg("params"), py::arg("steps"), py::arg("seed"),
     "Returns (final configuration, per-particle displacement).");
  m.def("coupled_gap_difference", [](const Configuration& a, const Configuration& b,
                                     const ProcessParams& pa, const ProcessParams& pb,
                                     std::uint64_t steps, std::uint64_t seed) {
    return coupled_run(a, b, pa, pb, steps, seed).max_gap_difference;
  });

  py::class_<MarkovMatrix>(m, "MarkovMatrix")
      .def_static("from_entries", &MarkovMatrix::from_entries)
      .def_property_readonly("entries", &MarkovMatrix::entries)
      .def_property_readonly("a", &MarkovMatrix::a)
      .def("stationary", &MarkovMatrix::stationary)
      .def("invariance_residual", &MarkovMatrix::invariance_residual);

  m.def("solve_parameter", &solve_parameter, py::arg("rho"), py::arg("p"));
  m.def("build_invariant_matrix", &build_invariant_matrix, py::arg("rho"), py::arg("p"));
  m.def("parry_matrix", [](const std::string& which) {
    if (which == "plus") return parry_matrix(TransitionStructure::plus());
    if (which == "minus") return parry_matrix(TransitionStructure::minus());
    if (which == "full") return parry_matrix(TransitionStructure::full());
    throw DomainError("expected plus, minus or full");
  });
  m.def("cylinder_measure", [](const MarkovMatrix& mm, const std::string& w) {
    return cylinder_measure(mm, Cylinder(w));
  });
  m.def("sample_ring_word", [](const MarkovMatrix& mm, std::size_t sites, std::uint64_t seed) {
    return word_to_string(sample_ring_word(mm, sites, seed));
  });
  m.def("pushforward", [](const MarkovMatrix& mm, const std::string& w, double p) {
    return one_step_cylinder_pushforward(mm, Cylinder(w), p);
  }, py::arg("matrix"), py::arg("word"), py::arg("p"));
  m.def("verify_invariance", [](const MarkovMatrix& mm, double p, std::size_t max_len, double tol) {
    auto r = verify_invariance(mm, p, max_len, tol);
    return py::dict("stationary"_a = r.stationary, "max_discrepancy"_a = r.max_discrepancy,
                    "worst"_a = r.worst_cylinder);
  }, py::arg("matrix"), py::arg("p"), py::arg("max_len") = 6, py::arg("tol") = 1e-10);

  m.def("theoretical_velocity", &theoretical_velocity, py::arg("rho"), py::arg("p"), py::arg("v"),
        py::arg("r"));
  m.def("theoretical_velocity_obstacles", &theoretical_velocity_obstacles);
  m.def("lattice_density", &lattice_density);
  m.def("invariant_initial_condition", &invariant_initial_condition, py::arg("rho"), py::arg("p"),
        py::arg("v"), py::arg("r"), py::arg("particles"), py::arg("seed"),
        py::arg("random_offset") = false);
  m.def("simulate_velocity", [](const Configuration& c, const ProcessParams& p, std::uint64_t steps,
                                std::uint64_t burn_in, std::uint64_t seed) {
    RunOptions opt;
    opt.steps = steps;
    opt.seed = seed;
    auto e = estimate_velocity(run(c, p, opt), burn_in);
    return py::make_tuple(e.value, e.std_error);
  }, py::arg("cfg"), py::arg("params"), py::arg("steps"), py::arg("burn_in"), py::arg("seed"),
     "Returns (V_hat, standard error).");
  m.def("fundamental_diagram", [](double p, double v, double r, const std::vector<double>& rhos,
                                  std::size_t particles, std::uint64_t steps, std::size_t replicas,
                                  std::uint64_t seed) {
    SimulationBudget b;
    b.particles = particles;
    b.steps = steps;
    b.replicas = replicas;
    py::list out;
    for (const auto& row : fundamental_diagram(p, v, r, rhos, b, seed))
      out.append(py::dict("rho"_a = row.rho, "v_theory"_a = row.v_theory, "v_hat"_a = row.v_hat,
                          "std_error"_a = row.std_error, "flux"_a = row.flux));
    return out;
  }, py::arg("p"), py::arg("v"), py::arg("r"), py::arg("rhos"), py::arg("particles") = 10080,
     py::arg("steps") = 20000, py::arg("replicas") = 1, py::arg("seed") = 0);
}
