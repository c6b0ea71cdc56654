#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cato/bench.hpp"
#include "cato/model.hpp"
#include "cato/recompress.hpp"
#include "cato/solver.hpp"

namespace py = pybind11;
using namespace cato;

namespace {

// Solutions cross the boundary as plain dicts: the python side only reads.
py::dict solution_dict(const Solution& sol) {
  py::dict d;
  d["eta"] = sol.eta_star;
  d["fog_hz"] = sol.fog_total;
  d["backhaul_bps"] = sol.backhaul_total;
  d["iterations"] = sol.iterations;
  py::list decs;
  for (const Decision& dec : sol.decisions) decs.append(dec);
  d["decisions"] = decs;
  return d;
}

}  // namespace

PYBIND11_MODULE(catopy, m) {
  m.doc() = "Fog/cloud offloading solver bindings";

  py::enum_<Mode>(m, "Mode")
      .value("Local", Mode::Local)
      .value("Fog", Mode::Fog)
      .value("Cloud", Mode::Cloud)
      .value("CloudRecompressed", Mode::CloudRecompressed);

  py::class_<Decision>(m, "Decision")
      .def(py::init<>())
      .def_readwrite("mode", &Decision::mode)
      .def_readwrite("omega_u", &Decision::omega_u)
      .def_readwrite("omega_f", &Decision::omega_f)
      .def_readwrite("f_u", &Decision::f_u)
      .def_readwrite("f_f", &Decision::f_f)
      .def_readwrite("p", &Decision::p)
      .def_readwrite("rho", &Decision::rho)
      .def_readwrite("d", &Decision::d);

  py::class_<UserProfile>(m, "UserProfile")
      .def_readonly("c_total", &UserProfile::c_total)
      .def_readonly("b_in", &UserProfile::b_in)
      .def_readonly("t_max", &UserProfile::t_max)
      .def_readonly("f_max", &UserProfile::f_max)
      .def_readonly("beta_lin", &UserProfile::beta_lin);

  py::class_<SystemConfig>(m, "SystemConfig")
      .def_readonly("f_fog_max", &SystemConfig::f_fog_max)
      .def_readonly("d_max", &SystemConfig::d_max)
      .def_readonly("t_cloud", &SystemConfig::t_cloud);

  py::class_<Instance>(m, "Instance")
      .def_readonly("seed", &Instance::seed)
      .def_readonly("users", &Instance::users)
      .def_readonly("config", &Instance::config);

  m.def("generate_instance", &generate_instance, py::arg("seed"), py::arg("k"),
        py::arg("overrides") = Overrides{});
  m.def("wedc", &wedc, py::arg("decision"), py::arg("user"), py::arg("config"));
  m.def(
      "total_delay",
      [](const Decision& d, const UserProfile& u, const SystemConfig& s) {
        return total_delay(d, u, s);
      },
      py::arg("decision"), py::arg("user"), py::arg("config"));

  py::register_exception<InfeasibleInstance>(m, "InfeasibleError");

  m.def(
      "solve",
      [](const Instance& inst, double epsilon) {
        return solution_dict(solve(inst, epsilon));
      },
      py::arg("instance"), py::arg("epsilon") = 1e-3,
      "Min-max solve over the local/fog/cloud routes; returns a dict.");
  m.def(
      "solve_ext",
      [](const Instance& inst, double epsilon, const std::string& algo,
         int segments, double lambda_step, int iters) {
        return solution_dict(
            solve_ext(inst, epsilon, algo, segments, lambda_step, iters));
      },
      py::arg("instance"), py::arg("epsilon") = 1e-3, py::arg("algo") = "pla",
      py::arg("segments") = 9, py::arg("lambda_step") = 5e-3,
      py::arg("iters") = 500,
      "Min-max solve with the fog-recompression route enabled.");
}
