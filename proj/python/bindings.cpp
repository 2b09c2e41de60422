#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "commands.hpp"
#include "finsler/errors.hpp"
#include "finsler/flow.hpp"
#include "finsler/integrals.hpp"
#include "finsler/sampling.hpp"
#include "finsler/tensors.hpp"

namespace py = pybind11;
using namespace finsler;

namespace {

py::list rows(const Matrix& m) {
  py::list out;
  for (int i = 0; i < m.n; ++i) {
    py::list row;
    for (int j = 0; j < m.n; ++j) row.append(m(i, j));
    out.append(row);
  }
  return out;
}

PhasePoint point(const Vector& x, const Vector& y) { return {x, y}; }

py::dict packet_dict(const CurvaturePacket& c) {
  py::dict d;
  d["F"] = c.F;
  d["F_y"] = c.F_y;
  d["g"] = rows(c.g);
  d["g_inv"] = rows(c.g_inv);
  d["h"] = rows(c.h);
  d["G"] = c.G;
  d["N"] = rows(c.N);
  d["jacobi"] = rows(c.jacobi);
  d["R"] = c.R;
  d["B"] = c.B;
  d["E"] = rows(c.E);
  d["E_s"] = rows(c.E_s);
  d["E_cl"] = rows(c.E_cl);
  d["tau"] = c.tau;
  d["S"] = c.S;
  d["S_y"] = c.S_y;
  d["chi"] = c.chi;
  d["hamel"] = rows(c.hamel);
  d["I"] = c.I;
  d["J"] = c.J;
  d["nabla_g"] = rows(c.nabla_g);
  d["nabla_E"] = c.nabla_E ? py::object(rows(*c.nabla_E)) : py::none();
  d["flag"] = py::dict(py::arg("is_scalar") = c.flag.is_scalar, py::arg("kappa") = c.flag.kappa,
                       py::arg("residual") = c.flag.residual);
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Finsler curvature tower, first integrals and geodesic flow";

  auto base = py::register_exception<Error>(m, "FinslerError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<UnknownFieldError>(m, "UnknownFieldError", base.ptr());
  py::register_exception<SingularMetricError>(m, "SingularMetricError", base.ptr());
  py::register_exception<HomogeneityError>(m, "HomogeneityError", base.ptr());

  py::class_<MetricSpec>(m, "MetricSpec")
      .def_readonly("name", &MetricSpec::name)
      .def_readonly("dimension", &MetricSpec::dimension)
      .def_property_readonly("family", [](const MetricSpec& s) { return std::string(family_name(s.family)); })
      .def("__repr__", [](const MetricSpec& s) {
        return "<MetricSpec " + s.name + " (" + std::string(family_name(s.family)) + ", n=" +
               std::to_string(s.dimension) + ")>";
      });

  m.def("load_metric", &load_metric_file, py::arg("path"));
  m.def("parse_metric", &parse_metric, py::arg("text"));
  m.def("euclidean_metric", &euclidean_metric, py::arg("n"));

  m.def(
      "F2", [](const MetricSpec& s, const Vector& x, const Vector& y) { return eval_F2_value(s, point(x, y)); },
      py::arg("spec"), py::arg("x"), py::arg("y"));

  m.def(
      "packet",
      [](const MetricSpec& s, const Vector& x, const Vector& y, int order) {
        return packet_dict(compute_packet(s, point(x, y), order));
      },
      py::arg("spec"), py::arg("x"), py::arg("y"), py::arg("order") = 6);

  m.def(
      "first_integrals",
      [](const MetricSpec& s, const Vector& x, const Vector& y) {
        const auto fi = first_integrals(compute_packet(s, point(x, y), 5));
        py::dict d;
        d["EE"] = rows(fi.EE);
        d["f"] = fi.f;
        d["c"] = fi.c;
        d["newton_residual"] = fi.newton_residual;
        d["bordered_value"] = fi.bordered_value;
        d["f1_cl"] = fi.f1_cl;
        return d;
      },
      py::arg("spec"), py::arg("x"), py::arg("y"));

  m.def(
      "closed_forms",
      [](const Vector& x, const Vector& y) {
        const auto v = closed_forms(point(x, y));
        return py::make_tuple(v.g1, v.g2);
      },
      py::arg("x"), py::arg("y"));

  m.def("field_ids", &field_ids, py::arg("spec"));
  m.def(
      "evaluate",
      [](const MetricSpec& s, const std::vector<std::string>& names, const Vector& x, const Vector& y) {
        std::vector<FieldId> ids;
        for (const auto& n : names) ids.push_back(parse_field(s, n));
        return evaluate_fields(s, ids, point(x, y));
      },
      py::arg("spec"), py::arg("fields"), py::arg("x"), py::arg("y"));

  m.def(
      "bracket",
      [](const MetricSpec& s, const std::string& a, const std::string& b, const Vector& x, const Vector& y) {
        const auto r = poisson_bracket(s, a, b, point(x, y));
        return py::make_tuple(r.value, r.scale);
      },
      py::arg("spec"), py::arg("a"), py::arg("b"), py::arg("x"), py::arg("y"));

  m.def(
      "sample_points",
      [](const MetricSpec& s, int count, std::uint64_t seed) {
        py::list out;
        for (const auto& p : sample_phase_points(s, count, seed)) out.append(py::make_tuple(p.x, p.y));
        return out;
      },
      py::arg("spec"), py::arg("count"), py::arg("seed") = 1);

  m.def(
      "integrate",
      [](const MetricSpec& s, const Vector& x, const Vector& y, double t_max, double rtol, double atol,
         double sample_dt) {
        IntegratorSettings st;
        st.rtol = rtol;
        st.atol = atol;
        st.sample_dt = sample_dt;
        Trajectory tr;
        {
          py::gil_scoped_release release;
          tr = integrate(s, point(x, y), t_max, st);
        }
        py::list t, xs, ys;
        for (const auto& smp : tr.samples) {
          t.append(smp.t);
          xs.append(smp.state.x);
          ys.append(smp.state.y);
        }
        py::dict d;
        d["t"] = t;
        d["x"] = xs;
        d["y"] = ys;
        d["status"] = std::string(status_name(tr.status));
        d["exit_reason"] = tr.exit_reason;
        d["steps"] = tr.stats.steps;
        return d;
      },
      py::arg("spec"), py::arg("x"), py::arg("y"), py::arg("t_max"), py::arg("rtol") = 1e-10,
      py::arg("atol") = 1e-12, py::arg("sample_dt") = 0.0);

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = cli::run(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"));
}
