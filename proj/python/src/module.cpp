#include "cnp/app/runs.hpp"
#include "cnp/parallel.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace cnp;

namespace {

app::RunConfig config_from(const std::string& text, app::Experiment kind)
{
    return app::parse_config(text, kind);
}

py::dict report_dict(const nonlinear::SolveReport& r)
{
    py::list residuals;
    for (const auto& it : r.history)
        residuals.append(it.residual);
    py::dict d;
    d["converged"] = r.converged();
    d["message"] = r.message;
    d["iterations"] = r.iterations();
    d["residuals"] = residuals;
    d["krylov_iterations"] = r.total_krylov_iterations();
    return d;
}

py::list mms(const std::string& config, const std::string& out)
{
    const auto result = app::run_mms(config_from(config, app::Experiment::Mms), out);
    py::list rows;
    for (std::size_t i = 0; i < result.rows.size(); ++i) {
        const auto& row = result.rows[i];
        py::dict d;
        d["level"] = row.level;
        d["elements"] = row.elements;
        d["dofs"] = row.dofs;
        d["error_phi"] = row.error_phi;
        d["error_c1"] = row.error_c1;
        d["rate_phi"] = row.rate_phi;
        d["rate_c1"] = row.rate_c1;
        d["newton"] = report_dict(result.reports[i]);
        rows.append(d);
    }
    return rows;
}

py::dict reactor(const std::string& config, const std::string& out)
{
    const auto r = app::run_reactor(config_from(config, app::Experiment::Reactor), out);
    py::dict d;
    d["level"] = r.level;
    d["elements"] = r.elements;
    d["dofs"] = r.dofs;
    d["anode_current"] = r.currents.anode;
    d["cathode_current"] = r.currents.cathode;
    d["current_balance"] = r.current_balance;
    d["eliminated_inlet"] = r.eliminated_inlet;
    d["eliminated_inlet_interior"] = r.eliminated_inlet_interior;
    d["min_recovered"] = r.min_recovered;
    d["warnings"] = r.warnings;
    d["newton"] = report_dict(r.report);
    return d;
}

py::list solvecheck(const std::string& config, const std::string& out)
{
    py::list rows;
    for (const auto& r : app::run_solvecheck(config_from(config, app::Experiment::Solvecheck), out)) {
        py::dict inner;
        for (const auto& b : r.blocks)
            inner[py::str(b.label)] = b.mean_iterations();
        py::dict d;
        d["level"] = r.level;
        d["elements"] = r.elements;
        d["dofs"] = r.dofs;
        d["pc"] = r.concentration_pc == linalg::PcType::Gmg ? "mg" : "asm";
        d["subdomains"] = r.subdomains;
        d["outer_iterations"] = r.outer_iterations;
        d["converged"] = r.converged;
        d["inner_iterations"] = inner;
        rows.append(d);
    }
    return rows;
}

py::dict read_vtk(const std::string& path)
{
    const auto data = app::read_vtk(std::filesystem::path(path));
    py::dict point, cell;
    for (const auto& a : data.point_data)
        point[py::str(a.name)] = a.values;
    for (const auto& a : data.cell_data)
        cell[py::str(a.name)] = a.values;
    py::dict d;
    d["points"] = data.points;
    d["cell_types"] = data.cell_types;
    d["point_data"] = point;
    d["cell_data"] = cell;
    return d;
}

} // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "DG solver for electroneutral multi-ion transport";

    // later registrations are tried first
    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<app::ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<app::SolveFailure>(m, "SolveFailure", PyExc_RuntimeError);
    py::register_exception<app::IoError>(m, "IoError", PyExc_OSError);

    m.def("set_num_threads", &set_num_threads, py::arg("n"));
    m.def("set_deterministic", &set_deterministic, py::arg("on"));
    m.def("observed_rate", &app::observed_rate, py::arg("e_coarse"), py::arg("e_fine"));
    m.def("check_config", [](const std::string& text, const std::string& experiment) {
        app::parse_config(text, app::experiment_from_string(experiment));
    }, py::arg("text"), py::arg("experiment"), "Raises ConfigError on an invalid document.");
    m.def("run_mms", &mms, py::arg("config"), py::arg("out"));
    m.def("run_reactor", &reactor, py::arg("config"), py::arg("out"));
    m.def("run_solvecheck", &solvecheck, py::arg("config"), py::arg("out"));
    m.def("read_vtk", &read_vtk, py::arg("path"));
}
