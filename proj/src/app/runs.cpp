#include "cnp/app/runs.hpp"

#include "cnp/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace cnp::app {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double elapsed(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// Wall times break bit-for-bit reproducibility, so they are zeroed in deterministic mode.
double reported_time(double seconds) { return deterministic() ? 0.0 : seconds; }

constexpr double kMolar = 1e-3; // mol/m^3 -> M

std::string vtk_name(int level) { return "fields_level" + std::to_string(level) + ".vtk"; }

std::string safe(const std::string& name)
{
    std::string s;
    for (char c : name)
        s.push_back(c == ' ' ? '_' : c);
    return s;
}

std::vector<std::string> summary_header(const std::vector<std::string>& fields)
{
    std::vector<std::string> h{"level",           "elements",        "dofs",           "status",
                               "newton_iterations", "initial_residual", "final_residual", "outer_iterations"};
    for (const auto& f : fields)
        h.push_back("inner_iterations_" + safe(f));
    return h;
}

void summary_values(CsvTable& t, int level, std::size_t elements, std::size_t dofs, const nonlinear::SolveReport& r)
{
    t << level << elements << dofs << nonlinear::to_string(r.status) << r.iterations() << r.initial_residual()
      << r.final_residual() << r.total_krylov_iterations();
    for (std::size_t f = 0; f < r.fields.size(); ++f)
        t << r.total_inner_iterations(f);
}

std::vector<std::string> field_names(const physics::NondimSystem& s)
{
    std::vector<std::string> f{"phi"};
    for (int r = 0; r < s.num_retained(); ++r)
        f.push_back(s.names[s.retained[r]]);
    return f;
}

void write_log(const nonlinear::SolverLog& log, const fs::path& out)
{
    auto os = open_output(out / "solver_log.csv");
    log.write_csv(os);
    os.close();
    if (!os)
        throw IoError("failed writing solver_log.csv");
}

mesh::MeshHierarchy sub_hierarchy(const mesh::MeshHierarchy& h, std::size_t finest)
{
    mesh::MeshHierarchy s;
    for (std::size_t l = 0; l <= finest; ++l) {
        s.levels.push_back(h.levels[l]);
        s.parent_map.push_back(h.parent_map[l]);
    }
    return s;
}

mesh::MeshHierarchy reactor_hierarchy(const ReactorOptions& r)
{
    try {
        auto h = mesh::coarsen_to_hierarchy(make_reactor_mesh(r.setup), r.hierarchy_levels);
        for (int i = 0; i < r.refinements; ++i)
            h = mesh::refine_uniform(h);
        return h;
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("reactor mesh: ") + e.what());
    }
}

assembly::CnpProblem reactor_problem(std::shared_ptr<const fe::FeSpace> space, const ReactorSetup& setup)
{
    try {
        auto pb = make_reactor_problem(std::move(space), setup);
        pb.check();
        return pb;
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("reactor problem: ") + e.what());
    }
}

} // namespace

double observed_rate(double e_coarse, double e_fine) { return std::log2(e_coarse / e_fine); }

MmsResult run_mms(const RunConfig& cfg, const fs::path& out)
{
    cfg.check();
    ensure_directory(out);
    const auto mc = physics::mms_case();
    const auto fields = field_names(mc.system);

    MmsResult result;
    CsvTable conv({"level", "elements", "dofs", "error_phi", "error_c1", "rate_phi", "rate_c1"});
    auto sh = summary_header(fields);
    sh.push_back("wall_time_s");
    CsvTable summary(sh);
    nonlinear::SolverLog log;
    auto persist = [&] {
        conv.write(out / "convergence.csv");
        summary.write(out / "summary.csv");
        write_log(log, out);
    };

    mesh::MeshHierarchy h;
    try {
        h = mesh::make_hierarchy(mesh::build_unit_box_mesh(cfg.mms.dim, cfg.mms.cells));
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("mms mesh: ") + e.what());
    }
    for (int l = 0; l < cfg.mms.levels; ++l) {
        if (l > 0)
            h = mesh::refine_uniform(h);
        auto space = std::make_shared<fe::FeSpace>(std::make_shared<mesh::Mesh>(h.finest()), cfg.order);
        const auto pb = make_mms_problem(space);
        log.set_level(l);

        const auto t0 = Clock::now();
        fe::BlockState state(space, pb.num_fields());
        nonlinear::SolveReport rep;
        try {
            if (cfg.mms.exact_initial_guess) {
                const auto p = fe::interpolate(*space, mc.phi_exact);
                const auto c = fe::interpolate(*space, mc.c1_exact);
                std::copy(p.begin(), p.end(), state.field(0).begin());
                std::copy(c.begin(), c.end(), state.field(1).begin());
            } else {
                state = nonlinear::initial_guess(pb, h, cfg.dg);
            }
            rep = nonlinear::solve_cnp(pb, cfg.dg, state, h, cfg.newton, cfg.linear, &log);
        } catch (const linalg::SolverError& e) {
            persist();
            throw SolveFailure("level " + std::to_string(l) + ": " + e.what());
        }
        const double seconds = elapsed(t0);

        ConvergenceRow row;
        row.level = l;
        row.elements = space->mesh().num_elements();
        row.dofs = state.data.size();
        row.error_phi = fe::l2_error(*space, state.field(0), mc.phi_exact);
        row.error_c1 = fe::l2_error(*space, state.field(1), mc.c1_exact);
        row.rate_phi = row.rate_c1 = std::numeric_limits<double>::quiet_NaN();
        if (!result.rows.empty()) {
            row.rate_phi = observed_rate(result.rows.back().error_phi, row.error_phi);
            row.rate_c1 = observed_rate(result.rows.back().error_c1, row.error_c1);
        }

        summary.row();
        summary_values(summary, l, row.elements, row.dofs, rep);
        summary << reported_time(seconds);
        if (!rep.converged()) {
            persist();
            throw SolveFailure("level " + std::to_string(l) + ": Newton " + nonlinear::to_string(rep.status) +
                               (rep.message.empty() ? "" : " (" + rep.message + ")"));
        }
        conv.row() << row.level << row.elements << row.dofs << row.error_phi << row.error_c1 << row.rate_phi
                   << row.rate_c1;
        result.rows.push_back(row);
        result.reports.push_back(std::move(rep));

        if (cfg.write_vtk) {
            DgVtkWriter w(*space);
            w.add_field("phi", state.field(0));
            w.add_field("c1", state.field(1));
            w.add_field("phi_exact", fe::interpolate(*space, mc.phi_exact));
            w.add_field("c1_exact", fe::interpolate(*space, mc.c1_exact));
            write_vtk(w.data(), out / vtk_name(l), "cnp mms level " + std::to_string(l));
        }
        persist();
    }
    return result;
}

ReactorResult run_reactor(const RunConfig& cfg, const fs::path& out)
{
    cfg.check();
    ensure_directory(out);
    const auto& setup = cfg.reactor.setup;
    const auto h = reactor_hierarchy(cfg.reactor);
    auto space = std::make_shared<fe::FeSpace>(std::make_shared<mesh::Mesh>(h.finest()), cfg.order);
    const auto pb = reactor_problem(space, setup);
    const auto& sys = pb.system;
    const auto fields = field_names(sys);

    ReactorResult res;
    res.level = cfg.reactor.refinements;
    res.elements = space->mesh().num_elements();
    nonlinear::SolverLog log;
    log.set_level(res.level);

    const auto t0 = Clock::now();
    fe::BlockState state(space, pb.num_fields());
    try {
        state = nonlinear::initial_guess(pb, h, cfg.dg);
        res.report = nonlinear::solve_cnp(pb, cfg.dg, state, h, cfg.newton, cfg.linear, &log);
    } catch (const linalg::SolverError& e) {
        write_log(log, out);
        throw SolveFailure(e.what());
    }
    const double seconds = elapsed(t0);
    res.dofs = state.data.size();

    res.currents = assembly::electrode_currents(state, pb);
    const double big = std::max(std::abs(res.currents.anode), std::abs(res.currents.cathode));
    res.current_balance = big > 0.0 ? std::abs(res.currents.anode + res.currents.cathode) / big : 0.0;

    // eliminated species on the inlet: inflow data and interior trace
    const int m = sys.eliminated;
    const double to_molar = sys.c_scale[m] * kMolar;
    double inflow = 0.0;
    for (int r = 0; r < sys.num_retained(); ++r)
        inflow += sys.recovery(r) * sys.c_in[sys.retained[r]];
    res.eliminated_inlet = inflow * to_molar;

    const auto& mesh = space->mesh();
    const auto& ref = space->ref();
    double area = 0.0, integral = 0.0;
    for (const auto& bf : mesh.boundary_faces()) {
        if (bf.tag != mesh::BoundaryTag::Inlet)
            continue;
        const auto& rule = ref.face_rule(bf.local_face);
        const auto& tab = ref.face_tab(bf.local_face);
        const double a = mesh.face_area(bf.element, bf.local_face);
        for (int q = 0; q < tab.num_points; ++q) {
            double v = 0.0;
            for (int r = 0; r < sys.num_retained(); ++r) {
                const auto c = state.field(1 + r);
                double cr = 0.0;
                for (int i = 0; i < tab.num_basis; ++i)
                    cr += c[space->offset(bf.element) + i] * tab.value(q, i);
                v += sys.recovery(r) * cr;
            }
            integral += a * rule.weights[q] * v;
            area += a * rule.weights[q];
        }
    }
    res.eliminated_inlet_interior = area > 0.0 ? integral / area * to_molar : 0.0;

    const auto recovered = assembly::recover_eliminated(state, sys);
    const auto it = std::min_element(recovered.begin(), recovered.end());
    res.min_recovered = *it * to_molar;
    {
        const auto idx = static_cast<std::size_t>(it - recovered.begin());
        const std::size_t e = idx / static_cast<std::size_t>(space->dofs_per_element());
        const int node = static_cast<int>(idx % static_cast<std::size_t>(space->dofs_per_element()));
        res.min_recovered_at = space->to_physical(e, ref.nodes()[node]);
        for (double& x : res.min_recovered_at)
            x *= setup.length;
    }
    for (int k = 0; k < static_cast<int>(sys.names.size()); ++k) {
        const int f = assembly::field_of_species(sys, k);
        if (f < 0)
            continue;
        const auto c = state.field(1 + f);
        const auto mn = std::min_element(c.begin(), c.end());
        if (*mn < 0.0)
            res.warnings.push_back("negative concentration of " + sys.names[k] + ": " +
                                   std::to_string(*mn * sys.c_scale[k] * kMolar) + " M");
    }
    if (res.min_recovered < 0.0) {
        const auto& x = res.min_recovered_at;
        res.warnings.push_back("negative recovered concentration of " + sys.names[m] + ": " +
                               std::to_string(res.min_recovered) + " M at (" + std::to_string(x[0]) + ", " +
                               std::to_string(x[1]) + ", " + std::to_string(x[2]) + ") m");
    }

    auto header = summary_header(fields);
    for (const char* c : {"anode_current_A", "cathode_current_A", "current_balance", "anode_area_m2",
                          "cathode_area_m2"})
        header.push_back(c);
    header.push_back("inlet_" + safe(sys.names[m]) + "_M");
    header.push_back("inlet_trace_" + safe(sys.names[m]) + "_M");
    header.push_back("min_" + safe(sys.names[m]) + "_M");
    header.push_back("wall_time_s");
    CsvTable summary(header);
    summary.row();
    summary_values(summary, res.level, res.elements, res.dofs, res.report);
    summary << res.currents.anode << res.currents.cathode << res.current_balance << res.currents.anode_area
            << res.currents.cathode_area << res.eliminated_inlet << res.eliminated_inlet_interior << res.min_recovered
            << reported_time(seconds);
    summary.write(out / "summary.csv");
    write_log(log, out);

    if (cfg.write_vtk) {
        DgVtkWriter w(*space, setup.length);
        std::vector<double> phi(state.field(0).begin(), state.field(0).end());
        for (double& v : phi)
            v = physics::dimensional_potential(sys, v);
        w.add_field("phi_V", phi);
        for (int k = 0; k < static_cast<int>(sys.names.size()); ++k) {
            const int f = assembly::field_of_species(sys, k);
            const double s = sys.c_scale[k] * kMolar;
            if (f >= 0)
                w.add_field("c_" + safe(sys.names[k]) + "_M", state.field(1 + f), s);
            else
                w.add_field("c_" + safe(sys.names[k]) + "_M", recovered, s);
        }
        w.add_boundary_field("current_density_A_m2", assembly::electrode_current_density(state, pb));
        write_vtk(w.data(), out / vtk_name(res.level), "cnp reactor");
    }

    if (!res.report.converged())
        throw SolveFailure("Newton " + nonlinear::to_string(res.report.status) +
                           (res.report.message.empty() ? "" : " (" + res.report.message + ")"));
    return res;
}

std::vector<SolvecheckRow> run_solvecheck(const RunConfig& cfg, const fs::path& out)
{
    cfg.check();
    ensure_directory(out);
    const auto full = reactor_hierarchy(cfg.reactor);
    const int nlev = static_cast<int>(full.size());

    std::vector<std::string> header{"level", "elements", "dofs", "concentration_pc", "asm_subdomains",
                                    "outer_iterations", "converged"};
    std::vector<SolvecheckRow> rows;
    nonlinear::SolverLog log;
    CsvTable* table = nullptr;
    std::unique_ptr<CsvTable> owned;

    for (int l = nlev - cfg.solvecheck.levels; l < nlev; ++l) {
        const auto h = sub_hierarchy(full, static_cast<std::size_t>(l));
        auto space = std::make_shared<fe::FeSpace>(std::make_shared<mesh::Mesh>(h.finest()), cfg.order);
        const auto pb = reactor_problem(space, cfg.reactor.setup);
        const auto fields = field_names(pb.system);
        if (!table) {
            for (const auto& f : fields) {
                header.push_back("applications_" + safe(f));
                header.push_back("mean_inner_" + safe(f));
                header.push_back("max_inner_" + safe(f));
            }
            header.push_back("wall_time_s");
            owned = std::make_unique<CsvTable>(header);
            table = owned.get();
        }
        log.set_level(l);

        fe::BlockState state(space, pb.num_fields());
        try {
            state = nonlinear::initial_guess(pb, h, cfg.dg);
        } catch (const linalg::SolverError& e) {
            throw SolveFailure(e.what());
        }
        const auto J = assembly::assemble_jacobian(state, pb, cfg.dg);
        const auto coarse = nonlinear::coarse_jacobians(state, pb, h, cfg.dg);
        auto b = assembly::assemble_residual(state, pb, cfg.dg);
        for (double& v : b)
            v = -v;

        for (const auto pc : cfg.solvecheck.preconditioners) {
            const std::vector<int> subs = pc == linalg::PcType::Asm ? cfg.solvecheck.asm_subdomains
                                                                    : std::vector<int>{cfg.linear.concentration.asm_subdomains};
            for (int nsub : subs) {
                auto lin = cfg.linear;
                lin.concentration.pc = pc;
                lin.concentration.asm_subdomains = nsub;
                const auto t0 = Clock::now();
                SolvecheckRow row;
                row.level = l;
                row.elements = space->mesh().num_elements();
                row.dofs = b.size();
                row.concentration_pc = pc;
                row.subdomains = nsub;
                std::vector<double> dx(b.size(), 0.0);
                const std::string tag = (pc == linalg::PcType::Gmg ? "outer_gmg_" : "outer_asm_") + std::to_string(nsub);
                try {
                    const linalg::Fieldsplit P(J, lin.blocks(J.num_blocks), &h, cfg.order, coarse);
                    const auto r = linalg::solve(
                        [&J](std::span<const double> x, std::span<double> y) { J.apply(x, y); }, b, dx, &P,
                        lin.outer, [&log, &tag](int k, double res) { log.record(0, tag, k, res); });
                    row.outer_iterations = r.iterations;
                    row.converged = r.converged();
                    row.blocks = P.stats();
                } catch (const linalg::SolverError& e) {
                    table->write(out / "summary.csv");
                    write_log(log, out);
                    throw SolveFailure(e.what());
                }
                row.seconds = elapsed(t0);

                table->row() << row.level << row.elements << row.dofs
                             << (pc == linalg::PcType::Gmg ? std::string("mg") : std::string("asm")) << row.subdomains
                             << row.outer_iterations << (row.converged ? 1 : 0);
                for (const auto& s : row.blocks)
                    *table << s.applications << s.mean_iterations() << s.max_iterations;
                *table << reported_time(row.seconds);
                rows.push_back(std::move(row));
            }
        }
        table->write(out / "summary.csv");
        write_log(log, out);
    }
    for (const auto& r : rows)
        if (!r.converged)
            throw SolveFailure("outer Krylov solve did not converge on level " + std::to_string(r.level));
    return rows;
}

} // namespace cnp::app
