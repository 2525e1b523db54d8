#include "cnp/nonlinear.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>

namespace cnp::nonlinear {

void NewtonConfig::check() const
{
    if (!(rtol > 0.0) || !(atol >= 0.0))
        throw InvalidArgument("Newton tolerances must be positive");
    if (max_iters < 1)
        throw InvalidArgument("Newton max_iters must be >= 1");
    if (!(ls_ratio > 0.0 && ls_ratio < 1.0))
        throw InvalidArgument("line-search ratio must lie in (0, 1)");
    if (!(ls_c > 0.0 && ls_c < 1.0) || ls_max < 0)
        throw InvalidArgument("invalid line-search parameters");
}

linalg::BlockSolverConfig LinearSolverConfig::default_potential()
{
    linalg::BlockSolverConfig b;
    b.krylov = {linalg::KrylovMethod::CG, 1e-1, 0.0, 500, 30};
    b.pc = linalg::PcType::Gmg;
    return b;
}

linalg::BlockSolverConfig LinearSolverConfig::default_concentration()
{
    linalg::BlockSolverConfig b;
    b.krylov = {linalg::KrylovMethod::GMRES, 1e-1, 0.0, 500, 30};
    b.pc = linalg::PcType::Asm;
    return b;
}

std::vector<linalg::BlockSolverConfig> LinearSolverConfig::blocks(int num_fields) const
{
    std::vector<linalg::BlockSolverConfig> b(static_cast<std::size_t>(num_fields), concentration);
    b[0] = potential;
    return b;
}

std::string to_string(NewtonStatus s)
{
    switch (s) {
    case NewtonStatus::Converged:
        return "converged";
    case NewtonStatus::LineSearchFailed:
        return "line_search_failed";
    case NewtonStatus::MaxIterations:
        return "max_iterations";
    case NewtonStatus::LinearSolverFailed:
        return "linear_solver_failed";
    case NewtonStatus::NotFinite:
        return "not_finite";
    }
    return "?";
}

long SolveReport::total_krylov_iterations() const
{
    long s = 0;
    for (const auto& h : history)
        s += h.krylov_iterations;
    return s;
}

long SolveReport::total_inner_iterations(std::size_t field) const
{
    long s = 0;
    for (const auto& h : history)
        if (field < h.inner_iterations.size())
            s += h.inner_iterations[field];
    return s;
}

void SolveReport::write_csv(std::ostream& os) const
{
    os << "newton_iteration,residual,step_length,krylov_iterations";
    for (const auto& f : fields)
        os << ",inner_" << f;
    os << ",seconds\n";
    os << std::setprecision(10);
    for (const auto& h : history) {
        os << h.iteration << ',' << h.residual << ',' << h.step_length << ',' << h.krylov_iterations;
        for (std::size_t f = 0; f < fields.size(); ++f)
            os << ',' << (f < h.inner_iterations.size() ? h.inner_iterations[f] : 0);
        os << ',' << h.seconds << '\n';
    }
}

void SolveReport::write_summary(std::ostream& os) const
{
    os << "newton status      : " << to_string(status) << '\n';
    if (!message.empty())
        os << "message            : " << message << '\n';
    os << "newton iterations  : " << iterations() << '\n';
    os << "residual           : " << std::scientific << std::setprecision(3) << initial_residual() << " -> "
       << final_residual() << std::defaultfloat << '\n';
    os << "outer krylov its   : " << total_krylov_iterations() << '\n';
    for (std::size_t f = 0; f < fields.size(); ++f)
        os << "inner its [" << fields[f] << "] : " << total_inner_iterations(f) << '\n';
    os << "wall time (s)      : " << std::fixed << std::setprecision(2) << wall_time << std::defaultfloat << '\n';
}

void SolverLog::record(int newton, const std::string& solver, int iteration, double residual)
{
    rows_.push_back({level_, newton, solver, iteration, residual});
}

void SolverLog::write_csv(std::ostream& os) const
{
    os << "level,newton_iteration,solver,iteration,residual\n" << std::setprecision(10);
    for (const auto& r : rows_)
        os << r.level << ',' << r.newton << ',' << r.solver << ',' << r.iteration << ',' << r.residual << '\n';
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

bool finite(const std::vector<double>& v)
{
    for (double x : v)
        if (!std::isfinite(x))
            return false;
    return true;
}

} // namespace

SolveReport newton_solve(const ResidualFn& residual, const JacobianFn& jacobian, const LinearSolveFn& linear,
                         std::vector<double>& x, const NewtonConfig& cfg)
{
    cfg.check();
    const auto t0 = Clock::now();
    SolveReport rep;
    std::vector<double> R = residual(x);
    double rn = linalg::norm2(R);
    rep.history.push_back({0, rn, 0.0, 0, {}, 0.0});
    if (!std::isfinite(rn)) {
        rep.status = NewtonStatus::NotFinite;
        rep.message = "initial residual is not finite";
        rep.wall_time = seconds_since(t0);
        return rep;
    }
    const double target = std::max(cfg.rtol * rn, cfg.atol);
    rep.status = NewtonStatus::MaxIterations;
    for (int it = 1; rn > target; ++it) {
        if (it > cfg.max_iters) {
            rep.status = NewtonStatus::MaxIterations;
            rep.message = "no convergence in " + std::to_string(cfg.max_iters) + " iterations";
            break;
        }
        const auto ts = Clock::now();
        const linalg::BlockMatrix J = jacobian(x);
        std::vector<double> b(R.size()), dx(R.size(), 0.0);
        for (std::size_t i = 0; i < R.size(); ++i)
            b[i] = -R[i];
        std::vector<long> inner;
        linalg::KrylovResult kr;
        try {
            kr = linear(it, J, b, dx, inner);
        } catch (const linalg::SolverError& e) {
            rep.status = NewtonStatus::LinearSolverFailed;
            rep.message = e.what();
            break;
        }
        if (!kr.converged()) {
            rep.status = NewtonStatus::LinearSolverFailed;
            rep.message = "outer Krylov solve " + linalg::to_string(kr.status) + " after " +
                          std::to_string(kr.iterations) + " iterations (relative residual " +
                          std::to_string(kr.relative_residual()) + ")";
            break;
        }

        double lambda = 1.0;
        std::vector<double> xt(x.size()), Rt;
        double rt = 0.0;
        bool accepted = false;
        for (int bt = 0; bt <= cfg.ls_max; ++bt) {
            for (std::size_t i = 0; i < x.size(); ++i)
                xt[i] = x[i] + lambda * dx[i];
            Rt = residual(xt);
            rt = finite(Rt) ? linalg::norm2(Rt) : INFINITY;
            if (rt <= (1.0 - cfg.ls_c * lambda) * rn) {
                accepted = true;
                break;
            }
            lambda *= cfg.ls_ratio;
        }
        if (!accepted) {
            rep.status = NewtonStatus::LineSearchFailed;
            rep.message = "line search failed at Newton iteration " + std::to_string(it);
            break;
        }
        x.swap(xt);
        R.swap(Rt);
        rn = rt;
        rep.history.push_back({it, rn, lambda, kr.iterations, inner, seconds_since(ts)});
    }
    if (rn <= target)
        rep.status = NewtonStatus::Converged;
    rep.wall_time = seconds_since(t0);
    return rep;
}

LinearSolveFn fieldsplit_solver(const LinearSolverConfig& cfg, const mesh::MeshHierarchy* hierarchy, int p,
                                SolverLog* log, const std::vector<linalg::BlockMatrix>* coarse)
{
    return [cfg, hierarchy, p, log, coarse](int newton, const linalg::BlockMatrix& J, std::span<const double> b,
                                            std::span<double> dx, std::vector<long>& inner) {
        std::span<const linalg::BlockMatrix> levels;
        if (coarse)
            levels = *coarse;
        const linalg::Fieldsplit P(J, cfg.blocks(J.num_blocks), hierarchy, p, levels);
        linalg::Monitor mon;
        if (log)
            mon = [log, newton](int k, double r) { log->record(newton, "outer", k, r); };
        const auto res = linalg::solve([&J](std::span<const double> x, std::span<double> y) { J.apply(x, y); }, b, dx,
                                       &P, cfg.outer, mon);
        inner.clear();
        for (const auto& s : P.stats())
            inner.push_back(s.iterations);
        return res;
    };
}

assembly::CnpProblem on_space(const assembly::CnpProblem& problem, std::shared_ptr<const fe::FeSpace> space)
{
    assembly::CnpProblem out = problem;
    out.space = std::move(space);
    return out;
}

std::vector<linalg::BlockMatrix> coarse_jacobians(const fe::BlockState& state, const assembly::CnpProblem& problem,
                                                  const mesh::MeshHierarchy& h, const assembly::DgParams& params)
{
    const int L = static_cast<int>(h.size());
    if (L < 1 || h.finest().num_elements() != problem.space->mesh().num_elements())
        throw InvalidArgument("hierarchy does not end at the problem mesh");
    std::vector<linalg::BlockMatrix> out(static_cast<std::size_t>(L - 1));
    fe::BlockState fine = state;
    for (int l = L - 2; l >= 0; --l) {
        auto space = std::make_shared<fe::FeSpace>(std::make_shared<mesh::Mesh>(h.levels[l]), problem.space->order());
        fe::BlockState coarse(space, problem.num_fields());
        for (int k = 0; k < problem.num_fields(); ++k) {
            const auto v = fe::restrict_nodal(*space, *fine.space, h.parent_map[l + 1], fine.field(k));
            std::copy(v.begin(), v.end(), coarse.field(k).begin());
        }
        out[l] = assembly::assemble_jacobian(coarse, on_space(problem, space), params);
        fine = std::move(coarse);
    }
    return out;
}

bool uses_gmg(const LinearSolverConfig& cfg)
{
    return cfg.potential.pc == linalg::PcType::Gmg || cfg.concentration.pc == linalg::PcType::Gmg;
}

fe::BlockState initial_guess(const assembly::CnpProblem& problem, const mesh::MeshHierarchy& hierarchy,
                             const assembly::DgParams& params, double rtol)
{
    problem.check();
    const auto& sys = problem.system;
    fe::BlockState st(problem.space, problem.num_fields());
    for (int r = 0; r < sys.num_retained(); ++r) {
        auto c = st.field(1 + r);
        std::fill(c.begin(), c.end(), sys.c_in[sys.retained[r]]);
    }
    const auto J = assembly::assemble_jacobian(st, problem, params);
    const auto R = assembly::assemble_residual(st, problem, params);
    const std::size_t n = problem.space->num_dofs();
    std::vector<double> b(n), dphi(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        b[i] = -R[i];

    bool neumann = true;
    for (const auto& bf : problem.space->mesh().boundary_faces())
        if (bf.tag == mesh::BoundaryTag::Exterior || mesh::is_electrode(bf.tag))
            neumann = false;
    if (neumann) {
        const double mean = std::accumulate(b.begin(), b.end(), 0.0) / static_cast<double>(n);
        for (double& v : b)
            v -= mean;
    }
    linalg::GmgOptions gmg;
    gmg.constant_nullspace = neumann;
    std::vector<linalg::CsrMatrix> levels;
    for (const auto& Jc : coarse_jacobians(st, problem, hierarchy, params))
        levels.push_back(Jc(0, 0));
    levels.push_back(J(0, 0));
    const linalg::Multigrid M(hierarchy, problem.space->order(), std::move(levels), gmg);
    linalg::KrylovConfig kc{linalg::KrylovMethod::CG, rtol, 0.0, 1000, 30};
    const auto res = linalg::cg(linalg::as_operator(J(0, 0)), b, dphi, &M, kc);
    if (!res.converged())
        throw linalg::SolverError("initial potential solve failed: " + linalg::to_string(res.status));
    if (neumann) {
        const double mean = std::accumulate(dphi.begin(), dphi.end(), 0.0) / static_cast<double>(n);
        for (double& v : dphi)
            v -= mean;
    }
    std::copy(dphi.begin(), dphi.end(), st.field(0).begin());
    return st;
}

SolveReport solve_cnp(const assembly::CnpProblem& problem, const assembly::DgParams& params, fe::BlockState& state,
                      const mesh::MeshHierarchy& hierarchy, const NewtonConfig& newton, const LinearSolverConfig& linear,
                      SolverLog* log)
{
    problem.check();
    fe::BlockState work = state;
    auto residual = [&](const std::vector<double>& x) {
        work.data = x;
        return assembly::assemble_residual(work, problem, params);
    };
    std::vector<linalg::BlockMatrix> coarse;
    const bool gmg = uses_gmg(linear);
    auto jacobian = [&](const std::vector<double>& x) {
        work.data = x;
        if (gmg)
            coarse = coarse_jacobians(work, problem, hierarchy, params);
        return assembly::assemble_jacobian(work, problem, params);
    };
    std::vector<double> x = state.data;
    SolveReport rep = newton_solve(
        residual, jacobian, fieldsplit_solver(linear, &hierarchy, problem.space->order(), log, gmg ? &coarse : nullptr),
        x, newton);
    state.data = std::move(x);
    rep.fields.push_back("phi");
    for (int r = 0; r < problem.system.num_retained(); ++r)
        rep.fields.push_back(problem.system.names[problem.system.retained[r]]);
    if (log)
        for (const auto& h : rep.history)
            log->record(h.iteration, "newton", h.iteration, h.residual);
    return rep;
}

} // namespace cnp::nonlinear
