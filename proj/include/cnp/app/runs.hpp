#pragma once

#include "cnp/app/config.hpp"
#include "cnp/app/output.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace cnp::app {

/// Newton or inner-solver failure of an experiment.
class SolveFailure : public Error {
public:
    using Error::Error;
};

struct ConvergenceRow {
    int level = 0;
    std::size_t elements = 0;
    std::size_t dofs = 0; // all fields
    double error_phi = 0.0;
    double error_c1 = 0.0;
    double rate_phi = 0.0; // NaN on level 0
    double rate_c1 = 0.0;
};

/// log2(e_coarse / e_fine)
double observed_rate(double e_coarse, double e_fine);

struct MmsResult {
    std::vector<ConvergenceRow> rows;
    std::vector<nonlinear::SolveReport> reports;
};

/// Writes convergence.csv, summary.csv, solver_log.csv and fields_levelK.vtk to `out`.
/// On Newton failure the finished levels are persisted before SolveFailure is thrown.
MmsResult run_mms(const RunConfig& cfg, const std::filesystem::path& out);

struct ReactorResult {
    int level = 0;
    std::size_t elements = 0;
    std::size_t dofs = 0;
    nonlinear::SolveReport report;
    assembly::ElectrodeCurrents currents;
    double current_balance = 0.0;    // |I_a + I_c| / max(|I_a|, |I_c|)
    double eliminated_inlet = 0.0;   // recovered eliminated species on the inflow trace (M)
    double eliminated_inlet_interior = 0.0; // area average of the interior trace on the inlet (M)
    double min_recovered = 0.0;      // minimum nodal recovered concentration (M)
    Point min_recovered_at{};        // SI coordinates
    std::vector<std::string> warnings;
};

/// Writes summary.csv, solver_log.csv and fields_levelK.vtk to `out`.
ReactorResult run_reactor(const RunConfig& cfg, const std::filesystem::path& out);

struct SolvecheckRow {
    int level = 0;
    std::size_t elements = 0;
    std::size_t dofs = 0;
    linalg::PcType concentration_pc = linalg::PcType::Asm;
    int subdomains = 0; // ASM subdomains (concentration blocks)
    int outer_iterations = 0;
    bool converged = false;
    std::vector<linalg::BlockSolveStats> blocks;
    double seconds = 0.0;
};

/// First-Newton-step Jacobians of the reactor on the finest `cfg.solvecheck.levels`
/// hierarchy levels, solved once per concentration preconditioner setting.
/// Writes summary.csv and solver_log.csv.
std::vector<SolvecheckRow> run_solvecheck(const RunConfig& cfg, const std::filesystem::path& out);

} // namespace cnp::app
