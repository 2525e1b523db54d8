#pragma once

#include "cnp/assembly.hpp"
#include "cnp/linalg/fieldsplit.hpp"

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace cnp::nonlinear {

struct NewtonConfig {
    double rtol = 1e-6;
    double atol = 1e-50;
    int max_iters = 50;
    double ls_c = 1e-4;     // sufficient decrease factor
    double ls_ratio = 0.5;  // backtracking ratio
    int ls_max = 25;        // maximum backtracks per step

    void check() const;
};

/// Outer Krylov method and the inner solvers of the fieldsplit blocks.
struct LinearSolverConfig {
    linalg::KrylovConfig outer{linalg::KrylovMethod::FGMRES, 1e-3, 0.0, 500, 30};
    linalg::BlockSolverConfig potential = default_potential();
    linalg::BlockSolverConfig concentration = default_concentration();

    /// CG + GMG at rtol 1e-1.
    static linalg::BlockSolverConfig default_potential();
    /// GMRES + ASM-ILU0 at rtol 1e-1.
    static linalg::BlockSolverConfig default_concentration();

    std::vector<linalg::BlockSolverConfig> blocks(int num_fields) const;
};

enum class NewtonStatus { Converged, LineSearchFailed, MaxIterations, LinearSolverFailed, NotFinite };

std::string to_string(NewtonStatus s);

struct NewtonIterate {
    int iteration = 0;
    double residual = 0.0;
    double step_length = 0.0;
    int krylov_iterations = 0;          // outer iterations of the step that produced this iterate
    std::vector<long> inner_iterations; // per field
    double seconds = 0.0;               // wall time of the step
};

struct SolveReport {
    NewtonStatus status = NewtonStatus::MaxIterations;
    std::string message;
    std::vector<std::string> fields;
    std::vector<NewtonIterate> history; // entry 0 is the initial state
    double wall_time = 0.0;

    bool converged() const { return status == NewtonStatus::Converged; }
    int iterations() const { return history.empty() ? 0 : static_cast<int>(history.size()) - 1; }
    double initial_residual() const { return history.empty() ? 0.0 : history.front().residual; }
    double final_residual() const { return history.empty() ? 0.0 : history.back().residual; }
    long total_krylov_iterations() const;
    long total_inner_iterations(std::size_t field) const;

    void write_csv(std::ostream& os) const;
    void write_summary(std::ostream& os) const;
};

/// Per-iteration residuals of every solver level, written as solver_log.csv.
class SolverLog {
public:
    void record(int newton_iteration, const std::string& solver, int iteration, double residual);
    void write_csv(std::ostream& os) const;
    std::size_t size() const { return rows_.size(); }
    /// Mesh level stamped on subsequent records.
    void set_level(int level) { level_ = level; }

private:
    struct Row {
        int level;
        int newton;
        std::string solver;
        int iteration;
        double residual;
    };
    std::vector<Row> rows_;
    int level_ = 0;
};

using ResidualFn = std::function<std::vector<double>(const std::vector<double>&)>;
using JacobianFn = std::function<linalg::BlockMatrix(const std::vector<double>&)>;
/// Solves J dx = b for Newton step `newton_iteration`; returns the outer Krylov result
/// and fills the inner iteration totals per field.
using LinearSolveFn =
    std::function<linalg::KrylovResult(int newton_iteration, const linalg::BlockMatrix& J, std::span<const double> b,
                                       std::span<double> dx, std::vector<long>& inner_iterations)>;

/// Newton's method with backtracking on the residual 2-norm.
SolveReport newton_solve(const ResidualFn& residual, const JacobianFn& jacobian, const LinearSolveFn& linear,
                         std::vector<double>& x, const NewtonConfig& cfg);

/// FGMRES preconditioned by the block-triangular fieldsplit. When `coarse` is given
/// its current contents are the Jacobian on the coarser levels, coarsest first.
LinearSolveFn fieldsplit_solver(const LinearSolverConfig& cfg, const mesh::MeshHierarchy* hierarchy, int p,
                                SolverLog* log = nullptr, const std::vector<linalg::BlockMatrix>* coarse = nullptr);

/// The problem with its data posed on another space.
assembly::CnpProblem on_space(const assembly::CnpProblem& problem, std::shared_ptr<const fe::FeSpace> space);

/// Jacobians on the coarser hierarchy levels (coarsest first) at the nodal
/// restriction of `state`, which lives on the finest level.
std::vector<linalg::BlockMatrix> coarse_jacobians(const fe::BlockState& state, const assembly::CnpProblem& problem,
                                                  const mesh::MeshHierarchy& hierarchy,
                                                  const assembly::DgParams& params = {});

bool uses_gmg(const LinearSolverConfig& cfg);

/// Constant inlet concentrations and the potential from one linearized charge
/// solve (CG + GMG, rtol 1e-2) starting from Phi = 0.
fe::BlockState initial_guess(const assembly::CnpProblem& problem, const mesh::MeshHierarchy& hierarchy,
                             const assembly::DgParams& params = {}, double rtol = 1e-2);

/// Newton solve of the CNP system on problem.space (the finest hierarchy level).
SolveReport solve_cnp(const assembly::CnpProblem& problem, const assembly::DgParams& params, fe::BlockState& state,
                      const mesh::MeshHierarchy& hierarchy, const NewtonConfig& newton, const LinearSolverConfig& linear,
                      SolverLog* log = nullptr);

} // namespace cnp::nonlinear
