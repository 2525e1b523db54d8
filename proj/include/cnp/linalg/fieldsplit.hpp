#pragma once

#include "cnp/linalg/krylov.hpp"
#include "cnp/linalg/multigrid.hpp"

#include <memory>
#include <string>
#include <vector>

namespace cnp::linalg {

enum class PcType { None, Jacobi, Ilu, Asm, Gmg, Lu };

std::string to_string(PcType t);
PcType pc_type_from_string(const std::string& s);

/// Inner solver for one diagonal block.
struct BlockSolverConfig {
    KrylovConfig krylov{KrylovMethod::GMRES, 1e-1, 0.0, 500, 30};
    bool preonly = false; // apply the preconditioner once instead of iterating
    PcType pc = PcType::Asm;
    int asm_subdomains = 1;
    int asm_overlap = 1;
    GmgOptions gmg;
};

/// Preconditioner for one block. Gmg needs the mesh hierarchy and the order p; it
/// uses `coarse` (one matrix per coarser level, coarsest first) when given and
/// Galerkin coarse operators otherwise.
std::unique_ptr<Preconditioner> make_preconditioner(const CsrMatrix& A, const BlockSolverConfig& cfg,
                                                    const mesh::MeshHierarchy* hierarchy, int p,
                                                    std::vector<CsrMatrix> coarse = {});

class SolverError : public Error {
public:
    using Error::Error;
};

struct BlockSolveStats {
    std::string label;
    long applications = 0;
    long iterations = 0;
    int max_iterations = 0;

    double mean_iterations() const { return applications ? static_cast<double>(iterations) / applications : 0.0; }
};

/// Upper block-triangular preconditioner over (Phi, c_1, ..., c_{m-1}).
/// Application solves the last block first and moves up, subtracting the
/// off-diagonal couplings to the blocks already solved.
class Fieldsplit final : public Preconditioner {
public:
    /// `configs` holds one entry per block. The block matrix must outlive this object.
    /// `coarse` holds the same operator assembled on the coarser hierarchy levels,
    /// coarsest first, for the GMG blocks.
    Fieldsplit(const BlockMatrix& J, std::vector<BlockSolverConfig> configs, const mesh::MeshHierarchy* hierarchy,
               int p, std::span<const BlockMatrix> coarse = {});

    void apply(std::span<const double> r, std::span<double> z) const override;
    std::string name() const override { return "fieldsplit"; }

    const std::vector<BlockSolveStats>& stats() const { return stats_; }
    void reset_stats() const;

private:
    const BlockMatrix& J_;
    std::vector<BlockSolverConfig> cfg_;
    std::vector<std::unique_ptr<Preconditioner>> pcs_;
    mutable std::vector<BlockSolveStats> stats_;
};

} // namespace cnp::linalg
