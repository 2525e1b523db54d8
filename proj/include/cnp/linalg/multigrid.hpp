#pragma once

#include "cnp/fespace.hpp"
#include "cnp/linalg/precond.hpp"
#include "cnp/mesh.hpp"

#include <memory>
#include <span>
#include <vector>

namespace cnp::linalg {

struct GmgOptions {
    int smoothing_steps = 1;   // Richardson steps before and after the coarse correction
    double damping = 1.0;      // Richardson weight
    int asm_subdomains = 1;    // smoother subdomains per level; more than one needs damping below 1
    int asm_overlap = 1;
    bool constant_nullspace = false; // coarse solve for pure-Neumann operators
};

/// DG embedding of the parent polynomials into the children: P[child dof, parent dof]
/// is the parent basis function evaluated at the child's nodal point.
CsrMatrix dg_prolongation(const fe::FeSpace& coarse, const fe::FeSpace& fine, std::span<const int> parent_of_fine);

/// V(s,s)-cycle on a nested hierarchy, damped Richardson smoothing preconditioned by
/// ASM-ILU0 and a direct coarse solve.
class Multigrid final : public Preconditioner {
public:
    /// Galerkin coarse operators P^T A P.
    Multigrid(const mesh::MeshHierarchy& hierarchy, int p, const CsrMatrix& A_fine, GmgOptions options = {});
    /// Operators assembled on each level, coarsest first.
    Multigrid(const mesh::MeshHierarchy& hierarchy, int p, std::vector<CsrMatrix> levels, GmgOptions options = {});

    void apply(std::span<const double> r, std::span<double> z) const override;
    std::string name() const override { return "gmg"; }

    /// One cycle applied to A x = b, updating x in place.
    void cycle(std::span<const double> b, std::span<double> x) const;

    int num_levels() const { return static_cast<int>(A_.size()); }
    const CsrMatrix& matrix(int level) const { return A_[level]; }
    /// Prolongation from level-1 to level (empty for level 0).
    const CsrMatrix& prolongation(int level) const { return P_[level]; }

private:
    void setup(const mesh::MeshHierarchy& hierarchy, int p, bool galerkin);
    void vcycle(int level, std::span<const double> b, std::span<double> x) const;

    GmgOptions opt_;
    std::vector<CsrMatrix> A_, P_, R_;
    std::vector<std::unique_ptr<Preconditioner>> smoothers_;
    std::unique_ptr<SparseLu> coarse_;
};

} // namespace cnp::linalg
