#pragma once

#include "cnp/linalg/csr.hpp"
#include "cnp/mesh.hpp"

#include <memory>
#include <span>
#include <string>
#include <vector>

namespace cnp::linalg {

/// z = M^{-1} r for some approximation M of a matrix.
class Preconditioner {
public:
    virtual ~Preconditioner() = default;
    virtual void apply(std::span<const double> r, std::span<double> z) const = 0;
    virtual std::string name() const = 0;
};

class IdentityPreconditioner final : public Preconditioner {
public:
    void apply(std::span<const double> r, std::span<double> z) const override;
    std::string name() const override { return "none"; }
};

class JacobiPreconditioner final : public Preconditioner {
public:
    explicit JacobiPreconditioner(const CsrMatrix& A);
    void apply(std::span<const double> r, std::span<double> z) const override;
    std::string name() const override { return "jacobi"; }

private:
    std::vector<double> inv_diag_;
};

/// Incomplete LU with zero fill; L (unit lower) and U share A's pattern.
class Ilu0 final : public Preconditioner {
public:
    /// Throws Error naming the row on a zero pivot.
    explicit Ilu0(const CsrMatrix& A);
    void apply(std::span<const double> r, std::span<double> z) const override;
    std::string name() const override { return "ilu0"; }

    const CsrMatrix& factors() const { return lu_; }

private:
    CsrMatrix lu_;
    std::vector<std::size_t> diag_;
};

/// Sparse direct solve with partial pivoting (coarse grids, small systems).
class SparseLu final : public Preconditioner {
public:
    /// With `constant_nullspace` the first unknown is pinned and the solution is
    /// shifted to zero mean, which solves consistent singular Neumann problems.
    explicit SparseLu(const CsrMatrix& A, bool constant_nullspace = false);
    ~SparseLu() override;
    void apply(std::span<const double> r, std::span<double> z) const override;
    std::string name() const override { return "lu"; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    bool nullspace_ = false;
};

/// Element subdomains for the overlapping Schwarz method.
struct AsmPartition {
    std::vector<std::vector<int>> core;       // disjoint element sets covering all elements
    std::vector<std::vector<int>> overlapped; // core plus `overlap` layers of face neighbors, sorted
};

/// Recursive coordinate bisection of element centroids into `nsub` parts.
std::vector<std::vector<int>> rcb_partition(std::span<const Point> centroids, int nsub);
AsmPartition make_asm_partition(const mesh::Mesh& mesh, int nsub, int overlap = 1);

/// Plain additive Schwarz: z = sum_s R_s^T ILU0(A_s)^{-1} R_s r. Unknowns are
/// numbered element by element with `dofs_per_element` entries each.
class AdditiveSchwarz final : public Preconditioner {
public:
    AdditiveSchwarz(const CsrMatrix& A, AsmPartition partition, int dofs_per_element);
    void apply(std::span<const double> r, std::span<double> z) const override;
    std::string name() const override { return "asm"; }

    std::size_t num_subdomains() const { return dofs_.size(); }

private:
    std::vector<std::vector<int>> dofs_;
    std::vector<Ilu0> factors_;
};

} // namespace cnp::linalg
