#include "cnp/linalg/multigrid.hpp"

#include <algorithm>

namespace cnp::linalg {

CsrMatrix dg_prolongation(const fe::FeSpace& coarse, const fe::FeSpace& fine, std::span<const int> parent)
{
    if (coarse.order() != fine.order() || coarse.dim() != fine.dim())
        throw InvalidArgument("prolongation needs spaces of equal order and dimension");
    if (parent.size() != fine.mesh().num_elements())
        throw InvalidArgument("parent map does not match the fine mesh");
    const int nb = fine.dofs_per_element();
    const auto& nodes = fine.ref().nodes();
    CsrMatrix P(fine.num_dofs(), coarse.num_dofs());
    P.col.reserve(fine.num_dofs() * nb);
    P.val.reserve(fine.num_dofs() * nb);
    std::vector<Point> ref(nb);
    for (std::size_t c = 0; c < fine.mesh().num_elements(); ++c) {
        const auto pe = static_cast<std::size_t>(parent[c]);
        for (int i = 0; i < nb; ++i)
            ref[i] = coarse.to_reference(pe, fine.to_physical(c, nodes[i]));
        const auto tab = fe::tabulate_basis(fine.order(), fine.dim(), ref);
        for (int i = 0; i < nb; ++i) {
            for (int j = 0; j < nb; ++j) {
                P.col.push_back(static_cast<int>(coarse.offset(pe) + j));
                P.val.push_back(tab.value(i, j));
            }
            P.row_ptr[fine.offset(c) + i + 1] = P.col.size();
        }
    }
    return P;
}

Multigrid::Multigrid(const mesh::MeshHierarchy& h, int p, const CsrMatrix& A_fine, GmgOptions opt) : opt_(opt)
{
    if (h.size() < 1)
        throw InvalidArgument("multigrid needs at least one level");
    A_.resize(h.size());
    A_.back() = A_fine;
    setup(h, p, true);
}

Multigrid::Multigrid(const mesh::MeshHierarchy& h, int p, std::vector<CsrMatrix> levels, GmgOptions opt)
    : opt_(opt), A_(std::move(levels))
{
    if (h.size() < 1)
        throw InvalidArgument("multigrid needs at least one level");
    if (A_.size() != h.size())
        throw InvalidArgument("one matrix per hierarchy level is required");
    setup(h, p, false);
}

void Multigrid::setup(const mesh::MeshHierarchy& h, int p, bool galerkin)
{
    const int L = static_cast<int>(h.size());
    std::vector<std::shared_ptr<const fe::FeSpace>> spaces;
    for (const auto& m : h.levels)
        spaces.push_back(std::make_shared<fe::FeSpace>(std::make_shared<mesh::Mesh>(m), p));
    for (int l = galerkin ? L - 1 : 0; l < L; ++l)
        if (spaces[l]->num_dofs() != A_[l].rows || A_[l].rows != A_[l].cols)
            throw InvalidArgument(l + 1 == L ? "fine matrix does not match the finest hierarchy level"
                                             : "level matrix does not match its mesh");

    P_.resize(L);
    R_.resize(L);
    smoothers_.resize(L);
    for (int l = L - 1; l >= 1; --l) {
        P_[l] = dg_prolongation(*spaces[l - 1], *spaces[l], h.parent_map[l]);
        R_[l] = transpose(P_[l]);
        if (galerkin)
            A_[l - 1] = multiply(R_[l], multiply(A_[l], P_[l]));
    }
    const int nb = spaces.back()->dofs_per_element();
    for (int l = 1; l < L; ++l)
        smoothers_[l] = std::make_unique<AdditiveSchwarz>(
            A_[l], make_asm_partition(h.levels[l], opt_.asm_subdomains, opt_.asm_overlap), nb);
    coarse_ = std::make_unique<SparseLu>(A_[0], opt_.constant_nullspace);
}

void Multigrid::vcycle(int l, std::span<const double> b, std::span<double> x) const
{
    if (l == 0) {
        coarse_->apply(b, x);
        return;
    }
    const CsrMatrix& A = A_[l];
    std::vector<double> r(A.rows), z(A.rows);
    auto smooth = [&] {
        for (int s = 0; s < opt_.smoothing_steps; ++s) {
            residual(A, x, b, r);
            smoothers_[l]->apply(r, z);
            axpy(opt_.damping, z, x);
        }
    };
    smooth();
    residual(A, x, b, r);
    std::vector<double> rc(A_[l - 1].rows), xc(A_[l - 1].rows, 0.0), corr(A.rows);
    spmv(R_[l], r, rc);
    vcycle(l - 1, rc, xc);
    spmv(P_[l], xc, corr);
    axpy(1.0, corr, x);
    smooth();
}

void Multigrid::cycle(std::span<const double> b, std::span<double> x) const { vcycle(num_levels() - 1, b, x); }

void Multigrid::apply(std::span<const double> r, std::span<double> z) const
{
    std::fill(z.begin(), z.end(), 0.0);
    vcycle(num_levels() - 1, r, z);
}

} // namespace cnp::linalg
