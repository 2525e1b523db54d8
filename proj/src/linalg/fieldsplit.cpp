#include "cnp/linalg/fieldsplit.hpp"

#include <algorithm>

namespace cnp::linalg {

std::string to_string(PcType t)
{
    switch (t) {
    case PcType::None:
        return "none";
    case PcType::Jacobi:
        return "jacobi";
    case PcType::Ilu:
        return "ilu";
    case PcType::Asm:
        return "asm";
    case PcType::Gmg:
        return "gmg";
    case PcType::Lu:
        return "lu";
    }
    return "?";
}

PcType pc_type_from_string(const std::string& s)
{
    for (auto t : {PcType::None, PcType::Jacobi, PcType::Ilu, PcType::Asm, PcType::Gmg, PcType::Lu})
        if (to_string(t) == s)
            return t;
    throw InvalidArgument("unknown preconditioner '" + s + "'");
}

std::unique_ptr<Preconditioner> make_preconditioner(const CsrMatrix& A, const BlockSolverConfig& cfg,
                                                    const mesh::MeshHierarchy* h, int p,
                                                    std::vector<CsrMatrix> coarse)
{
    switch (cfg.pc) {
    case PcType::None:
        return std::make_unique<IdentityPreconditioner>();
    case PcType::Jacobi:
        return std::make_unique<JacobiPreconditioner>(A);
    case PcType::Ilu:
        return std::make_unique<Ilu0>(A);
    case PcType::Lu:
        return std::make_unique<SparseLu>(A);
    case PcType::Asm: {
        if (!h)
            throw InvalidArgument("ASM needs the mesh to build subdomains");
        const auto& m = h->finest();
        const int nb = static_cast<int>(A.rows / m.num_elements());
        return std::make_unique<AdditiveSchwarz>(A, make_asm_partition(m, cfg.asm_subdomains, cfg.asm_overlap), nb);
    }
    case PcType::Gmg:
        if (!h)
            throw InvalidArgument("GMG needs a mesh hierarchy");
        if (coarse.empty())
            return std::make_unique<Multigrid>(*h, p, A, cfg.gmg);
        coarse.push_back(A);
        return std::make_unique<Multigrid>(*h, p, std::move(coarse), cfg.gmg);
    }
    throw InvalidArgument("unknown preconditioner");
}

Fieldsplit::Fieldsplit(const BlockMatrix& J, std::vector<BlockSolverConfig> configs, const mesh::MeshHierarchy* h, int p,
                       std::span<const BlockMatrix> coarse)
    : J_(J), cfg_(std::move(configs))
{
    if (static_cast<int>(cfg_.size()) != J.num_blocks)
        throw InvalidArgument("fieldsplit needs one solver configuration per block");
    if (!coarse.empty() && (!h || coarse.size() + 1 != h->size()))
        throw InvalidArgument("fieldsplit needs one coarse operator per coarser hierarchy level");
    for (int i = 0; i < J.num_blocks; ++i) {
        cfg_[i].krylov.check();
        std::vector<CsrMatrix> levels;
        if (cfg_[i].pc == PcType::Gmg)
            for (const auto& Jc : coarse)
                levels.push_back(Jc(i, i));
        pcs_.push_back(make_preconditioner(J(i, i), cfg_[i], h, p, std::move(levels)));
        stats_.push_back({J.labels[i].empty() ? "block" + std::to_string(i) : J.labels[i], 0, 0, 0});
    }
}

void Fieldsplit::reset_stats() const
{
    for (auto& s : stats_) {
        s.applications = 0;
        s.iterations = 0;
        s.max_iterations = 0;
    }
}

void Fieldsplit::apply(std::span<const double> r, std::span<double> z) const
{
    const std::size_t n = J_.block_size;
    std::vector<double> rhs(n), tmp(n);
    std::fill(z.begin(), z.end(), 0.0);
    for (int i = J_.num_blocks - 1; i >= 0; --i) {
        std::copy_n(r.begin() + static_cast<std::ptrdiff_t>(i * n), n, rhs.begin());
        for (int j = i + 1; j < J_.num_blocks; ++j) {
            const auto& A = J_(i, j);
            if (A.nnz() == 0)
                continue;
            spmv(A, z.subspan(j * n, n), tmp);
            axpy(-1.0, tmp, rhs);
        }
        auto zi = z.subspan(i * n, n);
        auto& st = stats_[i];
        ++st.applications;
        if (cfg_[i].preonly) {
            pcs_[i]->apply(rhs, zi);
            continue;
        }
        const auto res = solve(J_(i, i), rhs, zi, pcs_[i].get(), cfg_[i].krylov);
        st.iterations += res.iterations;
        st.max_iterations = std::max(st.max_iterations, res.iterations);
        if (!res.converged())
            throw SolverError("inner solve of block '" + st.label + "' failed: " + to_string(res.status) + " after " +
                              std::to_string(res.iterations) + " iterations");
    }
}

} // namespace cnp::linalg
