#include "cnp/linalg/precond.hpp"

#include "cnp/parallel.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cnp::linalg {

void IdentityPreconditioner::apply(std::span<const double> r, std::span<double> z) const
{
    std::copy(r.begin(), r.end(), z.begin());
}

JacobiPreconditioner::JacobiPreconditioner(const CsrMatrix& A) : inv_diag_(A.rows)
{
    for (std::size_t i = 0; i < A.rows; ++i) {
        const double d = A.at(i, i);
        if (d == 0.0)
            throw Error("Jacobi preconditioner: zero diagonal in row " + std::to_string(i));
        inv_diag_[i] = 1.0 / d;
    }
}

void JacobiPreconditioner::apply(std::span<const double> r, std::span<double> z) const
{
    for (std::size_t i = 0; i < r.size(); ++i)
        z[i] = inv_diag_[i] * r[i];
}

Ilu0::Ilu0(const CsrMatrix& A) : lu_(A), diag_(A.rows)
{
    if (A.rows != A.cols)
        throw InvalidArgument("ILU0 needs a square matrix");
    const std::size_t n = A.rows;
    for (std::size_t i = 0; i < n; ++i) {
        const auto b = lu_.col.begin() + static_cast<std::ptrdiff_t>(lu_.row_ptr[i]);
        const auto e = lu_.col.begin() + static_cast<std::ptrdiff_t>(lu_.row_ptr[i + 1]);
        const auto it = std::lower_bound(b, e, static_cast<int>(i));
        if (it == e || *it != static_cast<int>(i))
            throw Error("ILU0: missing diagonal entry in row " + std::to_string(i));
        diag_[i] = static_cast<std::size_t>(it - lu_.col.begin());
    }
    std::vector<std::ptrdiff_t> where(n, -1);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = lu_.row_ptr[i]; k < lu_.row_ptr[i + 1]; ++k)
            where[lu_.col[k]] = static_cast<std::ptrdiff_t>(k);
        for (std::size_t k = lu_.row_ptr[i]; k < diag_[i]; ++k) {
            const std::size_t j = static_cast<std::size_t>(lu_.col[k]);
            const double piv = lu_.val[diag_[j]];
            lu_.val[k] /= piv;
            const double lij = lu_.val[k];
            for (std::size_t kk = diag_[j] + 1; kk < lu_.row_ptr[j + 1]; ++kk) {
                const std::ptrdiff_t pos = where[lu_.col[kk]];
                if (pos >= 0)
                    lu_.val[static_cast<std::size_t>(pos)] -= lij * lu_.val[kk];
            }
        }
        if (lu_.val[diag_[i]] == 0.0 || !std::isfinite(lu_.val[diag_[i]]))
            throw Error("ILU0: zero pivot in row " + std::to_string(i));
        for (std::size_t k = lu_.row_ptr[i]; k < lu_.row_ptr[i + 1]; ++k)
            where[lu_.col[k]] = -1;
    }
}

void Ilu0::apply(std::span<const double> r, std::span<double> z) const
{
    const std::size_t n = lu_.rows;
    for (std::size_t i = 0; i < n; ++i) {
        double s = r[i];
        for (std::size_t k = lu_.row_ptr[i]; k < diag_[i]; ++k)
            s -= lu_.val[k] * z[lu_.col[k]];
        z[i] = s;
    }
    for (std::size_t i = n; i-- > 0;) {
        double s = z[i];
        for (std::size_t k = diag_[i] + 1; k < lu_.row_ptr[i + 1]; ++k)
            s -= lu_.val[k] * z[lu_.col[k]];
        z[i] = s / lu_.val[diag_[i]];
    }
}

struct SparseLu::Impl {
    Eigen::SparseLU<Eigen::SparseMatrix<double, Eigen::ColMajor, int>, Eigen::COLAMDOrdering<int>> lu;
};

SparseLu::SparseLu(const CsrMatrix& A, bool constant_nullspace) : impl_(std::make_unique<Impl>()), nullspace_(constant_nullspace)
{
    if (A.rows != A.cols)
        throw InvalidArgument("LU needs a square matrix");
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(A.nnz());
    for (std::size_t i = 0; i < A.rows; ++i)
        for (std::size_t k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k) {
            if (nullspace_ && (i == 0 || A.col[k] == 0))
                continue;
            t.emplace_back(static_cast<int>(i), A.col[k], A.val[k]);
        }
    if (nullspace_ && A.rows > 0)
        t.emplace_back(0, 0, 1.0);
    Eigen::SparseMatrix<double, Eigen::ColMajor, int> M(static_cast<int>(A.rows), static_cast<int>(A.cols));
    M.setFromTriplets(t.begin(), t.end());
    impl_->lu.analyzePattern(M);
    impl_->lu.factorize(M);
    if (impl_->lu.info() != Eigen::Success)
        throw Error("sparse LU: matrix is singular or factorization failed");
}

SparseLu::~SparseLu() = default;

void SparseLu::apply(std::span<const double> r, std::span<double> z) const
{
    Eigen::Map<const Eigen::VectorXd> b(r.data(), static_cast<Eigen::Index>(r.size()));
    Eigen::VectorXd rhs = b;
    if (nullspace_ && rhs.size() > 0)
        rhs[0] = 0.0;
    Eigen::VectorXd x = impl_->lu.solve(rhs);
    if (nullspace_ && x.size() > 0)
        x.array() -= x.mean();
    std::copy(x.data(), x.data() + x.size(), z.begin());
}

namespace {

void bisect(std::span<const Point> c, std::vector<int>& items, std::size_t lo, std::size_t hi, int nsub,
            std::vector<std::vector<int>>& out)
{
    if (nsub <= 1 || hi - lo <= 1) {
        out.emplace_back(items.begin() + static_cast<std::ptrdiff_t>(lo), items.begin() + static_cast<std::ptrdiff_t>(hi));
        std::sort(out.back().begin(), out.back().end());
        return;
    }
    Point mn{1e300, 1e300, 1e300}, mx{-1e300, -1e300, -1e300};
    for (std::size_t i = lo; i < hi; ++i)
        for (int d = 0; d < 3; ++d) {
            mn[d] = std::min(mn[d], c[items[i]][d]);
            mx[d] = std::max(mx[d], c[items[i]][d]);
        }
    int axis = 0;
    for (int d = 1; d < 3; ++d)
        if (mx[d] - mn[d] > mx[axis] - mn[axis])
            axis = d;
    const int left = nsub / 2;
    const std::size_t mid = lo + (hi - lo) * static_cast<std::size_t>(left) / static_cast<std::size_t>(nsub);
    std::nth_element(items.begin() + static_cast<std::ptrdiff_t>(lo), items.begin() + static_cast<std::ptrdiff_t>(mid),
                     items.begin() + static_cast<std::ptrdiff_t>(hi), [&](int a, int b) {
                         return c[a][axis] != c[b][axis] ? c[a][axis] < c[b][axis] : a < b;
                     });
    bisect(c, items, lo, mid, left, out);
    bisect(c, items, mid, hi, nsub - left, out);
}

} // namespace

std::vector<std::vector<int>> rcb_partition(std::span<const Point> centroids, int nsub)
{
    if (nsub < 1)
        throw InvalidArgument("subdomain count must be >= 1");
    std::vector<int> items(centroids.size());
    std::iota(items.begin(), items.end(), 0);
    std::vector<std::vector<int>> out;
    bisect(centroids, items, 0, items.size(), std::min<int>(nsub, static_cast<int>(std::max<std::size_t>(1, items.size()))), out);
    return out;
}

AsmPartition make_asm_partition(const mesh::Mesh& mesh, int nsub, int overlap)
{
    if (overlap < 0)
        throw InvalidArgument("overlap must be >= 0");
    std::vector<Point> c(mesh.num_elements());
    for (std::size_t e = 0; e < c.size(); ++e)
        c[e] = mesh.element_centroid(e);
    AsmPartition part;
    part.core = rcb_partition(c, nsub);
    std::vector<int> mark(mesh.num_elements(), -1);
    for (std::size_t s = 0; s < part.core.size(); ++s) {
        std::vector<int> set = part.core[s];
        for (int e : set)
            mark[e] = static_cast<int>(s);
        std::vector<int> frontier = set;
        for (int layer = 0; layer < overlap; ++layer) {
            std::vector<int> next;
            for (int e : frontier)
                for (int f = 0; f < mesh.faces_per_element(); ++f) {
                    const int nb = mesh.neighbor(static_cast<std::size_t>(e), f);
                    if (nb >= 0 && mark[nb] != static_cast<int>(s)) {
                        mark[nb] = static_cast<int>(s);
                        next.push_back(nb);
                    }
                }
            set.insert(set.end(), next.begin(), next.end());
            frontier = std::move(next);
        }
        std::sort(set.begin(), set.end());
        part.overlapped.push_back(std::move(set));
    }
    return part;
}

AdditiveSchwarz::AdditiveSchwarz(const CsrMatrix& A, AsmPartition partition, int nb)
{
    if (A.rows != A.cols)
        throw InvalidArgument("ASM needs a square matrix");
    std::size_t covered = 0;
    for (const auto& s : partition.core)
        covered += s.size();
    if (covered * static_cast<std::size_t>(nb) != A.rows)
        throw InvalidArgument("ASM partition does not cover the matrix");
    for (const auto& s : partition.overlapped) {
        std::vector<int> d;
        d.reserve(s.size() * nb);
        for (int e : s)
            for (int i = 0; i < nb; ++i)
                d.push_back(e * nb + i);
        dofs_.push_back(std::move(d));
    }
    std::vector<std::unique_ptr<Ilu0>> f(dofs_.size());
    parallel_for(0, dofs_.size(), [&](std::size_t s) { f[s] = std::make_unique<Ilu0>(principal_submatrix(A, dofs_[s])); });
    for (auto& p : f)
        factors_.push_back(std::move(*p));
}

void AdditiveSchwarz::apply(std::span<const double> r, std::span<double> z) const
{
    std::vector<std::vector<double>> local(dofs_.size());
    parallel_for(0, dofs_.size(), [&](std::size_t s) {
        const auto& d = dofs_[s];
        std::vector<double> rs(d.size());
        for (std::size_t i = 0; i < d.size(); ++i)
            rs[i] = r[d[i]];
        local[s].resize(d.size());
        factors_[s].apply(rs, local[s]);
    });
    std::fill(z.begin(), z.end(), 0.0);
    for (std::size_t s = 0; s < dofs_.size(); ++s)
        for (std::size_t i = 0; i < dofs_[s].size(); ++i)
            z[dofs_[s][i]] += local[s][i];
}

} // namespace cnp::linalg
