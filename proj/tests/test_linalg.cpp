#include "checks.hpp"

#include "cnp/app/problems.hpp"
#include "cnp/linalg/fieldsplit.hpp"
#include "cnp/linalg/krylov.hpp"
#include "cnp/linalg/multigrid.hpp"
#include "cnp/nonlinear.hpp"

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>
#include <sstream>

using namespace cnp;
using namespace cnp::linalg;

namespace {

std::vector<double> random_vector(std::size_t n, std::uint32_t seed)
{
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> v(n);
    for (double& x : v)
        x = u(rng);
    return v;
}

// Dense random matrix with a dominant diagonal shift.
std::vector<double> random_dense(std::size_t n, std::uint32_t seed, double shift, bool symmetric = false)
{
    auto a = random_vector(n * n, seed);
    if (symmetric)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < i; ++j)
                a[i * n + j] = a[j * n + i];
    for (std::size_t i = 0; i < n; ++i)
        a[i * n + i] += shift;
    return a;
}

std::vector<double> dense_solve(std::size_t n, const std::vector<double>& a, const std::vector<double>& b)
{
    Eigen::MatrixXd A(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            A(i, j) = a[i * n + j];
    const Eigen::VectorXd x = A.partialPivLu().solve(Eigen::Map<const Eigen::VectorXd>(b.data(), n));
    return {x.data(), x.data() + n};
}

double rel_residual(const CsrMatrix& A, std::span<const double> x, std::span<const double> b)
{
    std::vector<double> r(b.size());
    residual(A, x, b, r);
    return norm2(r) / norm2(b);
}

KrylovConfig krylov(KrylovMethod m, double rtol, int max_iters = 1000, int restart = 30)
{
    return {m, rtol, 0.0, max_iters, restart};
}

AsmPartition whole(std::size_t elements)
{
    AsmPartition p;
    p.core.emplace_back();
    for (std::size_t e = 0; e < elements; ++e)
        p.core[0].push_back(static_cast<int>(e));
    p.overlapped = p.core;
    return p;
}

mesh::MeshHierarchy box_hierarchy(int dim, int n0, int levels)
{
    auto h = mesh::make_hierarchy(mesh::build_unit_box_mesh(dim, {n0, n0, n0}));
    for (int l = 1; l < levels; ++l)
        h = mesh::refine_uniform(h);
    return h;
}

} // namespace

TEST(Csr, SpmvExamples)
{
    const std::vector<double> x{1.0, -2.0, 3.0};
    EXPECT_EQ(spmv(identity(3), x), x);
    const auto D = from_dense(2, 2, std::vector<double>{2, 0, 0, 3});
    EXPECT_EQ(spmv(D, std::vector<double>{1, 1}), (std::vector<double>{2, 3}));
    EXPECT_THROW(spmv(D, x), InvalidArgument);
}

TEST(Csr, SpmvMatchesDense)
{
    const std::size_t n = 50;
    auto a = random_dense(n, 1, 0.0);
    for (std::size_t i = 0; i < a.size(); i += 3)
        a[i] = 0.0;
    const auto A = from_dense(n, n, a);
    A.validate();
    const auto x = random_vector(n, 2);
    const auto y = spmv(A, x);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            s += a[i * n + j] * x[j];
        EXPECT_NEAR(y[i], s, 1e-13);
    }
}

TEST(Csr, TripletsSumDuplicatesAndSort)
{
    const auto A = from_triplets(2, 3, {{0, 2, 1.0}, {0, 0, 2.0}, {0, 2, 0.5}, {1, 1, 4.0}});
    A.validate();
    EXPECT_EQ(A.nnz(), 3u);
    EXPECT_DOUBLE_EQ(A.at(0, 2), 1.5);
    EXPECT_DOUBLE_EQ(A.at(1, 0), 0.0);
    EXPECT_THROW(from_triplets(1, 1, {{1, 0, 1.0}}), InvalidArgument);
}

TEST(Csr, GalerkinProductAndTranspose)
{
    const auto A = checks::poisson_1d(6);
    const auto P = from_dense(6, 3, std::vector<double>{1, 0, 0, 1, 0, 0, 0, 1, 0, 0, 1, 0, 0, 0, 1, 0, 0, 1});
    const auto Ac = galerkin_product(P, A);
    const auto ref = multiply(transpose(P), multiply(A, P));
    EXPECT_EQ(to_dense(Ac), to_dense(ref));
    EXPECT_DOUBLE_EQ(asymmetry(Ac), 0.0);
}

TEST(Csr, MatrixMarketRoundTrip)
{
    const auto A = from_dense(3, 4, random_dense(4, 3, 0.0), 0.5);
    std::stringstream s;
    write_matrix_market(A, s);
    const auto B = read_matrix_market(s);
    EXPECT_EQ(B.rows, 3u);
    EXPECT_EQ(B.cols, 4u);
    EXPECT_EQ(B.col, A.col);
    for (std::size_t k = 0; k < A.nnz(); ++k)
        EXPECT_NEAR(B.val[k], A.val[k], 1e-15 * std::abs(A.val[k]));
}

TEST(Cg, Examples)
{
    const auto b = random_vector(10, 1);
    std::vector<double> x(10, 0.0);
    auto r = cg(as_operator(identity(10)), b, x, nullptr, krylov(KrylovMethod::CG, 1e-10));
    EXPECT_TRUE(r.converged());
    EXPECT_EQ(r.iterations, 1);

    const std::size_t n = 100;
    const auto P = checks::poisson_1d(n);
    const auto bp = random_vector(n, 2);
    std::vector<double> xp(n, 0.0);
    r = cg(as_operator(P), bp, xp, nullptr, krylov(KrylovMethod::CG, 1e-10));
    EXPECT_TRUE(r.converged());
    EXPECT_LE(r.iterations, static_cast<int>(n));
    EXPECT_LE(rel_residual(P, xp, bp), 1e-10);

    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i)
        d[i] = 1.0 + i;
    std::vector<Triplet> t;
    for (std::size_t i = 0; i < n; ++i)
        t.push_back({static_cast<int>(i), static_cast<int>(i), d[i]});
    const auto D = from_triplets(n, n, t);
    const JacobiPreconditioner J(D);
    std::fill(xp.begin(), xp.end(), 0.0);
    r = cg(as_operator(D), bp, xp, &J, krylov(KrylovMethod::CG, 1e-10));
    EXPECT_EQ(r.iterations, 1);
}

TEST(Cg, DetectsIndefiniteMatrix)
{
    const auto A = from_dense(2, 2, std::vector<double>{1, 0, 0, -1});
    std::vector<double> x(2, 0.0);
    const auto r = cg(as_operator(A), std::vector<double>{1, 1}, x, nullptr, krylov(KrylovMethod::CG, 1e-10));
    EXPECT_EQ(r.status, KrylovStatus::Indefinite);
}

TEST(Gmres, Examples)
{
    const auto b = random_vector(10, 1);
    std::vector<double> x(10, 0.0);
    auto r = gmres(as_operator(identity(10)), b, x, nullptr, krylov(KrylovMethod::GMRES, 1e-10));
    EXPECT_EQ(r.iterations, 1);

    const std::size_t n = 40;
    const auto a = random_dense(n, 3, 8.0);
    const auto A = from_dense(n, n, a);
    const auto bb = random_vector(n, 4);
    std::vector<double> xx(n, 0.0);
    r = gmres(as_operator(A), bb, xx, nullptr, krylov(KrylovMethod::GMRES, 1e-12, 500, 50));
    EXPECT_TRUE(r.converged());
    EXPECT_LE(rel_residual(A, xx, bb), 1e-10);
    const auto ref = dense_solve(n, a, bb);
    for (std::size_t i = 0; i < n; ++i)
        EXPECT_NEAR(xx[i], ref[i], 1e-9);
}

TEST(Gmres, RestartStillConverges)
{
    const std::size_t n = 60;
    const auto A = from_dense(n, n, random_dense(n, 5, 8.0));
    const auto b = random_vector(n, 6);
    std::vector<double> x1(n, 0.0), x2(n, 0.0);
    const auto full = gmres(as_operator(A), b, x1, nullptr, krylov(KrylovMethod::GMRES, 1e-10, 2000, 200));
    const auto rest = gmres(as_operator(A), b, x2, nullptr, krylov(KrylovMethod::GMRES, 1e-10, 2000, 5));
    ASSERT_TRUE(full.converged());
    ASSERT_TRUE(rest.converged()) << to_string(rest.status) << " " << rest.iterations << " " << rest.relative_residual();
    EXPECT_GE(full.iterations, 20);
    EXPECT_GT(rest.iterations, full.iterations);
}

TEST(Krylov, ReportedResidualIsRecomputed)
{
    const std::size_t n = 30;
    const auto A = from_dense(n, n, random_dense(n, 8, 6.0));
    const auto b = random_vector(n, 9);
    for (auto m : {KrylovMethod::GMRES, KrylovMethod::FGMRES}) {
        std::vector<double> x(n, 0.0);
        const auto r = solve(A, b, x, nullptr, krylov(m, 1e-6));
        std::vector<double> res(n);
        residual(A, x, b, res);
        EXPECT_NEAR(r.residual_norm, norm2(res), 1e-12 * norm2(b));
    }
    const auto P = checks::poisson_1d(n);
    std::vector<double> x(n, 0.0);
    const auto r = solve(P, b, x, nullptr, krylov(KrylovMethod::CG, 1e-6));
    std::vector<double> res(n);
    residual(P, x, b, res);
    EXPECT_NEAR(r.residual_norm, norm2(res), 1e-12 * norm2(b));
}

TEST(Krylov, FgmresReproducesGmresWithFixedPreconditioner)
{
    for (std::uint32_t s = 0; s < 5; ++s) {
        const std::size_t n = 40;
        const auto A = from_dense(n, n, random_dense(n, 20 + s, 5.0));
        const auto b = random_vector(n, 40 + s);
        const JacobiPreconditioner M(A);
        std::vector<double> x1(n, 0.0), x2(n, 0.0);
        const auto g = gmres(as_operator(A), b, x1, &M, krylov(KrylovMethod::GMRES, 1e-8));
        const auto f = fgmres(as_operator(A), b, x2, &M, krylov(KrylovMethod::FGMRES, 1e-8));
        EXPECT_EQ(g.iterations, f.iterations);
        for (std::size_t i = 0; i < n; ++i)
            EXPECT_NEAR(x1[i], x2[i], 1e-8);
    }
}

TEST(Krylov, ConfigChecks)
{
    EXPECT_THROW(krylov(KrylovMethod::GMRES, 0.0).check(), InvalidArgument);
    EXPECT_THROW(krylov(KrylovMethod::GMRES, 1.0).check(), InvalidArgument);
    EXPECT_THROW(krylov(KrylovMethod::GMRES, 0.1, 0).check(), InvalidArgument);
    EXPECT_THROW(krylov(KrylovMethod::GMRES, 0.1, 10, 0).check(), InvalidArgument);
    EXPECT_EQ(krylov_method_from_string("fgmres"), KrylovMethod::FGMRES);
}

TEST(Ilu0, ExactOnTridiagonal)
{
    const std::size_t n = 200;
    auto A = checks::poisson_1d(n);
    auto v = random_vector(A.nnz(), 3);
    for (std::size_t k = 0; k < A.nnz(); ++k)
        A.val[k] += 0.1 * v[k];
    const Ilu0 ilu(A);
    const auto r = random_vector(n, 4);
    std::vector<double> z(n);
    ilu.apply(r, z);
    EXPECT_LE(rel_residual(A, z, r), 1e-12);
}

TEST(Ilu0, DiagonalFactors)
{
    const auto D = from_dense(3, 3, std::vector<double>{2, 0, 0, 0, 5, 0, 0, 0, -1});
    const Ilu0 ilu(D);
    EXPECT_EQ(to_dense(ilu.factors()), to_dense(D));
}

TEST(Ilu0, ZeroPivotNamesRow)
{
    const auto A = from_dense(2, 2, std::vector<double>{1, 1, 1, 1});
    try {
        Ilu0 ilu(A);
        FAIL() << "expected a zero pivot";
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("row 1"), std::string::npos);
    }
}

TEST(Ilu0, ReducesGmresIterationsOnPoisson)
{
    const auto A = checks::poisson_2d(64);
    const auto b = random_vector(A.rows, 5);
    const Ilu0 ilu(A);
    std::vector<double> x1(A.rows, 0.0), x2(A.rows, 0.0);
    const auto plain = gmres(as_operator(A), b, x1, nullptr, krylov(KrylovMethod::GMRES, 1e-6, 5000));
    const auto pre = gmres(as_operator(A), b, x2, &ilu, krylov(KrylovMethod::GMRES, 1e-6, 5000));
    ASSERT_TRUE(pre.converged());
    EXPECT_LT(pre.iterations, plain.iterations);
}

TEST(Asm, SingleSubdomainIsIlu0)
{
    const auto A = checks::poisson_2d(12);
    const AdditiveSchwarz as(A, whole(A.rows), 1);
    const Ilu0 ilu(A);
    const auto r = random_vector(A.rows, 6);
    std::vector<double> z1(A.rows), z2(A.rows);
    as.apply(r, z1);
    ilu.apply(r, z2);
    for (std::size_t i = 0; i < A.rows; ++i)
        EXPECT_NEAR(z1[i], z2[i], 1e-14);
}

TEST(Asm, BlockDiagonalIsSolvedExactly)
{
    const auto T = checks::poisson_1d(4);
    std::vector<Triplet> t;
    for (int b = 0; b < 2; ++b)
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t k = T.row_ptr[i]; k < T.row_ptr[i + 1]; ++k)
                t.push_back({static_cast<int>(i) + 4 * b, T.col[k] + 4 * b, T.val[k]});
    const auto A = from_triplets(8, 8, t);
    AsmPartition p;
    p.core = {{0, 1, 2, 3}, {4, 5, 6, 7}};
    p.overlapped = p.core;
    const AdditiveSchwarz as(A, p, 1);
    const auto r = random_vector(8, 7);
    std::vector<double> z(8);
    as.apply(r, z);
    EXPECT_LE(rel_residual(A, z, r), 1e-13);
}

TEST(Asm, PartitionCoversAndOverlapsByFaceNeighbors)
{
    const auto m = mesh::build_unit_box_mesh(2, {8, 8, 1});
    const auto p = make_asm_partition(m, 4, 1);
    ASSERT_EQ(p.core.size(), 4u);
    std::vector<int> owner(m.num_elements(), -1);
    for (std::size_t s = 0; s < 4; ++s)
        for (int e : p.core[s]) {
            EXPECT_EQ(owner[e], -1);
            owner[e] = static_cast<int>(s);
        }
    for (int o : owner)
        EXPECT_GE(o, 0);
    for (std::size_t s = 0; s < 4; ++s) {
        std::set<int> expect(p.core[s].begin(), p.core[s].end());
        for (int e : p.core[s])
            for (int f = 0; f < 4; ++f)
                if (m.neighbor(e, f) >= 0)
                    expect.insert(m.neighbor(e, f));
        EXPECT_EQ(std::set<int>(p.overlapped[s].begin(), p.overlapped[s].end()), expect);
    }
}

TEST(Asm, SymmetricOnPoisson)
{
    const std::size_t n = 16;
    const auto A = checks::poisson_2d(n);
    const auto m = mesh::build_unit_box_mesh(2, {static_cast<int>(n), static_cast<int>(n), 1});
    const AdditiveSchwarz as(A, make_asm_partition(m, 4, 1), 1);
    const auto r = random_vector(A.rows, 1), s = random_vector(A.rows, 2);
    std::vector<double> ar(A.rows), as_(A.rows);
    as.apply(r, ar);
    as.apply(s, as_);
    EXPECT_NEAR(dot(ar, s), dot(r, as_), 1e-10 * std::abs(dot(ar, s)));
}

TEST(Asm, IterationsGrowWithSubdomains)
{
    const std::size_t n = 32;
    const auto A = checks::poisson_2d(n);
    const auto m = mesh::build_unit_box_mesh(2, {static_cast<int>(n), static_cast<int>(n), 1});
    const auto b = random_vector(A.rows, 3);
    int prev = 0;
    for (int nsub : {1, 2, 4}) {
        const AdditiveSchwarz as(A, make_asm_partition(m, nsub, 1), 1);
        std::vector<double> x(A.rows, 0.0);
        const auto r = gmres(as_operator(A), b, x, &as, krylov(KrylovMethod::GMRES, 1e-8, 2000, 200));
        ASSERT_TRUE(r.converged()) << nsub;
        EXPECT_GE(r.iterations, prev) << nsub;
        prev = r.iterations;
    }
}

TEST(SparseLu, Examples)
{
    const auto I = identity(5);
    const SparseLu li(I);
    const auto r = random_vector(5, 1);
    std::vector<double> z(5);
    li.apply(r, z);
    EXPECT_EQ(z, r);

    const std::size_t n = 30;
    const auto A = from_dense(n, n, random_dense(n, 2, 0.5));
    const SparseLu la(A);
    const auto b = random_vector(n, 3);
    std::vector<double> x(n);
    la.apply(b, x);
    EXPECT_LE(rel_residual(A, x, b), 1e-12);
}

TEST(SparseLu, RecoversQuadraticOnPoisson)
{
    // -u'' = 2, u(0) = u(1) = 0 has u = x (1 - x); the 3-point stencil is exact on quadratics.
    const std::size_t n = 50;
    const double h = 1.0 / (n + 1);
    const SparseLu lu(checks::poisson_1d(n));
    std::vector<double> b(n, 2.0 * h * h), u(n);
    lu.apply(b, u);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = (i + 1) * h;
        EXPECT_NEAR(u[i], x * (1 - x), 1e-11);
    }
}

TEST(SparseLu, SingularRejected)
{
    EXPECT_THROW(SparseLu(from_dense(2, 2, std::vector<double>{1, 2, 2, 4})), Error);
}

TEST(Gmg, OneLevelIsDirectSolve)
{
    const auto h = box_hierarchy(2, 4, 1);
    auto sp = std::make_shared<fe::FeSpace>(std::make_shared<mesh::Mesh>(h.finest()), 1);
    const auto pb = app::make_mms_problem(sp);
    fe::BlockState st(sp, 2);
    std::fill(st.field(1).begin(), st.field(1).end(), 1.0);
    const auto J = assembly::assemble_jacobian(st, pb);
    const Multigrid mg(h, 1, J(0, 0));
    const auto b = random_vector(J(0, 0).rows, 1);
    std::vector<double> z(b.size());
    mg.apply(b, z);
    EXPECT_LE(rel_residual(J(0, 0), z, b), 1e-12);
}

TEST(Gmg, ProlongationReproducesConstantsAndIsAdjoint)
{
    for (int p : {1, 2}) {
        const auto h = box_hierarchy(3, 2, 2);
        const fe::FeSpace c(std::make_shared<mesh::Mesh>(h.levels[0]), p);
        const fe::FeSpace f(std::make_shared<mesh::Mesh>(h.levels[1]), p);
        const auto P = dg_prolongation(c, f, h.parent_map[1]);
        EXPECT_EQ(P.rows, f.num_dofs());
        EXPECT_EQ(P.cols, c.num_dofs());
        for (double v : spmv(P, std::vector<double>(c.num_dofs(), 1.0)))
            EXPECT_NEAR(v, 1.0, 1e-14);
        // a coarse polynomial is reproduced exactly on the fine mesh
        const ScalarField g = [](const Point& x) { return 1.0 + x[0] - 2.0 * x[1] * x[2]; };
        const auto pf = spmv(P, fe::interpolate(c, g));
        EXPECT_LE(fe::l2_error(f, pf, g), 1e-13);
        const auto xc = random_vector(c.num_dofs(), 1), yf = random_vector(f.num_dofs(), 2);
        EXPECT_NEAR(dot(spmv(P, xc), yf), dot(xc, spmv(transpose(P), yf)), 1e-13 * f.num_dofs());
    }
}

TEST(Gmg, ContractionIsHIndependent)
{
    const auto a = checks::gmg_contraction(3, 10);
    const auto b = checks::gmg_contraction(4, 10);
    EXPECT_LE(a.worst, 0.5);
    EXPECT_LE(b.worst, 0.5);
    EXPECT_LE(b.mean, 1.5 * a.mean + 0.05);
}

TEST(Gmg, RejectsMismatchedFineMatrix)
{
    const auto h = box_hierarchy(2, 2, 2);
    EXPECT_THROW(Multigrid(h, 1, checks::poisson_1d(5)), InvalidArgument);
    EXPECT_THROW(Multigrid(h, 1, std::vector<CsrMatrix>{checks::poisson_1d(5)}), InvalidArgument);
}

TEST(Gmg, LevelMatricesAreKept)
{
    const auto h = box_hierarchy(2, 2, 2);
    std::vector<CsrMatrix> levels;
    for (const auto& m : h.levels) {
        const fe::FeSpace sp(std::make_shared<mesh::Mesh>(m), 1);
        auto A = checks::poisson_1d(sp.num_dofs());
        levels.push_back(A);
    }
    const Multigrid mg(h, 1, levels);
    for (int l = 0; l < mg.num_levels(); ++l)
        EXPECT_EQ(mg.matrix(l).val, levels[l].val);
    const Multigrid galerkin(h, 1, levels.back());
    const auto& P = galerkin.prolongation(1);
    EXPECT_EQ(galerkin.matrix(0).val, multiply(transpose(P), multiply(levels.back(), P)).val);
}

namespace {

// Random SPD block of size n.
CsrMatrix spd_block(std::size_t n, std::uint32_t seed)
{
    return from_dense(n, n, random_dense(n, seed, 2.0 * std::sqrt(static_cast<double>(n)), true));
}

BlockSolverConfig exact_inner()
{
    BlockSolverConfig c;
    c.preonly = true;
    c.pc = PcType::Lu;
    return c;
}

} // namespace

TEST(Fieldsplit, ExactBlockDiagonalConvergesInAtMostMIterations)
{
    const std::size_t n = 20;
    BlockMatrix J(2, n);
    J(0, 0) = spd_block(n, 1);
    J(1, 1) = spd_block(n, 2);
    J(0, 1) = CsrMatrix(n, n);
    J(1, 0) = CsrMatrix(n, n);
    const Fieldsplit P(J, {exact_inner(), exact_inner()}, nullptr, 1);
    const auto b = random_vector(2 * n, 3);
    std::vector<double> x(2 * n, 0.0);
    const auto r = fgmres([&J](auto in, auto out) { J.apply(in, out); }, b, x, &P,
                          krylov(KrylovMethod::FGMRES, 1e-10));
    EXPECT_TRUE(r.converged());
    EXPECT_LE(r.iterations, 2);
}

TEST(Fieldsplit, ExactUpperTriangularConvergesInOneIteration)
{
    const std::size_t n = 15;
    const int m = 3;
    BlockMatrix J(m, n);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            J(i, j) = i == j ? spd_block(n, 10 + i) : (j > i ? from_dense(n, n, random_dense(n, 20 + 3 * i + j, 0.0))
                                                             : CsrMatrix(n, n));
    const Fieldsplit P(J, {exact_inner(), exact_inner(), exact_inner()}, nullptr, 1);
    const auto b = random_vector(m * n, 4);
    std::vector<double> x(m * n, 0.0);
    const auto r = fgmres([&J](auto in, auto out) { J.apply(in, out); }, b, x, &P,
                          krylov(KrylovMethod::FGMRES, 1e-10));
    EXPECT_TRUE(r.converged());
    EXPECT_EQ(r.iterations, 1);
}

TEST(Fieldsplit, SingleFieldIsTheInnerSolver)
{
    const std::size_t n = 25;
    BlockMatrix J(1, n);
    J(0, 0) = spd_block(n, 5);
    BlockSolverConfig c;
    c.pc = PcType::Jacobi;
    c.krylov = krylov(KrylovMethod::GMRES, 1e-6);
    const Fieldsplit P(J, {c}, nullptr, 1);
    const auto r = random_vector(n, 6);
    std::vector<double> z1(n, 0.0), z2(n, 0.0);
    P.apply(r, z1);
    const JacobiPreconditioner M(J(0, 0));
    solve(J(0, 0), r, z2, &M, c.krylov);
    for (std::size_t i = 0; i < n; ++i)
        EXPECT_DOUBLE_EQ(z1[i], z2[i]);
    EXPECT_EQ(P.stats()[0].applications, 1);
}

TEST(Fieldsplit, FirstNewtonStepOnManufacturedProblem)
{
    const auto h = box_hierarchy(3, 2, 3); // 512 elements
    auto sp = std::make_shared<fe::FeSpace>(std::make_shared<mesh::Mesh>(h.finest()), 1);
    const auto pb = app::make_mms_problem(sp);
    const auto x0 = nonlinear::initial_guess(pb, h);
    const auto J = assembly::assemble_jacobian(x0, pb);
    auto rhs = assembly::assemble_residual(x0, pb);
    for (double& v : rhs)
        v = -v;
    const nonlinear::LinearSolverConfig cfg;
    const Fieldsplit P(J, cfg.blocks(2), &h, 1);
    auto op = [&J](std::span<const double> in, std::span<double> out) { J.apply(in, out); };
    std::vector<double> x(rhs.size(), 0.0);
    const auto pre = fgmres(op, rhs, x, &P, cfg.outer);
    EXPECT_TRUE(pre.converged());
    EXPECT_LE(pre.iterations, 60);
    std::fill(x.begin(), x.end(), 0.0);
    auto plain_cfg = cfg.outer;
    plain_cfg.max_iters = 200;
    const auto plain = fgmres(op, rhs, x, nullptr, plain_cfg);
    EXPECT_FALSE(plain.converged());
}

TEST(Fieldsplit, InnerFailureNamesTheBlock)
{
    const std::size_t n = 30;
    BlockMatrix J(2, n);
    J(0, 0) = spd_block(n, 1);
    J(1, 1) = spd_block(n, 2);
    J(0, 1) = CsrMatrix(n, n);
    J(1, 0) = CsrMatrix(n, n);
    J.labels = {"phi", "c1"};
    BlockSolverConfig c;
    c.pc = PcType::None;
    c.krylov = krylov(KrylovMethod::GMRES, 1e-12, 1);
    const Fieldsplit P(J, {c, c}, nullptr, 1);
    std::vector<double> z(2 * n);
    try {
        P.apply(random_vector(2 * n, 3), z);
        FAIL() << "expected an inner failure";
    } catch (const SolverError& e) {
        EXPECT_NE(std::string(e.what()).find("c1"), std::string::npos);
    }
}
