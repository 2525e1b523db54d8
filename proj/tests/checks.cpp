#include "checks.hpp"

#include "cnp/app/problems.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace cnp::checks {

namespace {

struct Mode {
    double a, kx, ky, kz, phase;
};

std::vector<Mode> random_modes(std::mt19937& rng, int n)
{
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<Mode> m;
    for (int i = 0; i < n; ++i)
        m.push_back({u(rng), 3.0 * u(rng), 3.0 * u(rng), 3.0 * u(rng), 3.14 * u(rng)});
    return m;
}

double eval(const std::vector<Mode>& modes, const Point& x)
{
    double s = 0.0;
    for (const auto& m : modes)
        s += m.a * std::sin(m.kx * x[0] + m.ky * x[1] + m.kz * x[2] + m.phase);
    return s / static_cast<double>(modes.size());
}

double rms(std::span<const double> v)
{
    double s = 0.0;
    for (double x : v)
        s += x * x;
    return std::sqrt(s / static_cast<double>(v.size()));
}

} // namespace

fe::BlockState smooth_random_state(const assembly::CnpProblem& pb, std::uint32_t seed, const SmoothState& s)
{
    std::mt19937 rng(seed);
    fe::BlockState st(pb.space, pb.num_fields());
    for (int f = 0; f < pb.num_fields(); ++f) {
        const auto modes = random_modes(rng, 4);
        const double base = f == 0 ? s.phi_base : s.c_base;
        const double amp = f == 0 ? s.phi_amplitude : s.c_amplitude;
        const auto v = fe::interpolate(*pb.space, [&](const Point& x) { return base + amp * eval(modes, x); });
        std::copy(v.begin(), v.end(), st.field(f).begin());
    }
    return st;
}

fe::BlockState discontinuous_random_state(const assembly::CnpProblem& pb, std::uint32_t seed, double phi_amplitude,
                                          double c_lo, double c_hi)
{
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    fe::BlockState st(pb.space, pb.num_fields());
    for (int f = 0; f < pb.num_fields(); ++f)
        for (double& v : st.field(f))
            v = f == 0 ? phi_amplitude * (2.0 * u(rng) - 1.0) : c_lo + (c_hi - c_lo) * u(rng);
    return st;
}

FdReport fd_jacobian_check(const assembly::CnpProblem& pb, const fe::BlockState& state,
                           const assembly::DgParams& params, int directions, double eps, std::uint32_t seed)
{
    const int nf = pb.num_fields();
    const std::size_t n = pb.space->num_dofs();
    const auto J = assembly::assemble_jacobian(state, pb, params);
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);

    FdReport rep;
    rep.fields = nf;
    rep.block.assign(static_cast<std::size_t>(nf * nf), 0.0);
    rep.block_norm.assign(static_cast<std::size_t>(nf * nf), 0.0);

    auto central = [&](const std::vector<double>& d) {
        fe::BlockState p = state, m = state;
        for (std::size_t i = 0; i < d.size(); ++i) {
            p.data[i] += eps * d[i];
            m.data[i] -= eps * d[i];
        }
        const auto rp = assembly::assemble_residual(p, pb, params);
        const auto rm = assembly::assemble_residual(m, pb, params);
        std::vector<double> fd(d.size());
        for (std::size_t i = 0; i < d.size(); ++i)
            fd[i] = (rp[i] - rm[i]) / (2.0 * eps);
        return fd;
    };
    auto rel = [](std::span<const double> a, std::span<const double> b, double* bnorm) {
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            num += (a[i] - b[i]) * (a[i] - b[i]);
            den += b[i] * b[i];
        }
        if (bnorm)
            *bnorm = std::sqrt(den);
        return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
    };

    for (int t = 0; t < directions; ++t) {
        std::vector<double> d(state.data.size());
        for (double& v : d)
            v = u(rng);
        std::vector<double> jd(d.size());
        J.apply(d, jd);
        rep.full = std::max(rep.full, rel(central(d), jd, nullptr));

        for (int j = 0; j < nf; ++j) {
            const double scale = std::max(1.0, rms(state.field(j)));
            std::vector<double> dj(d.size(), 0.0);
            for (std::size_t i = 0; i < n; ++i)
                dj[j * n + i] = scale * d[j * n + i];
            std::vector<double> jdj(d.size());
            J.apply(dj, jdj);
            const auto fd = central(dj);
            for (int i = 0; i < nf; ++i) {
                const std::span<const double> a(fd.data() + i * n, n), b(jdj.data() + i * n, n);
                double bn = 0.0;
                const double e = rel(a, b, &bn);
                auto k = static_cast<std::size_t>(i * nf + j);
                rep.block[k] = std::max(rep.block[k], e);
                rep.block_norm[k] = bn;
            }
        }
    }
    return rep;
}

double charge_identity_error(const assembly::CnpProblem& pb, const fe::BlockState& state,
                             const assembly::DgParams& params)
{
    const auto R = assembly::assemble_residual(state, pb, params);
    const std::size_t n = pb.space->num_dofs();
    std::vector<double> sum(n, 0.0);
    const auto& sys = pb.system;
    for (int k = 0; k < static_cast<int>(sys.names.size()); ++k) {
        const auto rk = assembly::assemble_species_residual(state, pb, k, params);
        const double w = sys.z[k] * sys.weight[k];
        for (std::size_t i = 0; i < n; ++i)
            sum[i] += w * rk[i];
    }
    double diff = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        diff = std::max(diff, std::abs(R[i] - sum[i]));
        scale = std::max(scale, std::abs(R[i]));
    }
    return scale > 0.0 ? diff / scale : diff;
}

linalg::CsrMatrix poisson_1d(std::size_t n)
{
    std::vector<linalg::Triplet> t;
    for (std::size_t i = 0; i < n; ++i) {
        const int r = static_cast<int>(i);
        t.push_back({r, r, 2.0});
        if (i > 0)
            t.push_back({r, r - 1, -1.0});
        if (i + 1 < n)
            t.push_back({r, r + 1, -1.0});
    }
    return linalg::from_triplets(n, n, std::move(t));
}

linalg::CsrMatrix poisson_2d(std::size_t n)
{
    std::vector<linalg::Triplet> t;
    const int m = static_cast<int>(n);
    for (int j = 0; j < m; ++j)
        for (int i = 0; i < m; ++i) {
            const int r = i + m * j;
            t.push_back({r, r, 4.0});
            if (i > 0)
                t.push_back({r, r - 1, -1.0});
            if (i + 1 < m)
                t.push_back({r, r + 1, -1.0});
            if (j > 0)
                t.push_back({r, r - m, -1.0});
            if (j + 1 < m)
                t.push_back({r, r + m, -1.0});
        }
    return linalg::from_triplets(n * n, n * n, std::move(t));
}

Contraction gmg_contraction(int levels, int cycles, const linalg::GmgOptions& options)
{
    auto h = mesh::make_hierarchy(mesh::build_unit_box_mesh(2, {4, 4, 1}));
    for (int l = 1; l < levels; ++l)
        h = mesh::refine_uniform(h);
    std::vector<linalg::CsrMatrix> mats;
    for (const auto& m : h.levels) {
        auto space = std::make_shared<fe::FeSpace>(std::make_shared<mesh::Mesh>(m), 1);
        const auto pb = app::make_mms_problem(space);
        fe::BlockState st(space, 2);
        std::fill(st.field(1).begin(), st.field(1).end(), 1.0);
        mats.push_back(assembly::assemble_jacobian(st, pb)(0, 0));
    }
    const linalg::CsrMatrix A = mats.back();
    const linalg::Multigrid mg(h, 1, std::move(mats), options);

    const std::size_t n = A.rows;
    std::mt19937 rng(42);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> x(n), b(n, 0.0), r(n);
    for (double& v : x)
        v = u(rng);
    Contraction c;
    c.unknowns = n;
    linalg::residual(A, x, b, r);
    const double r0 = linalg::norm2(r);
    double prev = r0, last = r0;
    for (int k = 0; k < cycles; ++k) {
        mg.cycle(b, x);
        linalg::residual(A, x, b, r);
        last = linalg::norm2(r);
        c.worst = std::max(c.worst, last / prev);
        prev = last;
    }
    c.mean = std::pow(last / r0, 1.0 / cycles);
    return c;
}

} // namespace cnp::checks
