#include "cnp/linalg/krylov.hpp"

#include <algorithm>
#include <cmath>

namespace cnp::linalg {

std::string to_string(KrylovMethod m)
{
    switch (m) {
    case KrylovMethod::CG:
        return "cg";
    case KrylovMethod::GMRES:
        return "gmres";
    case KrylovMethod::FGMRES:
        return "fgmres";
    }
    return "?";
}

KrylovMethod krylov_method_from_string(const std::string& s)
{
    if (s == "cg")
        return KrylovMethod::CG;
    if (s == "gmres")
        return KrylovMethod::GMRES;
    if (s == "fgmres")
        return KrylovMethod::FGMRES;
    throw InvalidArgument("unknown Krylov method '" + s + "'");
}

std::string to_string(KrylovStatus s)
{
    switch (s) {
    case KrylovStatus::Converged:
        return "converged";
    case KrylovStatus::MaxIterations:
        return "max_iterations";
    case KrylovStatus::Indefinite:
        return "indefinite";
    case KrylovStatus::Breakdown:
        return "breakdown";
    }
    return "?";
}

void KrylovConfig::check() const
{
    if (!(rtol > 0.0 && rtol < 1.0))
        throw InvalidArgument("Krylov rtol must lie in (0, 1)");
    if (atol < 0.0)
        throw InvalidArgument("Krylov atol must be nonnegative");
    if (max_iters < 1)
        throw InvalidArgument("Krylov max_iters must be >= 1");
    if (restart < 1)
        throw InvalidArgument("GMRES restart must be >= 1");
}

LinearOperator as_operator(const CsrMatrix& A)
{
    return [&A](std::span<const double> x, std::span<double> y) { spmv(A, x, y); };
}

namespace {

void precondition(const Preconditioner* M, std::span<const double> r, std::span<double> z)
{
    if (M)
        M->apply(r, z);
    else
        std::copy(r.begin(), r.end(), z.begin());
}

double true_residual(const LinearOperator& A, std::span<const double> b, std::span<const double> x,
                     std::vector<double>& r)
{
    r.resize(b.size());
    A(x, r);
    for (std::size_t i = 0; i < r.size(); ++i)
        r[i] = b[i] - r[i];
    return norm2(r);
}

KrylovResult gmres_impl(const LinearOperator& A, std::span<const double> b, std::span<double> x,
                        const Preconditioner* M, const KrylovConfig& cfg, const Monitor& monitor, bool flexible)
{
    cfg.check();
    const std::size_t n = b.size();
    const int m = cfg.restart;
    KrylovResult res;
    res.rhs_norm = norm2(b);
    const double target = std::max(cfg.rtol * res.rhs_norm, cfg.atol);

    std::vector<std::vector<double>> V(m + 1, std::vector<double>(n));
    std::vector<std::vector<double>> Z(flexible ? m : 0, std::vector<double>(n));
    std::vector<double> H(static_cast<std::size_t>(m + 1) * m), cs(m), sn(m), g(m + 1), y(m);
    std::vector<double> r, z(n), w(n);
    auto h = [&](int i, int j) -> double& { return H[static_cast<std::size_t>(i) * m + j]; };

    double beta = true_residual(A, b, x, r);
    res.history.push_back(beta);
    if (monitor)
        monitor(0, beta);
    while (true) {
        if (beta <= target) {
            res.status = KrylovStatus::Converged;
            break;
        }
        if (res.iterations >= cfg.max_iters) {
            res.status = KrylovStatus::MaxIterations;
            break;
        }
        for (std::size_t i = 0; i < n; ++i)
            V[0][i] = r[i] / beta;
        std::fill(g.begin(), g.end(), 0.0);
        g[0] = beta;
        int k = 0;
        bool breakdown = false;
        for (int j = 0; j < m && res.iterations < cfg.max_iters; ++j) {
            auto& zj = flexible ? Z[j] : z;
            precondition(M, V[j], zj);
            A(zj, w);
            for (int i = 0; i <= j; ++i) {
                h(i, j) = dot(w, V[i]);
                axpy(-h(i, j), V[i], w);
            }
            const double hn = norm2(w);
            h(j + 1, j) = hn;
            for (int i = 0; i < j; ++i) {
                const double t = cs[i] * h(i, j) + sn[i] * h(i + 1, j);
                h(i + 1, j) = -sn[i] * h(i, j) + cs[i] * h(i + 1, j);
                h(i, j) = t;
            }
            const double d = std::hypot(h(j, j), h(j + 1, j));
            if (d == 0.0) {
                breakdown = true;
                break;
            }
            cs[j] = h(j, j) / d;
            sn[j] = h(j + 1, j) / d;
            h(j, j) = d;
            h(j + 1, j) = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] = cs[j] * g[j];
            ++res.iterations;
            k = j + 1;
            const double est = std::abs(g[j + 1]);
            res.history.push_back(est);
            if (monitor)
                monitor(res.iterations, est);
            if (hn == 0.0 || est <= target)
                break;
            for (std::size_t i = 0; i < n; ++i)
                V[j + 1][i] = w[i] / hn;
        }
        for (int i = k - 1; i >= 0; --i) {
            double s = g[i];
            for (int l = i + 1; l < k; ++l)
                s -= h(i, l) * y[l];
            y[i] = s / h(i, i);
        }
        if (flexible) {
            for (int i = 0; i < k; ++i)
                axpy(y[i], Z[i], x);
        } else if (k > 0) {
            std::fill(w.begin(), w.end(), 0.0);
            for (int i = 0; i < k; ++i)
                axpy(y[i], V[i], w);
            precondition(M, w, z);
            axpy(1.0, z, x);
        }
        beta = true_residual(A, b, x, r);
        if (breakdown && beta > target) {
            res.status = KrylovStatus::Breakdown;
            break;
        }
    }
    res.residual_norm = beta;
    return res;
}

} // namespace

KrylovResult cg(const LinearOperator& A, std::span<const double> b, std::span<double> x, const Preconditioner* M,
                const KrylovConfig& cfg, const Monitor& monitor)
{
    cfg.check();
    const std::size_t n = b.size();
    KrylovResult res;
    res.rhs_norm = norm2(b);
    const double target = std::max(cfg.rtol * res.rhs_norm, cfg.atol);
    std::vector<double> r, z(n), p(n), Ap(n);
    double rn = true_residual(A, b, x, r);
    res.history.push_back(rn);
    if (monitor)
        monitor(0, rn);
    if (rn <= target) {
        res.status = KrylovStatus::Converged;
        res.residual_norm = rn;
        return res;
    }
    precondition(M, r, z);
    p = z;
    double rz = dot(r, z);
    while (true) {
        if (res.iterations >= cfg.max_iters) {
            res.status = KrylovStatus::MaxIterations;
            break;
        }
        A(p, Ap);
        const double pAp = dot(p, Ap);
        if (!(pAp > 0.0)) {
            res.status = KrylovStatus::Indefinite;
            break;
        }
        const double alpha = rz / pAp;
        axpy(alpha, p, x);
        axpy(-alpha, Ap, r);
        ++res.iterations;
        rn = norm2(r);
        res.history.push_back(rn);
        if (monitor)
            monitor(res.iterations, rn);
        if (rn <= target) {
            res.status = KrylovStatus::Converged;
            break;
        }
        precondition(M, r, z);
        const double rz_new = dot(r, z);
        if (!(rz_new > 0.0)) {
            res.status = KrylovStatus::Indefinite;
            break;
        }
        const double beta = rz_new / rz;
        rz = rz_new;
        for (std::size_t i = 0; i < n; ++i)
            p[i] = z[i] + beta * p[i];
    }
    res.residual_norm = true_residual(A, b, x, r);
    return res;
}

KrylovResult gmres(const LinearOperator& A, std::span<const double> b, std::span<double> x, const Preconditioner* M,
                   const KrylovConfig& cfg, const Monitor& monitor)
{
    return gmres_impl(A, b, x, M, cfg, monitor, false);
}

KrylovResult fgmres(const LinearOperator& A, std::span<const double> b, std::span<double> x, const Preconditioner* M,
                    const KrylovConfig& cfg, const Monitor& monitor)
{
    return gmres_impl(A, b, x, M, cfg, monitor, true);
}

KrylovResult solve(const LinearOperator& A, std::span<const double> b, std::span<double> x, const Preconditioner* M,
                   const KrylovConfig& cfg, const Monitor& monitor)
{
    switch (cfg.method) {
    case KrylovMethod::CG:
        return cg(A, b, x, M, cfg, monitor);
    case KrylovMethod::GMRES:
        return gmres(A, b, x, M, cfg, monitor);
    case KrylovMethod::FGMRES:
        return fgmres(A, b, x, M, cfg, monitor);
    }
    throw InvalidArgument("unknown Krylov method");
}

KrylovResult solve(const CsrMatrix& A, std::span<const double> b, std::span<double> x, const Preconditioner* M,
                   const KrylovConfig& cfg, const Monitor& monitor)
{
    if (A.rows != A.cols || A.rows != b.size() || b.size() != x.size())
        throw InvalidArgument("linear system dimension mismatch");
    return solve(as_operator(A), b, x, M, cfg, monitor);
}

} // namespace cnp::linalg
