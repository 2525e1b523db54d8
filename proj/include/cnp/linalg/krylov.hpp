#pragma once

#include "cnp/linalg/csr.hpp"
#include "cnp/linalg/precond.hpp"

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace cnp::linalg {

enum class KrylovMethod { CG, GMRES, FGMRES };

std::string to_string(KrylovMethod m);
KrylovMethod krylov_method_from_string(const std::string& s);

struct KrylovConfig {
    KrylovMethod method = KrylovMethod::GMRES;
    double rtol = 1e-6; // relative to ||b||
    double atol = 0.0;
    int max_iters = 1000;
    int restart = 30;

    void check() const;
};

enum class KrylovStatus { Converged, MaxIterations, Indefinite, Breakdown };

std::string to_string(KrylovStatus s);

struct KrylovResult {
    KrylovStatus status = KrylovStatus::MaxIterations;
    int iterations = 0;
    double rhs_norm = 0.0;
    double residual_norm = 0.0; // recomputed ||b - A x||
    std::vector<double> history;  // residual estimate per iteration, entry 0 is the start

    bool converged() const { return status == KrylovStatus::Converged; }
    double relative_residual() const { return rhs_norm > 0.0 ? residual_norm / rhs_norm : residual_norm; }
};

using LinearOperator = std::function<void(std::span<const double>, std::span<double>)>;
using Monitor = std::function<void(int iteration, double residual)>;

LinearOperator as_operator(const CsrMatrix& A);

/// Preconditioned CG; M must be symmetric positive definite. Reports Indefinite
/// when a search direction has nonpositive curvature.
KrylovResult cg(const LinearOperator& A, std::span<const double> b, std::span<double> x, const Preconditioner* M,
                const KrylovConfig& cfg, const Monitor& monitor = {});

/// Right-preconditioned restarted GMRES.
KrylovResult gmres(const LinearOperator& A, std::span<const double> b, std::span<double> x, const Preconditioner* M,
                   const KrylovConfig& cfg, const Monitor& monitor = {});

/// Flexible GMRES: keeps the preconditioned directions, so M may change between
/// applications (e.g. inner Krylov solves).
KrylovResult fgmres(const LinearOperator& A, std::span<const double> b, std::span<double> x, const Preconditioner* M,
                    const KrylovConfig& cfg, const Monitor& monitor = {});

/// Dispatch on cfg.method.
KrylovResult solve(const LinearOperator& A, std::span<const double> b, std::span<double> x, const Preconditioner* M,
                   const KrylovConfig& cfg, const Monitor& monitor = {});
KrylovResult solve(const CsrMatrix& A, std::span<const double> b, std::span<double> x, const Preconditioner* M,
                   const KrylovConfig& cfg, const Monitor& monitor = {});

} // namespace cnp::linalg
