#pragma once

#include "cnp/assembly.hpp"
#include "cnp/linalg/csr.hpp"
#include "cnp/linalg/multigrid.hpp"

#include <cstdint>
#include <vector>

namespace cnp::checks {

/// Random smooth fields: base + amplitude * (mean of four random trigonometric modes).
struct SmoothState {
    double phi_base = 3.0;
    double phi_amplitude = 1.0;
    double c_base = 3.0;
    double c_amplitude = 1.0;
};
fe::BlockState smooth_random_state(const assembly::CnpProblem& problem, std::uint32_t seed, const SmoothState& s = {});

/// Independent random value per coefficient, c in [c_lo, c_hi], Phi in [-phi_amplitude, phi_amplitude].
fe::BlockState discontinuous_random_state(const assembly::CnpProblem& problem, std::uint32_t seed,
                                          double phi_amplitude, double c_lo = 0.5, double c_hi = 2.0);

struct FdReport {
    int fields = 0;
    double full = 0.0;               // max over directions, all blocks at once
    std::vector<double> block;       // [i * fields + j], max over directions
    std::vector<double> block_norm;  // [i * fields + j], ||J_ij d_j|| of the last direction
};

/// Central differences (R(x + e d) - R(x - e d)) / 2e against J d, relative 2-norm error.
/// Block (i, j) perturbs field j only, along a direction scaled by max(1, rms(x_j)).
FdReport fd_jacobian_check(const assembly::CnpProblem& problem, const fe::BlockState& state,
                           const assembly::DgParams& params, int directions, double eps, std::uint32_t seed);

/// max |R_Phi - sum_k z_k w_k R_k| / max |R_Phi|, species residuals including the eliminated one.
double charge_identity_error(const assembly::CnpProblem& problem, const fe::BlockState& state,
                             const assembly::DgParams& params);

/// 1D Dirichlet Laplacian tridiag(-1, 2, -1) of size n.
linalg::CsrMatrix poisson_1d(std::size_t n);
/// 2D 5-point Dirichlet Laplacian on an n x n interior grid.
linalg::CsrMatrix poisson_2d(std::size_t n);

} // namespace cnp::checks

namespace cnp::checks {

struct Contraction {
    double mean = 0.0;  // (||r_k|| / ||r_0||)^(1/k)
    double worst = 0.0; // max_k ||r_k|| / ||r_{k-1}||
    std::size_t unknowns = 0;
};

/// V-cycles on the potential block of the 2D manufactured problem at c = 1, Phi = 0
/// (an SIPG Poisson matrix) assembled on each level of a hierarchy of `levels` levels over a 4 x 4 coarse mesh.
/// Starts from a random iterate with zero right-hand side.
Contraction gmg_contraction(int levels, int cycles, const linalg::GmgOptions& options = {});

} // namespace cnp::checks
