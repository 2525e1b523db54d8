#pragma once

#include "cnp/fespace.hpp"
#include "cnp/linalg/csr.hpp"
#include "cnp/physics.hpp"

#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace cnp::assembly {

using linalg::BlockMatrix;

/// Groups of terms in the discrete residual. Used to switch parts of the scheme
/// on and off when checking algebraic identities between equations.
enum Term : unsigned {
    Volume = 1u << 0,              // volume flux and source integrals
    InteriorFlux = 1u << 1,        // averaged physical flux on interior faces
    InteriorSymmetry = 1u << 2,    // concentration-jump symmetrization
    InteriorPenalty = 1u << 3,     // species jump penalty
    InteriorUpwind = 1u << 4,      // |q.n|/2 [c]
    InteriorPotential = 1u << 5,   // symmetrization and penalty of the potential jump
    BoundaryInlet = 1u << 6,
    BoundaryOutlet = 1u << 7,
    BoundaryElectrode = 1u << 8,
    BoundaryDirichlet = 1u << 9,
    Source = 1u << 10, // reaction and charge forcing
    AllTerms = (1u << 11) - 1,
};

/// Terms for which the charge residual equals the charge-weighted sum of all
/// species residuals exactly, for any (discontinuous) state.
inline constexpr unsigned kChargeConsistentTerms =
    Volume | InteriorFlux | InteriorSymmetry | BoundaryInlet | BoundaryElectrode | Source;

struct DgParams {
    double eta = 4.0; // penalty constant
    unsigned terms = AllTerms;
};

/// eta (p+1)^2 / h_face
double penalty(double h_face, int p, double eta);
/// Penalty on local face f of element e; h_face averages the normal extent of the
/// adjacent elements (the element's own extent on the boundary).
double penalty(const mesh::Mesh& mesh, std::size_t e, int local_face, int p, double eta);

/// Everything needed to evaluate the nondimensional CNP residual on a space.
struct CnpProblem {
    std::shared_ptr<const fe::FeSpace> space;
    physics::NondimSystem system;
    VectorField velocity;
    /// Bulk reaction per species (all m species, empty entries mean zero).
    std::vector<ScalarField> reaction;
    /// Right-hand side of the charge equation.
    ScalarField charge_source;
    /// Dirichlet data on Exterior faces: potential and retained concentrations.
    ScalarField phi_exterior;
    std::vector<ScalarField> c_exterior;
    /// Electrode kinetics for ElectrodeAnode / ElectrodeCathode faces.
    std::optional<physics::ButlerVolmerParams> kinetics;

    int num_fields() const { return system.num_retained() + 1; }
    /// Throws InvalidArgument when a tagged boundary lacks the data it needs.
    void check() const;
};

/// Residual blocks (R_Phi, R_c1, ..., R_c{m-1}) stored field after field.
std::vector<double> assemble_residual(const fe::BlockState& state, const CnpProblem& problem, const DgParams& params = {});

/// Exact derivative of assemble_residual.
BlockMatrix assemble_jacobian(const fe::BlockState& state, const CnpProblem& problem, const DgParams& params = {});

/// Mass-conservation residual of species k (0..m-1 in system order). For the
/// eliminated species the concentration is the recovered combination.
std::vector<double> assemble_species_residual(const fe::BlockState& state, const CnpProblem& problem, int species,
                                              const DgParams& params = {});

/// Coefficients of the eliminated concentration.
std::vector<double> recover_eliminated(const fe::BlockState& state, const physics::NondimSystem& system);

/// Retained concentration field index for species k, or -1 for the eliminated one.
int field_of_species(const physics::NondimSystem& system, int species);

struct ElectrodeCurrents {
    double anode = 0.0;   // A
    double cathode = 0.0; // A
    double anode_area = 0.0;   // m^2
    double cathode_area = 0.0; // m^2
};

/// Integrated Butler-Volmer current on each electrode in SI units.
ElectrodeCurrents electrode_currents(const fe::BlockState& state, const CnpProblem& problem);

/// Face-averaged current density (A/m^2) per boundary face; 0 on non-electrode faces.
std::vector<double> electrode_current_density(const fe::BlockState& state, const CnpProblem& problem);

} // namespace cnp::assembly
