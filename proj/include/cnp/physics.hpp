#pragma once

#include "cnp/common.hpp"
#include "cnp/mesh.hpp"

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cnp::physics {

/// SI constants used everywhere in the library.
namespace constants {
inline constexpr double faraday = 96485.33212;   // C/mol
inline constexpr double gas_constant = 8.314462618; // J/(mol K)
} // namespace constants

struct Species {
    std::string name;
    int z = 0;
    double D = 0.0;    // m^2/s
    double c_in = 0.0; // mol/m^3
};

struct IonSystem {
    std::vector<Species> species;
    int eliminated_index = -1; // defaults to the last species
    double T = 298.15;
    double F = constants::faraday;
    double R = constants::gas_constant;

    int eliminated() const { return eliminated_index < 0 ? static_cast<int>(species.size()) - 1 : eliminated_index; }
    double mobility(int k) const { return species.at(k).D / (R * T); }
    /// Indices of the species kept as unknowns, in table order.
    std::vector<int> retained() const;
    int index_of(const std::string& name) const;
};

enum class ValidationStatus { Ok, TooFewSpecies, ElectroneutralityViolated, EliminatedSpeciesNeutral, InvalidSpecies };

struct ValidationResult {
    ValidationStatus status = ValidationStatus::Ok;
    double residual = 0.0; // sum_k z_k c_k^in
    std::string message;

    bool ok() const { return status == ValidationStatus::Ok; }
};

class SystemError : public Error {
public:
    explicit SystemError(ValidationResult r) : Error(r.message), result(std::move(r)) {}
    ValidationResult result;
};

ValidationResult validate_system(const IonSystem& sys);

/// Coefficients of the charge equation after eliminating species m.
/// Indexed over retained species in IonSystem::retained() order.
struct CnpCoefficients {
    std::vector<int> retained;
    int eliminated = -1;
    std::vector<double> a;            // a_km = F z_k (D_k - D_m)
    std::vector<double> kappa_weight; // z_k (z_k mu_k - z_m mu_m) F^2
    std::vector<double> recovery;     // c_m = sum_k recovery_k c_k = -(1/z_m) sum z_k c_k

    double kappa(std::span<const double> c_retained) const;
    double recover(std::span<const double> c_retained) const;
};

/// Throws SystemError when validation fails.
CnpCoefficients eliminate(const IonSystem& sys);

/// Charge-conservation system in nondimensional variables.
///
/// Concentrations are scaled species by species (c_k / c_k^in) and the charge
/// equation is the sum over all species of z_k w_k times the scaled mass equation,
/// w_k = c_k^in / c_ref. With F = RT = 1 and w_k = 1 this reduces to the raw model.
struct NondimSystem {
    // all m species
    std::vector<std::string> names;
    std::vector<int> z;
    std::vector<double> D;      // inverse Peclet numbers D_k / (L u_avg)
    std::vector<double> weight; // c_k^in / c_ref
    std::vector<double> c_in;   // scaled inlet values (1 for physical systems)
    int eliminated = -1;
    std::vector<int> retained;

    // scales for reporting in SI units
    double length = 1.0;   // m
    double velocity = 1.0; // m/s
    double c_ref = 1.0;    // mol/m^3
    std::vector<double> c_scale; // c_k^in in mol/m^3
    double thermal_voltage = 1.0; // RT/F in V
    double faraday = 1.0;

    int num_retained() const { return static_cast<int>(retained.size()); }
    /// a_k = z_k w_k (D_k - D_m), for retained species index r.
    double cross_coefficient(int r) const;
    /// kappa(c) = sum_r kappa_weight(r) c_r.
    double kappa_weight(int r) const;
    /// c_m = sum_r recovery(r) c_r.
    double recovery(int r) const;

    void check() const;
};

/// Nondimensionalization of a physical ion system; c_ref defaults to max_k c_k^in.
NondimSystem nondimensionalize(const IonSystem& sys, double length, double u_avg, std::optional<double> c_ref = {});

/// Direct construction in nondimensional units (F = RT = 1); used by the manufactured case.
NondimSystem make_nondim_system(std::vector<std::string> names, std::vector<int> z, std::vector<double> D_hat,
                                std::vector<double> c_in_scaled, int eliminated);

/// Inverse maps of the scaling.
double dimensional_diffusivity(const NondimSystem& s, int k);
double scaled_potential(const NondimSystem& s, double phi_volts);
double dimensional_potential(const NondimSystem& s, double phi_hat);

struct ButlerVolmerParams;
/// J0 (c_k^in)^(gamma-1) / (u_avg F (c_k^*)^gamma) for the oxidant k.
double nondim_exchange_current(const NondimSystem& s, const ButlerVolmerParams& p, double J0);

/// n-electron redox reaction Ox + n e- -> Red on an electrode.
struct ButlerVolmerParams {
    double J0_avg = 30.0;        // A/m^2
    std::optional<double> width; // m; when set, J0 follows the parabolic width profile
    double c_o_star = 10.0;      // mol/m^3
    double c_r_star = 1.0;
    double gamma = 1.0;
    double alpha1 = 0.5;
    double alpha2 = 0.5;
    int n = 2;
    std::map<mesh::BoundaryTag, double> phi_app; // V
    int oxidant = 0;
    int reductant = -1; // -1: solid reductant with unit activity
    double T = 298.15;

    void check() const;
    double J0(const Point& x_si) const;
};

struct BvResult {
    double J = 0.0;      // A/m^2
    double dJ_dco = 0.0; // per mol/m^3
    double dJ_dcr = 0.0;
    double dJ_dphi = 0.0; // per V
};

/// Current density from the Butler-Volmer law at one point. Concentrations are
/// clipped at zero; gamma < 1 at a clipped zero concentration throws (singular derivative).
BvResult butler_volmer(double c_o, double c_r, double phi, double phi_app, double J0, const ButlerVolmerParams& p);

/// Exchange current J0(z) = 3/5 J0_avg [2 - ((z - w/2)/(w/2))^2], z in [0, w].
double exchange_current_profile(double z, double w, double J0_avg);

/// Fully developed channel flow (6 u_avg / h^2) y (h - y) along x.
VectorField parabolic_velocity(double h, double u_avg);

/// Nondimensional manufactured problem on the unit cube.
struct MmsCase {
    NondimSystem system;
    VectorField velocity;
    ScalarField c1_exact;
    ScalarField phi_exact;
    ScalarField species_forcing; // R_1
    ScalarField charge_forcing;  // f
    std::function<Vec3(const Point&)> grad_c1;
    std::function<Vec3(const Point&)> grad_phi;
};

MmsCase mms_case();

/// Table of Cu2+, SO4 2-, H+ with H+ eliminated (concentrations in mol/m^3).
IonSystem bortels_cuso4();

} // namespace cnp::physics
