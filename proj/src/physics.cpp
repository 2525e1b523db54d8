#include "cnp/physics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace cnp::physics {

std::vector<int> IonSystem::retained() const
{
    std::vector<int> r;
    const int m = eliminated();
    for (int k = 0; k < static_cast<int>(species.size()); ++k)
        if (k != m)
            r.push_back(k);
    return r;
}

int IonSystem::index_of(const std::string& name) const
{
    for (std::size_t k = 0; k < species.size(); ++k)
        if (species[k].name == name)
            return static_cast<int>(k);
    throw InvalidArgument("unknown species '" + name + "'");
}

ValidationResult validate_system(const IonSystem& sys)
{
    ValidationResult r;
    const int m = static_cast<int>(sys.species.size());
    if (m < 2) {
        r.status = ValidationStatus::TooFewSpecies;
        r.message = "ion system needs at least two species";
        return r;
    }
    if (sys.eliminated() < 0 || sys.eliminated() >= m) {
        r.status = ValidationStatus::InvalidSpecies;
        r.message = "eliminated species index out of range";
        return r;
    }
    double sum = 0.0, scale = 0.0;
    for (const auto& s : sys.species) {
        if (!(s.D > 0.0) || s.c_in < 0.0) {
            r.status = ValidationStatus::InvalidSpecies;
            r.message = "species '" + s.name + "' needs D > 0 and c_in >= 0";
            return r;
        }
        sum += s.z * s.c_in;
        scale += std::abs(s.z * s.c_in);
    }
    r.residual = sum;
    if (std::abs(sum) > 1e-12 * std::max(scale, 1e-300)) {
        std::ostringstream msg;
        msg << "inlet composition is not electroneutral: sum z_k c_k^in = " << sum;
        r.status = ValidationStatus::ElectroneutralityViolated;
        r.message = msg.str();
        return r;
    }
    if (sys.species[sys.eliminated()].z == 0) {
        r.status = ValidationStatus::EliminatedSpeciesNeutral;
        r.message = "eliminated species '" + sys.species[sys.eliminated()].name + "' must be charged";
        return r;
    }
    return r;
}

double CnpCoefficients::kappa(std::span<const double> c) const
{
    double k = 0.0;
    for (std::size_t r = 0; r < kappa_weight.size(); ++r)
        k += kappa_weight[r] * c[r];
    return k;
}

double CnpCoefficients::recover(std::span<const double> c) const
{
    double v = 0.0;
    for (std::size_t r = 0; r < recovery.size(); ++r)
        v += recovery[r] * c[r];
    return v;
}

CnpCoefficients eliminate(const IonSystem& sys)
{
    const auto v = validate_system(sys);
    if (!v.ok())
        throw SystemError(v);
    CnpCoefficients c;
    c.eliminated = sys.eliminated();
    c.retained = sys.retained();
    const auto& sm = sys.species[c.eliminated];
    const double mu_m = sys.mobility(c.eliminated);
    for (int k : c.retained) {
        const auto& s = sys.species[k];
        const double mu_k = sys.mobility(k);
        c.a.push_back(sys.F * s.z * (s.D - sm.D));
        c.kappa_weight.push_back(s.z * (s.z * mu_k - sm.z * mu_m) * sys.F * sys.F);
        c.recovery.push_back(-static_cast<double>(s.z) / sm.z);
    }
    return c;
}

double NondimSystem::cross_coefficient(int r) const
{
    const int k = retained[r], m = eliminated;
    return z[k] * weight[k] * (D[k] - D[m]);
}

double NondimSystem::kappa_weight(int r) const
{
    const int k = retained[r], m = eliminated;
    return z[k] * weight[k] * (z[k] * D[k] - z[m] * D[m]);
}

double NondimSystem::recovery(int r) const
{
    const int k = retained[r], m = eliminated;
    return -(z[k] * weight[k]) / (z[m] * weight[m]);
}

void NondimSystem::check() const
{
    const std::size_t m = z.size();
    if (m < 2 || D.size() != m || weight.size() != m || c_in.size() != m || names.size() != m)
        throw InvalidArgument("nondimensional system arrays are inconsistent");
    if (eliminated < 0 || eliminated >= static_cast<int>(m) || z[eliminated] == 0)
        throw InvalidArgument("eliminated species must exist and be charged");
    for (double d : D)
        if (!(d > 0.0))
            throw InvalidArgument("inverse Peclet numbers must be positive");
}

NondimSystem nondimensionalize(const IonSystem& sys, double length, double u_avg, std::optional<double> c_ref)
{
    if (!(length > 0.0) || !(u_avg > 0.0) || (c_ref && !(*c_ref > 0.0)))
        throw InvalidArgument("nondimensionalization scales must be positive");
    const auto v = validate_system(sys);
    if (!v.ok())
        throw SystemError(v);

    NondimSystem s;
    s.length = length;
    s.velocity = u_avg;
    double cmax = 0.0;
    for (const auto& sp : sys.species)
        cmax = std::max(cmax, sp.c_in);
    s.c_ref = c_ref.value_or(cmax);
    if (!(s.c_ref > 0.0))
        throw InvalidArgument("reference concentration must be positive");
    s.thermal_voltage = sys.R * sys.T / sys.F;
    s.faraday = sys.F;
    s.eliminated = sys.eliminated();
    s.retained = sys.retained();
    for (const auto& sp : sys.species) {
        const double scale = sp.c_in > 0.0 ? sp.c_in : s.c_ref;
        s.names.push_back(sp.name);
        s.z.push_back(sp.z);
        s.D.push_back(sp.D / (length * u_avg));
        s.c_scale.push_back(scale);
        s.weight.push_back(scale / s.c_ref);
        s.c_in.push_back(sp.c_in / scale);
    }
    return s;
}

NondimSystem make_nondim_system(std::vector<std::string> names, std::vector<int> z, std::vector<double> D_hat,
                                std::vector<double> c_in_scaled, int eliminated)
{
    NondimSystem s;
    s.names = std::move(names);
    s.z = std::move(z);
    s.D = std::move(D_hat);
    s.c_in = std::move(c_in_scaled);
    s.weight.assign(s.z.size(), 1.0);
    s.c_scale.assign(s.z.size(), 1.0);
    s.eliminated = eliminated;
    for (int k = 0; k < static_cast<int>(s.z.size()); ++k)
        if (k != eliminated)
            s.retained.push_back(k);
    s.check();
    return s;
}

double dimensional_diffusivity(const NondimSystem& s, int k) { return s.D.at(k) * s.length * s.velocity; }
double scaled_potential(const NondimSystem& s, double phi_volts) { return phi_volts / s.thermal_voltage; }
double dimensional_potential(const NondimSystem& s, double phi_hat) { return phi_hat * s.thermal_voltage; }

double nondim_exchange_current(const NondimSystem& s, const ButlerVolmerParams& p, double J0)
{
    const double cin = s.c_scale.at(p.oxidant);
    return J0 * std::pow(cin, p.gamma - 1.0) / (s.velocity * s.faraday * std::pow(p.c_o_star, p.gamma));
}

void ButlerVolmerParams::check() const
{
    if (!(alpha1 > 0.0 && alpha1 <= 1.0 && alpha2 > 0.0 && alpha2 <= 1.0))
        throw InvalidArgument("Butler-Volmer transfer coefficients must lie in (0, 1]");
    if (n < 1)
        throw InvalidArgument("Butler-Volmer electron count must be >= 1");
    if (!(gamma > 0.0))
        throw InvalidArgument("Butler-Volmer exponent gamma must be positive");
    if (!(c_o_star > 0.0) || (reductant >= 0 && !(c_r_star > 0.0)))
        throw InvalidArgument("Butler-Volmer reference concentrations must be positive");
}

double ButlerVolmerParams::J0(const Point& x) const
{
    if (width)
        return exchange_current_profile(std::clamp(x[2], 0.0, *width), *width, J0_avg);
    return J0_avg;
}

namespace {

// (c / c*)^gamma and its derivative with c clipped at zero.
void activity(double c, double c_star, double gamma, double& a, double& da)
{
    const double cc = std::max(c, 0.0);
    if (cc == 0.0) {
        if (gamma < 1.0)
            throw Error("Butler-Volmer derivative is singular: gamma < 1 at zero concentration");
        a = 0.0;
        da = (gamma == 1.0 && c >= 0.0) ? 1.0 / c_star : 0.0;
        return;
    }
    a = std::pow(cc / c_star, gamma);
    da = c > 0.0 ? gamma * a / cc : 0.0;
}

} // namespace

BvResult butler_volmer(double c_o, double c_r, double phi, double phi_app, double J0, const ButlerVolmerParams& p)
{
    const double f = p.n * constants::faraday / (constants::gas_constant * p.T);
    const double eta = phi_app - phi;
    const double ea = std::exp(p.alpha1 * f * eta);
    const double ec = std::exp(-p.alpha2 * f * eta);
    double ao = 0.0, dao = 0.0, ar = 1.0, dar = 0.0;
    activity(c_o, p.c_o_star, p.gamma, ao, dao);
    if (p.reductant >= 0)
        activity(c_r, p.c_r_star, p.gamma, ar, dar);

    BvResult r;
    r.J = J0 * (ar * ea - ao * ec);
    r.dJ_dco = -J0 * dao * ec;
    r.dJ_dcr = J0 * dar * ea;
    r.dJ_dphi = J0 * (-p.alpha1 * f * ar * ea - p.alpha2 * f * ao * ec);
    return r;
}

double exchange_current_profile(double z, double w, double J0_avg)
{
    if (!(w > 0.0))
        throw InvalidArgument("channel width must be positive");
    if (z < 0.0 || z > w)
        throw InvalidArgument("width coordinate outside [0, w]");
    const double s = (z - 0.5 * w) / (0.5 * w);
    return 0.6 * J0_avg * (2.0 - s * s);
}

VectorField parabolic_velocity(double h, double u_avg)
{
    if (!(h > 0.0))
        throw InvalidArgument("channel height must be positive");
    const double c = 6.0 * u_avg / (h * h);
    return [c, h](const Point& x) -> Vec3 { return {c * x[1] * (h - x[1]), 0.0, 0.0}; };
}

MmsCase mms_case()
{
    MmsCase mc;
    mc.system = make_nondim_system({"c1", "c2"}, {2, -2}, {5e-6, 1e-5}, {1.0, 1.0}, 1);
    const double D1 = mc.system.D[0];
    const double z1 = mc.system.z[0];
    const double a1 = mc.system.cross_coefficient(0);
    const double K1 = mc.system.kappa_weight(0);

    mc.velocity = [](const Point& x) -> Vec3 { return {6.0 * x[1] * (1.0 - x[1]), 0.0, 0.0}; };
    mc.c1_exact = [](const Point& x) { return std::cos(x[0]) + std::sin(x[1]) + 3.0; };
    mc.phi_exact = [](const Point& x) { return std::sin(x[0]) + std::cos(x[1]) + 3.0; };
    mc.grad_c1 = [](const Point& x) -> Vec3 { return {-std::sin(x[0]), std::cos(x[1]), 0.0}; };
    mc.grad_phi = [](const Point& x) -> Vec3 { return {std::cos(x[0]), -std::sin(x[1]), 0.0}; };

    // R_1 = -D1 lap c + u.grad c - z1 D1 (grad c.grad phi + c lap phi)
    mc.species_forcing = [D1, z1](const Point& x) {
        const double c = std::cos(x[0]) + std::sin(x[1]) + 3.0;
        const double lap_c = -std::cos(x[0]) - std::sin(x[1]);
        const double lap_phi = -std::sin(x[0]) - std::cos(x[1]);
        const double gc_gp = -std::sin(x[0]) * std::cos(x[0]) - std::cos(x[1]) * std::sin(x[1]);
        const double ux = 6.0 * x[1] * (1.0 - x[1]);
        return -D1 * lap_c + ux * (-std::sin(x[0])) - z1 * D1 * (gc_gp + c * lap_phi);
    };
    // f = -a1 lap c - K1 (grad c.grad phi + c lap phi)
    mc.charge_forcing = [a1, K1](const Point& x) {
        const double c = std::cos(x[0]) + std::sin(x[1]) + 3.0;
        const double lap_c = -std::cos(x[0]) - std::sin(x[1]);
        const double lap_phi = -std::sin(x[0]) - std::cos(x[1]);
        const double gc_gp = -std::sin(x[0]) * std::cos(x[0]) - std::cos(x[1]) * std::sin(x[1]);
        return -a1 * lap_c - K1 * (gc_gp + c * lap_phi);
    };
    return mc;
}

IonSystem bortels_cuso4()
{
    IonSystem sys;
    sys.species = {
        {"Cu2+", 2, 7.20e-10, 10.0},
        {"SO4 2-", -2, 10.65e-10, 1010.0},
        {"H+", 1, 93.12e-10, 2000.0},
    };
    sys.eliminated_index = 2;
    sys.T = 298.15;
    return sys;
}

} // namespace cnp::physics
