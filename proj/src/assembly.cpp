#include "cnp/assembly.hpp"

#include "cnp/parallel.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace cnp::assembly {

double penalty(double h_face, int p, double eta)
{
    if (!(h_face > 0.0))
        throw InvalidArgument("degenerate face: normal extent must be positive");
    if (!(eta > 0.0))
        throw InvalidArgument("penalty constant must be positive");
    return eta * (p + 1.0) * (p + 1.0) / h_face;
}

double penalty(const mesh::Mesh& mesh, std::size_t e, int f, int p, double eta)
{
    const int axis = mesh::face_axis(f);
    double h = mesh.element_size(e)[axis];
    const int nbr = mesh.neighbor(e, f);
    if (nbr >= 0)
        h = 0.5 * (h + mesh.element_size(static_cast<std::size_t>(nbr))[axis]);
    return penalty(h, p, eta);
}

int field_of_species(const physics::NondimSystem& s, int k)
{
    for (int r = 0; r < s.num_retained(); ++r)
        if (s.retained[r] == k)
            return r;
    return -1;
}

void CnpProblem::check() const
{
    if (!space)
        throw InvalidArgument("problem has no finite element space");
    system.check();
    if (!velocity)
        throw InvalidArgument("problem has no velocity field");
    const int m = static_cast<int>(system.z.size());
    if (!reaction.empty() && static_cast<int>(reaction.size()) != m)
        throw InvalidArgument("reaction list must be empty or hold one entry per species");
    bool exterior = false, electrode = false;
    for (const auto& bf : space->mesh().boundary_faces()) {
        if (bf.tag == mesh::BoundaryTag::Exterior)
            exterior = true;
        if (mesh::is_electrode(bf.tag)) {
            electrode = true;
            if (!kinetics || !kinetics->phi_app.contains(bf.tag))
                throw InvalidArgument("electrode face tagged " + mesh::to_string(bf.tag) +
                                      " has no applied potential");
        }
    }
    if (exterior) {
        if (!phi_exterior || static_cast<int>(c_exterior.size()) != system.num_retained())
            throw InvalidArgument("Exterior faces need Dirichlet data for the potential and every retained species");
        for (const auto& g : c_exterior)
            if (!g)
                throw InvalidArgument("missing concentration Dirichlet data");
    }
    if (electrode) {
        kinetics->check();
        if (kinetics->oxidant < 0 || kinetics->oxidant >= m || kinetics->reductant >= m)
            throw InvalidArgument("Butler-Volmer species index out of range");
    }
}

namespace {

constexpr int kMaxFields = 8;
constexpr int kMaxSpecies = kMaxFields;

void axpy3(Vec3& y, double a, const Vec3& x)
{
    y[0] += a * x[0];
    y[1] += a * x[1];
    y[2] += a * x[2];
}

Vec3 scaled(const Vec3& x, double a) { return {a * x[0], a * x[1], a * x[2]}; }

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// Field values and physical gradients at one point.
struct Trace {
    double phi = 0.0;
    Vec3 gphi{};
    std::array<double, kMaxFields> c{};
    std::array<Vec3, kMaxFields> gc{};
};

// Derivative of an integrand s v + V.grad v with respect to the value and the
// gradient of one trial field.
struct Lin {
    double ss = 0.0;
    Vec3 sg{};
    Vec3 vs{};
    double vg = 0.0;
    bool active = false;

    Lin& touch()
    {
        active = true;
        return *this;
    }
};

struct BvFlux {
    double J = 0.0; // A/m^2
    std::array<double, kMaxSpecies> g{};
    std::array<std::array<double, kMaxFields>, kMaxSpecies> dg_dc{};
    std::array<double, kMaxSpecies> dg_dphi{};
};

// Basis values and physical gradients at one quadrature point.
struct Basis {
    std::vector<double> v;
    std::vector<Vec3> g;

    void load(const fe::Tabulation& tab, int q, const Vec3& inv_h)
    {
        const int nb = tab.num_basis;
        v.resize(nb);
        g.resize(nb);
        for (int i = 0; i < nb; ++i) {
            v[i] = tab.value(q, i);
            const Vec3& gr = tab.grad(q, i);
            g[i] = {gr[0] * inv_h[0], gr[1] * inv_h[1], gr[2] * inv_h[2]};
        }
    }
};

enum class Pattern { Empty, Diagonal, Full };

class Discretization {
public:
    Discretization(const CnpProblem& pb, const DgParams& prm)
        : pb_(pb), prm_(prm), space_(*pb.space), mesh_(space_.mesh()), ref_(space_.ref()), sys_(pb.system)
    {
        pb.check();
        nb_ = space_.dofs_per_element();
        nr_ = sys_.num_retained();
        nf_ = nr_ + 1;
        m_ = static_cast<int>(sys_.z.size());
        if (nf_ > kMaxFields || m_ > kMaxSpecies)
            throw InvalidArgument("too many species for the assembly kernels");
        dim_ = space_.dim();
        p_ = space_.order();
        for (int r = 0; r < nr_; ++r) {
            a_[r] = sys_.cross_coefficient(r);
            K_[r] = sys_.kappa_weight(r);
            rec_[r] = sys_.recovery(r);
        }
        for (int k = 0; k < m_; ++k) {
            field_[k] = field_of_species(sys_, k);
            for (int r = 0; r < nr_; ++r)
                dcoef_[k][r] = field_[k] >= 0 ? (field_[k] == r ? 1.0 : 0.0) : rec_[r];
        }
    }

    int num_fields() const { return nf_; }
    int dofs_per_element() const { return nb_; }

    void gather(const fe::BlockState& st, std::size_t e, std::vector<double>& loc) const
    {
        loc.resize(static_cast<std::size_t>(nf_) * nb_);
        const std::size_t n = space_.num_dofs(), off = space_.offset(e);
        for (int f = 0; f < nf_; ++f)
            for (int i = 0; i < nb_; ++i)
                loc[f * nb_ + i] = st.data[f * n + off + i];
    }

    Trace eval(const Basis& b, const std::vector<double>& loc) const
    {
        Trace t;
        for (int i = 0; i < nb_; ++i) {
            t.phi += loc[i] * b.v[i];
            axpy3(t.gphi, loc[i], b.g[i]);
            for (int r = 0; r < nr_; ++r) {
                const double cr = loc[(1 + r) * nb_ + i];
                t.c[r] += cr * b.v[i];
                axpy3(t.gc[r], cr, b.g[i]);
            }
        }
        return t;
    }

    double cval(const Trace& t, int k) const
    {
        double s = 0.0;
        for (int r = 0; r < nr_; ++r)
            s += dcoef_[k][r] * t.c[r];
        return s;
    }

    Vec3 cgrad(const Trace& t, int k) const
    {
        Vec3 g{};
        for (int r = 0; r < nr_; ++r)
            axpy3(g, dcoef_[k][r], t.gc[r]);
        return g;
    }

    double kappa(const Trace& t) const
    {
        double s = 0.0;
        for (int r = 0; r < nr_; ++r)
            s += K_[r] * t.c[r];
        return s;
    }

    double exterior_c(int k, const Point& x) const
    {
        double s = 0.0;
        for (int r = 0; r < nr_; ++r)
            if (dcoef_[k][r] != 0.0)
                s += dcoef_[k][r] * pb_.c_exterior[r](x);
        return s;
    }

    bool on(unsigned term) const { return (prm_.terms & term) != 0; }

    // ---- Butler-Volmer ----------------------------------------------------

    BvFlux bv(mesh::BoundaryTag tag, const Point& x, const Trace& t) const
    {
        const auto& p = *pb_.kinetics;
        BvFlux out;
        const int ox = p.oxidant, rd = p.reductant;
        const double cs_o = sys_.c_scale[ox];
        const double co = cval(t, ox) * cs_o;
        const double cs_r = rd >= 0 ? sys_.c_scale[rd] : 1.0;
        const double cr = rd >= 0 ? cval(t, rd) * cs_r : 1.0;
        const double vt = sys_.thermal_voltage;
        const Point x_si = {x[0] * sys_.length, x[1] * sys_.length, x[2] * sys_.length};
        const auto res = physics::butler_volmer(co, cr, t.phi * vt, p.phi_app.at(tag), p.J0(x_si), p);
        out.J = res.J;
        const double denom = p.n * sys_.faraday * sys_.velocity;

        auto add = [&](int k, double sgn) {
            const double cs = sys_.c_scale[k];
            out.g[k] += sgn * res.J / (denom * cs);
            out.dg_dphi[k] += sgn * res.dJ_dphi * vt / (denom * cs);
            for (int r = 0; r < nr_; ++r) {
                double d = res.dJ_dco * cs_o * dcoef_[ox][r];
                if (rd >= 0)
                    d += res.dJ_dcr * cs_r * dcoef_[rd][r];
                out.dg_dc[k][r] += sgn * d / (denom * cs);
            }
        };
        add(ox, 1.0);
        if (rd >= 0)
            add(rd, -1.0);
        return out;
    }

    // True when the electrode flux of species k depends on retained field r.
    bool bv_couples(int k, int r) const
    {
        if (!pb_.kinetics)
            return false;
        const int ox = pb_.kinetics->oxidant, rd = pb_.kinetics->reductant;
        if (k != ox && k != rd)
            return false;
        return dcoef_[ox][r] != 0.0 || (rd >= 0 && dcoef_[rd][r] != 0.0);
    }

    bool has_electrodes() const
    {
        for (const auto& bf : mesh_.boundary_faces())
            if (mesh::is_electrode(bf.tag))
                return true;
        return false;
    }

    Pattern pattern(int row_field, int col_field) const
    {
        if (row_field == 0 || col_field == 0 || row_field == col_field)
            return Pattern::Full;
        const int k = sys_.retained[row_field - 1];
        if (has_electrodes() && bv_couples(k, col_field - 1))
            return Pattern::Diagonal;
        return Pattern::Empty;
    }

    // ---- residual integrands: eq = -1 for charge, else species index ------

    void volume(int eq, const Trace& t, const Point& x, const Vec3& u, double& s, Vec3& V) const
    {
        s = 0.0;
        V = {};
        if (eq < 0) {
            if (on(Volume)) {
                for (int r = 0; r < nr_; ++r)
                    axpy3(V, a_[r], t.gc[r]);
                axpy3(V, kappa(t), t.gphi);
            }
            if (on(Source) && pb_.charge_source)
                s = -pb_.charge_source(x);
            return;
        }
        const double D = sys_.D[eq], z = sys_.z[eq];
        if (on(Volume)) {
            const double c = cval(t, eq);
            V = scaled(cgrad(t, eq), D);
            axpy3(V, -c, u);
            axpy3(V, c * z * D, t.gphi);
        }
        if (on(Source) && !pb_.reaction.empty() && pb_.reaction[eq])
            s = -pb_.reaction[eq](x);
    }

    void interior(int eq, int a, const Trace* t, const Vec3& n, double delta, const Vec3& u, double& s, Vec3& V) const
    {
        const double sa = a == 0 ? 1.0 : -1.0;
        double G = 0.0;
        V = {};
        if (eq < 0) {
            const double k0 = kappa(t[0]), k1 = kappa(t[1]);
            const double jphi = t[0].phi - t[1].phi;
            if (on(InteriorFlux)) {
                for (int r = 0; r < nr_; ++r)
                    G -= a_[r] * 0.5 * (dot(t[0].gc[r], n) + dot(t[1].gc[r], n));
                G -= 0.5 * (k0 * dot(t[0].gphi, n) + k1 * dot(t[1].gphi, n));
            }
            if (on(InteriorPotential)) {
                G += 0.5 * (k0 + k1) * delta * jphi;
                axpy3(V, -0.5 * (a == 0 ? k0 : k1) * jphi, n);
            }
            if (on(InteriorSymmetry))
                for (int r = 0; r < nr_; ++r)
                    axpy3(V, -0.5 * a_[r] * (t[0].c[r] - t[1].c[r]), n);
            s = sa * G;
            return;
        }
        const double D = sys_.D[eq], z = sys_.z[eq];
        const double c0 = cval(t[0], eq), c1 = cval(t[1], eq);
        const double qn0 = dot(u, n) - z * D * dot(t[0].gphi, n);
        const double qn1 = dot(u, n) - z * D * dot(t[1].gphi, n);
        const double jump = c0 - c1;
        if (on(InteriorFlux))
            G += -0.5 * D * (dot(cgrad(t[0], eq), n) + dot(cgrad(t[1], eq), n)) + 0.5 * (c0 * qn0 + c1 * qn1);
        if (on(InteriorPenalty))
            G += D * delta * jump;
        if (on(InteriorUpwind))
            G += 0.5 * std::abs(0.5 * (qn0 + qn1)) * jump;
        if (on(InteriorSymmetry))
            V = scaled(n, -0.5 * D * jump);
        s = sa * G;
    }

    void boundary(int eq, mesh::BoundaryTag tag, const Trace& t, const Vec3& n, double delta, const Point& x,
                  const Vec3& u, const BvFlux* flux, double& s, Vec3& V) const
    {
        using mesh::BoundaryTag;
        s = 0.0;
        V = {};
        if (eq < 0) {
            if (mesh::is_electrode(tag) && on(BoundaryElectrode)) {
                for (int j = 0; j < m_; ++j)
                    s -= sys_.z[j] * sys_.weight[j] * flux->g[j];
            } else if (tag == BoundaryTag::Exterior && on(BoundaryDirichlet)) {
                const double kap = kappa(t);
                const double dphi = t.phi - pb_.phi_exterior(x);
                double aj = 0.0;
                for (int r = 0; r < nr_; ++r) {
                    s -= a_[r] * dot(t.gc[r], n);
                    aj += a_[r] * (t.c[r] - pb_.c_exterior[r](x));
                }
                s += -kap * dot(t.gphi, n) + kap * delta * dphi;
                V = scaled(n, -(aj + kap * dphi));
            }
            return;
        }
        const double D = sys_.D[eq], z = sys_.z[eq];
        const double c = cval(t, eq);
        const double qn = dot(u, n) - z * D * dot(t.gphi, n);
        switch (tag) {
        case BoundaryTag::Inlet:
            if (on(BoundaryInlet))
                s = dot(u, n) * sys_.c_in[eq];
            break;
        case BoundaryTag::Outlet:
            if (on(BoundaryOutlet))
                s = qn * c;
            break;
        case BoundaryTag::ElectrodeAnode:
        case BoundaryTag::ElectrodeCathode:
            if (on(BoundaryElectrode))
                s = -flux->g[eq];
            break;
        case BoundaryTag::Exterior:
            if (on(BoundaryDirichlet)) {
                const double g = exterior_c(eq, x);
                s = -D * dot(cgrad(t, eq), n) + D * delta * (c - g) + 0.5 * qn * (c + g) + 0.5 * std::abs(qn) * (c - g);
                V = scaled(n, -D * (c - g));
            }
            break;
        case BoundaryTag::Wall:
            break;
        }
    }

    // ---- linearizations; L[f] is the derivative w.r.t. field f --------------

    using LinSet = std::array<Lin, kMaxFields>;

    void volume_lin(int eq, const Trace& t, const Vec3& u, LinSet& L) const
    {
        L = {};
        if (!on(Volume))
            return;
        if (eq < 0) {
            for (int r = 0; r < nr_; ++r) {
                auto& l = L[1 + r].touch();
                l.vs = scaled(t.gphi, K_[r]);
                l.vg = a_[r];
            }
            L[0].touch().vg = kappa(t);
            return;
        }
        const double D = sys_.D[eq], z = sys_.z[eq];
        const double c = cval(t, eq);
        Vec3 dv = scaled(u, -1.0);
        axpy3(dv, z * D, t.gphi);
        for (int r = 0; r < nr_; ++r) {
            const double dc = dcoef_[eq][r];
            if (dc == 0.0)
                continue;
            auto& l = L[1 + r].touch();
            l.vs = scaled(dv, dc);
            l.vg = D * dc;
        }
        L[0].touch().vg = c * z * D;
    }

    // Derivative of the side-a integrand with respect to fields on side b.
    void interior_lin(int eq, int a, int b, const Trace* t, const Vec3& n, double delta, const Vec3& u,
                      LinSet& L) const
    {
        L = {};
        const double sa = a == 0 ? 1.0 : -1.0;
        const double sb = b == 0 ? 1.0 : -1.0;
        if (eq < 0) {
            const double k0 = kappa(t[0]), k1 = kappa(t[1]);
            const double jphi = t[0].phi - t[1].phi;
            const double dnphi_b = dot(t[b].gphi, n);
            for (int r = 0; r < nr_; ++r) {
                auto& l = L[1 + r].touch();
                if (on(InteriorFlux)) {
                    l.ss += sa * (-0.5 * K_[r] * dnphi_b);
                    axpy3(l.sg, sa * (-0.5 * a_[r]), n);
                }
                if (on(InteriorPotential)) {
                    l.ss += sa * 0.5 * K_[r] * delta * jphi;
                    if (b == a)
                        axpy3(l.vs, -0.5 * K_[r] * jphi, n);
                }
                if (on(InteriorSymmetry))
                    axpy3(l.vs, -0.5 * a_[r] * sb, n);
            }
            auto& l = L[0].touch();
            if (on(InteriorFlux))
                axpy3(l.sg, sa * (-0.5 * (b == 0 ? k0 : k1)), n);
            if (on(InteriorPotential)) {
                l.ss += sa * 0.5 * (k0 + k1) * delta * sb;
                axpy3(l.vs, -0.5 * (a == 0 ? k0 : k1) * sb, n);
            }
            return;
        }
        const double D = sys_.D[eq], z = sys_.z[eq];
        const double c0 = cval(t[0], eq), c1 = cval(t[1], eq);
        const double qn0 = dot(u, n) - z * D * dot(t[0].gphi, n);
        const double qn1 = dot(u, n) - z * D * dot(t[1].gphi, n);
        const double qbar = 0.5 * (qn0 + qn1);
        const double jump = c0 - c1;
        const double qn_b = b == 0 ? qn0 : qn1, c_b = b == 0 ? c0 : c1;

        Lin dc; // derivative w.r.t. c_eq on side b
        if (on(InteriorFlux)) {
            dc.ss += sa * 0.5 * qn_b;
            axpy3(dc.sg, sa * (-0.5 * D), n);
        }
        if (on(InteriorPenalty))
            dc.ss += sa * sb * D * delta;
        if (on(InteriorUpwind))
            dc.ss += sa * 0.5 * std::abs(qbar) * sb;
        if (on(InteriorSymmetry))
            axpy3(dc.vs, -0.5 * D * sb, n);
        for (int r = 0; r < nr_; ++r) {
            const double w = dcoef_[eq][r];
            if (w == 0.0)
                continue;
            auto& l = L[1 + r].touch();
            l.ss = w * dc.ss;
            l.sg = scaled(dc.sg, w);
            l.vs = scaled(dc.vs, w);
        }
        auto& l = L[0].touch();
        double coef = 0.0; // multiplies -z D n
        if (on(InteriorFlux))
            coef += 0.5 * c_b;
        if (on(InteriorUpwind))
            coef += 0.5 * sign(qbar) * jump * 0.5;
        axpy3(l.sg, sa * coef * (-z * D), n);
    }

    void boundary_lin(int eq, mesh::BoundaryTag tag, const Trace& t, const Vec3& n, double delta, const Point& x,
                      const Vec3& u, const BvFlux* flux, LinSet& L) const
    {
        using mesh::BoundaryTag;
        L = {};
        if (eq < 0) {
            if (mesh::is_electrode(tag) && on(BoundaryElectrode)) {
                for (int j = 0; j < m_; ++j) {
                    const double zw = sys_.z[j] * sys_.weight[j];
                    for (int r = 0; r < nr_; ++r)
                        L[1 + r].touch().ss -= zw * flux->dg_dc[j][r];
                    L[0].touch().ss -= zw * flux->dg_dphi[j];
                }
            } else if (tag == BoundaryTag::Exterior && on(BoundaryDirichlet)) {
                const double kap = kappa(t);
                const double dphi = t.phi - pb_.phi_exterior(x);
                const double dnphi = dot(t.gphi, n);
                for (int r = 0; r < nr_; ++r) {
                    auto& l = L[1 + r].touch();
                    l.ss = -K_[r] * dnphi + K_[r] * delta * dphi;
                    l.sg = scaled(n, -a_[r]);
                    l.vs = scaled(n, -a_[r] - K_[r] * dphi);
                }
                auto& l = L[0].touch();
                l.ss = kap * delta;
                l.sg = scaled(n, -kap);
                l.vs = scaled(n, -kap);
            }
            return;
        }
        const double D = sys_.D[eq], z = sys_.z[eq];
        const double c = cval(t, eq);
        const double qn = dot(u, n) - z * D * dot(t.gphi, n);
        auto set_c = [&](const Lin& dc) {
            for (int r = 0; r < nr_; ++r) {
                const double w = dcoef_[eq][r];
                if (w == 0.0)
                    continue;
                auto& l = L[1 + r].touch();
                l.ss += w * dc.ss;
                axpy3(l.sg, w, dc.sg);
                axpy3(l.vs, w, dc.vs);
            }
        };
        switch (tag) {
        case BoundaryTag::Outlet:
            if (on(BoundaryOutlet)) {
                Lin dc;
                dc.ss = qn;
                set_c(dc);
                L[0].touch().sg = scaled(n, -z * D * c);
            }
            break;
        case BoundaryTag::ElectrodeAnode:
        case BoundaryTag::ElectrodeCathode:
            if (on(BoundaryElectrode)) {
                for (int r = 0; r < nr_; ++r)
                    if (flux->dg_dc[eq][r] != 0.0)
                        L[1 + r].touch().ss = -flux->dg_dc[eq][r];
                L[0].touch().ss = -flux->dg_dphi[eq];
            }
            break;
        case BoundaryTag::Exterior:
            if (on(BoundaryDirichlet)) {
                const double g = exterior_c(eq, x);
                Lin dc;
                dc.ss = D * delta + 0.5 * qn + 0.5 * std::abs(qn);
                dc.sg = scaled(n, -D);
                dc.vs = scaled(n, -D);
                set_c(dc);
                L[0].touch().sg = scaled(n, (0.5 * (c + g) + 0.5 * sign(qn) * (c - g)) * (-z * D));
            }
            break;
        default:
            break;
        }
    }

    // ---- element loops ------------------------------------------------------

    // Residual rows of element e for the listed equations.
    void element_residual(const fe::BlockState& st, std::size_t e, std::span<const int> eqs,
                          std::vector<double>& out) const
    {
        thread_local std::vector<double> loc, nloc;
        thread_local Basis bt, bn;
        gather(st, e, loc);
        out.assign(eqs.size() * nb_, 0.0);
        const Vec3& h = mesh_.element_size(e);
        const Vec3 inv_h = {1.0 / h[0], 1.0 / h[1], 1.0 / h[2]};

        auto add = [&](std::size_t row, double w, double s, const Vec3& V, const Basis& b) {
            double* o = out.data() + row * nb_;
            for (int i = 0; i < nb_; ++i)
                o[i] += w * (s * b.v[i] + dot(V, b.g[i]));
        };

        const auto& vr = ref_.volume_rule();
        const double vol = mesh_.element_volume(e);
        for (std::size_t q = 0; q < vr.size(); ++q) {
            bt.load(ref_.volume_tab(), static_cast<int>(q), inv_h);
            const Trace t = eval(bt, loc);
            const Point x = space_.to_physical(e, vr.points[q]);
            const Vec3 u = pb_.velocity(x);
            for (std::size_t k = 0; k < eqs.size(); ++k) {
                double s;
                Vec3 V;
                volume(eqs[k], t, x, u, s, V);
                add(k, vr.weights[q] * vol, s, V, bt);
            }
        }

        for (int f = 0; f < 2 * dim_; ++f) {
            const int nbr = mesh_.neighbor(e, f);
            const double area = mesh_.face_area(e, f);
            const double delta = penalty(mesh_, e, f, p_, prm_.eta);
            const auto& fr = ref_.face_rule(f);
            if (nbr >= 0) {
                const int a = mesh::face_side(f) == 1 ? 0 : 1;
                const Vec3 n = scaled(mesh_.face_normal(f), a == 0 ? 1.0 : -1.0);
                gather(st, static_cast<std::size_t>(nbr), nloc);
                const Vec3& hn = mesh_.element_size(static_cast<std::size_t>(nbr));
                const Vec3 inv_hn = {1.0 / hn[0], 1.0 / hn[1], 1.0 / hn[2]};
                for (std::size_t q = 0; q < fr.size(); ++q) {
                    bt.load(ref_.face_tab(f), static_cast<int>(q), inv_h);
                    bn.load(ref_.face_tab(f ^ 1), static_cast<int>(q), inv_hn);
                    Trace t[2];
                    t[a] = eval(bt, loc);
                    t[1 - a] = eval(bn, nloc);
                    const Point x = space_.to_physical(e, fr.points[q]);
                    const Vec3 u = pb_.velocity(x);
                    for (std::size_t k = 0; k < eqs.size(); ++k) {
                        double s;
                        Vec3 V;
                        interior(eqs[k], a, t, n, delta, u, s, V);
                        add(k, fr.weights[q] * area, s, V, bt);
                    }
                }
            } else {
                const auto tag = mesh_.boundary_faces()[mesh_.boundary_face_index(e, f)].tag;
                const Vec3 n = mesh_.face_normal(f);
                for (std::size_t q = 0; q < fr.size(); ++q) {
                    bt.load(ref_.face_tab(f), static_cast<int>(q), inv_h);
                    const Trace t = eval(bt, loc);
                    const Point x = space_.to_physical(e, fr.points[q]);
                    const Vec3 u = pb_.velocity(x);
                    BvFlux flux;
                    if (mesh::is_electrode(tag) && on(BoundaryElectrode))
                        flux = bv(tag, x, t);
                    for (std::size_t k = 0; k < eqs.size(); ++k) {
                        double s;
                        Vec3 V;
                        boundary(eqs[k], tag, t, n, delta, x, u, &flux, s, V);
                        add(k, fr.weights[q] * area, s, V, bt);
                    }
                }
            }
        }
    }

    // Local Jacobian of element e: blocks [row field][col field][slot], slot 0 is
    // the element itself and slot 1+f the neighbor across face f.
    void element_jacobian(const fe::BlockState& st, std::size_t e, std::vector<double>& jac) const
    {
        thread_local std::vector<double> loc, nloc;
        thread_local Basis bt, bn;
        const int nslots = 1 + 2 * dim_;
        const std::size_t bsz = static_cast<std::size_t>(nb_) * nb_;
        jac.assign(static_cast<std::size_t>(nf_) * nf_ * nslots * bsz, 0.0);
        auto block = [&](int rf, int cf, int slot) {
            return jac.data() + ((static_cast<std::size_t>(rf) * nf_ + cf) * nslots + slot) * bsz;
        };
        auto acc = [&](double* blk, double w, const Lin& L, const Basis& test, const Basis& trial) {
            for (int j = 0; j < nb_; ++j) {
                const double ts = L.ss * trial.v[j] + dot(L.sg, trial.g[j]);
                Vec3 tv = scaled(trial.g[j], L.vg);
                axpy3(tv, trial.v[j], L.vs);
                for (int i = 0; i < nb_; ++i)
                    blk[i * nb_ + j] += w * (test.v[i] * ts + dot(test.g[i], tv));
            }
        };

        gather(st, e, loc);
        const Vec3& h = mesh_.element_size(e);
        const Vec3 inv_h = {1.0 / h[0], 1.0 / h[1], 1.0 / h[2]};
        LinSet L;

        const auto& vr = ref_.volume_rule();
        const double vol = mesh_.element_volume(e);
        for (std::size_t q = 0; q < vr.size(); ++q) {
            bt.load(ref_.volume_tab(), static_cast<int>(q), inv_h);
            const Trace t = eval(bt, loc);
            const Point x = space_.to_physical(e, vr.points[q]);
            const Vec3 u = pb_.velocity(x);
            for (int rf = 0; rf < nf_; ++rf) {
                volume_lin(equation(rf), t, u, L);
                for (int cf = 0; cf < nf_; ++cf)
                    if (L[cf].active)
                        acc(block(rf, cf, 0), vr.weights[q] * vol, L[cf], bt, bt);
            }
        }

        for (int f = 0; f < 2 * dim_; ++f) {
            const int nbr = mesh_.neighbor(e, f);
            const double area = mesh_.face_area(e, f);
            const double delta = penalty(mesh_, e, f, p_, prm_.eta);
            const auto& fr = ref_.face_rule(f);
            if (nbr >= 0) {
                const int a = mesh::face_side(f) == 1 ? 0 : 1;
                const Vec3 n = scaled(mesh_.face_normal(f), a == 0 ? 1.0 : -1.0);
                gather(st, static_cast<std::size_t>(nbr), nloc);
                const Vec3& hn = mesh_.element_size(static_cast<std::size_t>(nbr));
                const Vec3 inv_hn = {1.0 / hn[0], 1.0 / hn[1], 1.0 / hn[2]};
                for (std::size_t q = 0; q < fr.size(); ++q) {
                    bt.load(ref_.face_tab(f), static_cast<int>(q), inv_h);
                    bn.load(ref_.face_tab(f ^ 1), static_cast<int>(q), inv_hn);
                    Trace t[2];
                    t[a] = eval(bt, loc);
                    t[1 - a] = eval(bn, nloc);
                    const Point x = space_.to_physical(e, fr.points[q]);
                    const Vec3 u = pb_.velocity(x);
                    const double w = fr.weights[q] * area;
                    for (int rf = 0; rf < nf_; ++rf)
                        for (int b = 0; b < 2; ++b) {
                            interior_lin(equation(rf), a, b, t, n, delta, u, L);
                            const int slot = b == a ? 0 : 1 + f;
                            const Basis& trial = b == a ? bt : bn;
                            for (int cf = 0; cf < nf_; ++cf)
                                if (L[cf].active)
                                    acc(block(rf, cf, slot), w, L[cf], bt, trial);
                        }
                }
            } else {
                const auto tag = mesh_.boundary_faces()[mesh_.boundary_face_index(e, f)].tag;
                const Vec3 n = mesh_.face_normal(f);
                for (std::size_t q = 0; q < fr.size(); ++q) {
                    bt.load(ref_.face_tab(f), static_cast<int>(q), inv_h);
                    const Trace t = eval(bt, loc);
                    const Point x = space_.to_physical(e, fr.points[q]);
                    const Vec3 u = pb_.velocity(x);
                    BvFlux flux;
                    if (mesh::is_electrode(tag) && on(BoundaryElectrode))
                        flux = bv(tag, x, t);
                    for (int rf = 0; rf < nf_; ++rf) {
                        boundary_lin(equation(rf), tag, t, n, delta, x, u, &flux, L);
                        for (int cf = 0; cf < nf_; ++cf)
                            if (L[cf].active)
                                acc(block(rf, cf, 0), fr.weights[q] * area, L[cf], bt, bt);
                    }
                }
            }
        }
    }

    int equation(int field) const { return field == 0 ? -1 : sys_.retained[field - 1]; }

    const mesh::Mesh& mesh() const { return mesh_; }
    const fe::FeSpace& space() const { return space_; }
    int dim() const { return dim_; }

private:
    const CnpProblem& pb_;
    const DgParams& prm_;
    const fe::FeSpace& space_;
    const mesh::Mesh& mesh_;
    const fe::ReferenceElement& ref_;
    const physics::NondimSystem& sys_;
    int nb_ = 0, nr_ = 0, nf_ = 0, m_ = 0, dim_ = 0, p_ = 0;
    std::array<double, kMaxFields> a_{}, K_{}, rec_{};
    std::array<int, kMaxSpecies> field_{};
    std::array<std::array<double, kMaxFields>, kMaxSpecies> dcoef_{};
};

void check_state(const fe::BlockState& st, const CnpProblem& pb)
{
    if (!st.space || st.space->num_dofs() != pb.space->num_dofs() || st.num_fields != pb.num_fields() ||
        st.data.size() != static_cast<std::size_t>(pb.num_fields()) * pb.space->num_dofs())
        throw InvalidArgument("state does not match the problem's space and field count");
}

// Sorted list of the element and its face neighbors.
std::vector<int> coupled_elements(const mesh::Mesh& m, std::size_t e)
{
    std::vector<int> el{static_cast<int>(e)};
    for (int f = 0; f < m.faces_per_element(); ++f)
        if (const int n = m.neighbor(e, f); n >= 0)
            el.push_back(n);
    std::sort(el.begin(), el.end());
    return el;
}

linalg::CsrMatrix make_pattern(const fe::FeSpace& space, Pattern kind)
{
    const std::size_t n = space.num_dofs();
    const int nb = space.dofs_per_element();
    linalg::CsrMatrix A(n, n);
    if (kind == Pattern::Empty)
        return A;
    const auto& m = space.mesh();
    for (std::size_t e = 0; e < m.num_elements(); ++e) {
        const auto el = kind == Pattern::Full ? coupled_elements(m, e) : std::vector<int>{static_cast<int>(e)};
        for (int i = 0; i < nb; ++i)
            A.row_ptr[space.offset(e) + i + 1] = el.size() * nb;
    }
    for (std::size_t i = 0; i < n; ++i)
        A.row_ptr[i + 1] += A.row_ptr[i];
    A.col.resize(A.row_ptr.back());
    A.val.assign(A.row_ptr.back(), 0.0);
    parallel_for(0, m.num_elements(), [&](std::size_t e) {
        const auto el = kind == Pattern::Full ? coupled_elements(m, e) : std::vector<int>{static_cast<int>(e)};
        for (int i = 0; i < nb; ++i) {
            std::size_t pos = A.row_ptr[space.offset(e) + i];
            for (int ce : el)
                for (int j = 0; j < nb; ++j)
                    A.col[pos++] = static_cast<int>(space.offset(static_cast<std::size_t>(ce)) + j);
        }
    });
    return A;
}

} // namespace

std::vector<double> assemble_residual(const fe::BlockState& state, const CnpProblem& problem, const DgParams& params)
{
    const Discretization d(problem, params);
    check_state(state, problem);
    const int nf = d.num_fields(), nb = d.dofs_per_element();
    std::vector<int> eqs(nf);
    for (int f = 0; f < nf; ++f)
        eqs[f] = d.equation(f);
    const std::size_t n = problem.space->num_dofs();
    std::vector<double> R(nf * n, 0.0);
    parallel_for(0, d.mesh().num_elements(), [&](std::size_t e) {
        thread_local std::vector<double> out;
        d.element_residual(state, e, eqs, out);
        const std::size_t off = d.space().offset(e);
        for (int f = 0; f < nf; ++f)
            std::copy_n(out.begin() + f * nb, nb, R.begin() + static_cast<std::ptrdiff_t>(f * n + off));
    });
    return R;
}

std::vector<double> assemble_species_residual(const fe::BlockState& state, const CnpProblem& problem, int species,
                                              const DgParams& params)
{
    const Discretization d(problem, params);
    check_state(state, problem);
    if (species < 0 || species >= static_cast<int>(problem.system.z.size()))
        throw InvalidArgument("species index out of range");
    const int nb = d.dofs_per_element();
    const int eqs[1] = {species};
    std::vector<double> R(problem.space->num_dofs(), 0.0);
    parallel_for(0, d.mesh().num_elements(), [&](std::size_t e) {
        thread_local std::vector<double> out;
        d.element_residual(state, e, eqs, out);
        std::copy_n(out.begin(), nb, R.begin() + static_cast<std::ptrdiff_t>(d.space().offset(e)));
    });
    return R;
}

BlockMatrix assemble_jacobian(const fe::BlockState& state, const CnpProblem& problem, const DgParams& params)
{
    const Discretization d(problem, params);
    check_state(state, problem);
    const int nf = d.num_fields(), nb = d.dofs_per_element();
    const auto& space = *problem.space;
    const auto& m = space.mesh();

    BlockMatrix J(nf, space.num_dofs());
    J.labels[0] = "phi";
    for (int r = 0; r < problem.system.num_retained(); ++r)
        J.labels[1 + r] = problem.system.names[problem.system.retained[r]];
    std::vector<Pattern> kinds(static_cast<std::size_t>(nf) * nf);
    const linalg::CsrMatrix full = make_pattern(space, Pattern::Full);
    for (int rf = 0; rf < nf; ++rf)
        for (int cf = 0; cf < nf; ++cf) {
            kinds[rf * nf + cf] = d.pattern(rf, cf);
            if (kinds[rf * nf + cf] == Pattern::Full)
                J(rf, cf) = full;
            else
                J(rf, cf) = make_pattern(space, kinds[rf * nf + cf]);
        }

    const int nslots = 1 + 2 * d.dim();
    const std::size_t bsz = static_cast<std::size_t>(nb) * nb;
    parallel_for(0, m.num_elements(), [&](std::size_t e) {
        thread_local std::vector<double> jac;
        d.element_jacobian(state, e, jac);
        const auto el = coupled_elements(m, e);
        // position of each slot's element inside the sorted coupling list
        std::array<int, 7> pos{};
        std::array<int, 7> elem{};
        elem[0] = static_cast<int>(e);
        for (int f = 0; f < 2 * d.dim(); ++f)
            elem[1 + f] = m.neighbor(e, f);
        for (int s = 0; s < nslots; ++s)
            pos[s] = elem[s] < 0 ? -1
                                 : static_cast<int>(std::lower_bound(el.begin(), el.end(), elem[s]) - el.begin());
        const std::size_t off = space.offset(e);
        for (int rf = 0; rf < nf; ++rf)
            for (int cf = 0; cf < nf; ++cf) {
                const Pattern kind = kinds[rf * nf + cf];
                if (kind == Pattern::Empty)
                    continue;
                auto& A = J(rf, cf);
                for (int s = 0; s < nslots; ++s) {
                    if (pos[s] < 0 || (kind == Pattern::Diagonal && s != 0))
                        continue;
                    const int p = kind == Pattern::Diagonal ? 0 : pos[s];
                    const double* blk = jac.data() + ((static_cast<std::size_t>(rf) * nf + cf) * nslots + s) * bsz;
                    for (int i = 0; i < nb; ++i) {
                        double* row = A.val.data() + A.row_ptr[off + i] + static_cast<std::size_t>(p) * nb;
                        for (int j = 0; j < nb; ++j)
                            row[j] += blk[i * nb + j];
                    }
                }
            }
    });
    return J;
}

std::vector<double> recover_eliminated(const fe::BlockState& state, const physics::NondimSystem& system)
{
    const std::size_t n = state.field_size();
    std::vector<double> cm(n, 0.0);
    for (int r = 0; r < system.num_retained(); ++r) {
        const double w = system.recovery(r);
        const auto c = state.field(1 + r);
        for (std::size_t i = 0; i < n; ++i)
            cm[i] += w * c[i];
    }
    return cm;
}

namespace {

template <class Fn>
void for_electrode_points(const fe::BlockState& state, const CnpProblem& pb, Fn&& fn)
{
    const auto& space = *pb.space;
    const auto& m = space.mesh();
    const auto& ref = space.ref();
    const int nb = space.dofs_per_element();
    const std::size_t n = space.num_dofs();
    const auto& sys = pb.system;
    const double len = std::pow(sys.length, m.dim() - 1);
    const auto& bfs = m.boundary_faces();
    std::vector<double> phi(nb), c(static_cast<std::size_t>(sys.z.size()) * nb);
    for (std::size_t b = 0; b < bfs.size(); ++b) {
        const auto& bf = bfs[b];
        if (!mesh::is_electrode(bf.tag))
            continue;
        const std::size_t e = static_cast<std::size_t>(bf.element);
        const auto& fr = ref.face_rule(bf.local_face);
        const auto& tab = ref.face_tab(bf.local_face);
        const double area = m.face_area(e, bf.local_face) * len;
        for (std::size_t q = 0; q < fr.size(); ++q) {
            double ph = 0.0;
            std::vector<double> conc(sys.z.size(), 0.0);
            for (int i = 0; i < nb; ++i) {
                const double v = tab.value(static_cast<int>(q), i);
                ph += v * state.data[space.offset(e) + i];
                for (int r = 0; r < sys.num_retained(); ++r)
                    conc[sys.retained[r]] += v * state.data[(1 + r) * n + space.offset(e) + i];
            }
            for (int r = 0; r < sys.num_retained(); ++r)
                conc[sys.eliminated] += sys.recovery(r) * conc[sys.retained[r]];
            const Point x = space.to_physical(e, fr.points[q]);
            const auto& p = *pb.kinetics;
            const int ox = p.oxidant, rd = p.reductant;
            const Point x_si = {x[0] * sys.length, x[1] * sys.length, x[2] * sys.length};
            const auto res = physics::butler_volmer(conc[ox] * sys.c_scale[ox], rd >= 0 ? conc[rd] * sys.c_scale[rd] : 1.0,
                                                    ph * sys.thermal_voltage, p.phi_app.at(bf.tag), p.J0(x_si), p);
            fn(b, bf.tag, res.J, fr.weights[q] * area);
        }
    }
}

} // namespace

ElectrodeCurrents electrode_currents(const fe::BlockState& state, const CnpProblem& problem)
{
    problem.check();
    check_state(state, problem);
    ElectrodeCurrents out;
    if (!problem.kinetics)
        return out;
    for_electrode_points(state, problem, [&](std::size_t, mesh::BoundaryTag tag, double J, double w) {
        if (tag == mesh::BoundaryTag::ElectrodeAnode) {
            out.anode += J * w;
            out.anode_area += w;
        } else {
            out.cathode += J * w;
            out.cathode_area += w;
        }
    });
    return out;
}

std::vector<double> electrode_current_density(const fe::BlockState& state, const CnpProblem& problem)
{
    problem.check();
    check_state(state, problem);
    const auto& bfs = problem.space->mesh().boundary_faces();
    std::vector<double> J(bfs.size(), 0.0), area(bfs.size(), 0.0);
    if (!problem.kinetics)
        return J;
    for_electrode_points(state, problem, [&](std::size_t b, mesh::BoundaryTag, double j, double w) {
        J[b] += j * w;
        area[b] += w;
    });
    for (std::size_t b = 0; b < bfs.size(); ++b)
        if (area[b] > 0.0)
            J[b] /= area[b];
    return J;
}

} // namespace cnp::assembly
