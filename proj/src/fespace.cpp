#include "cnp/fespace.hpp"

#include <cmath>
#include <numbers>

namespace cnp::fe {

namespace {

// P_q(t) and P_q'(t) by the three-term recurrence.
void legendre(int q, double t, double& p, double& dp)
{
    double p0 = 1.0, p1 = t;
    for (int k = 2; k <= q; ++k) {
        const double pk = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
    }
    p = p1;
    dp = q * (t * p1 - p0) / (t * t - 1.0);
}

void gauss_legendre_1d(int q, std::vector<double>& x, std::vector<double>& w)
{
    x.assign(static_cast<std::size_t>(q), 0.0);
    w.assign(static_cast<std::size_t>(q), 0.0);
    for (int i = 0; i < q; ++i) {
        double t = std::cos(std::numbers::pi * (i + 0.75) / (q + 0.5));
        double p = 0.0, dp = 1.0;
        for (int it = 0; it < 100; ++it) {
            legendre(q, t, p, dp);
            const double dt = p / dp;
            t -= dt;
            if (std::abs(dt) < 1e-16)
                break;
        }
        legendre(q, t, p, dp);
        // map [-1,1] -> [0,1]
        x[q - 1 - i] = 0.5 * (t + 1.0);
        w[q - 1 - i] = 1.0 / ((1.0 - t * t) * dp * dp);
    }
}

void lagrange_1d(const std::vector<double>& nodes, double t, std::vector<double>& val, std::vector<double>& der)
{
    const std::size_t n = nodes.size();
    val.assign(n, 0.0);
    der.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double v = 1.0;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i)
                v *= (t - nodes[j]) / (nodes[i] - nodes[j]);
        val[i] = v;
        double d = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            if (k == i)
                continue;
            double term = 1.0 / (nodes[i] - nodes[k]);
            for (std::size_t j = 0; j < n; ++j)
                if (j != i && j != k)
                    term *= (t - nodes[j]) / (nodes[i] - nodes[j]);
            d += term;
        }
        der[i] = d;
    }
}

} // namespace

QuadRule gauss_rule(int q, int dim)
{
    if (q < 1)
        throw InvalidArgument("quadrature needs at least one point per axis");
    if (dim < 1 || dim > 3)
        throw InvalidArgument("quadrature dimension must be 1, 2 or 3");
    std::vector<double> x, w;
    gauss_legendre_1d(q, x, w);
    QuadRule rule;
    rule.dim = dim;
    const int nz = dim == 3 ? q : 1, ny = dim >= 2 ? q : 1;
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < q; ++i) {
                rule.points.push_back({x[i], dim >= 2 ? x[j] : 0.0, dim == 3 ? x[k] : 0.0});
                rule.weights.push_back(w[i] * (dim >= 2 ? w[j] : 1.0) * (dim == 3 ? w[k] : 1.0));
            }
    return rule;
}

std::vector<double> lagrange_nodes_1d(int p)
{
    std::vector<double> n(static_cast<std::size_t>(p) + 1);
    for (int i = 0; i <= p; ++i)
        n[i] = static_cast<double>(i) / p;
    return n;
}

Tabulation tabulate_basis(int p, int dim, std::span<const Point> pts)
{
    if (p < 1)
        throw InvalidArgument("polynomial order must be >= 1");
    const auto nodes = lagrange_nodes_1d(p);
    const int n1 = p + 1;
    const int nb = dim == 3 ? n1 * n1 * n1 : n1 * n1;
    Tabulation tab;
    tab.num_basis = nb;
    tab.num_points = static_cast<int>(pts.size());
    tab.values.resize(pts.size() * nb);
    tab.grads.resize(pts.size() * nb);
    std::vector<double> vx, dx, vy, dy, vz, dz;
    for (std::size_t q = 0; q < pts.size(); ++q) {
        lagrange_1d(nodes, pts[q][0], vx, dx);
        lagrange_1d(nodes, pts[q][1], vy, dy);
        if (dim == 3) {
            lagrange_1d(nodes, pts[q][2], vz, dz);
        } else {
            vz.assign(1, 1.0);
            dz.assign(1, 0.0);
        }
        const int nzb = dim == 3 ? n1 : 1;
        for (int k = 0; k < nzb; ++k)
            for (int j = 0; j < n1; ++j)
                for (int i = 0; i < n1; ++i) {
                    const int b = i + n1 * (j + n1 * k);
                    tab.values[q * nb + b] = vx[i] * vy[j] * vz[k];
                    tab.grads[q * nb + b] = {dx[i] * vy[j] * vz[k], vx[i] * dy[j] * vz[k],
                                             dim == 3 ? vx[i] * vy[j] * dz[k] : 0.0};
                }
    }
    return tab;
}

ReferenceElement::ReferenceElement(int p, int dim, int q) : p_(p), dim_(dim), q_(q > 0 ? q : p + 2)
{
    if (p < 1)
        throw InvalidArgument("polynomial order must be >= 1");
    const int n1 = p + 1;
    nb_ = dim == 3 ? n1 * n1 * n1 : n1 * n1;
    volume_ = gauss_rule(q_, dim);
    volume_tab_ = tabulate_basis(p, dim, volume_.points);

    const QuadRule fr = gauss_rule(q_, dim - 1);
    for (int f = 0; f < 2 * dim; ++f) {
        const int a = mesh::face_axis(f);
        QuadRule rule;
        rule.dim = dim;
        rule.weights = fr.weights;
        for (const auto& t : fr.points) {
            Point x{0.0, 0.0, 0.0};
            int used = 0;
            for (int d = 0; d < dim; ++d) {
                if (d == a)
                    x[d] = static_cast<double>(mesh::face_side(f));
                else
                    x[d] = t[used++];
            }
            rule.points.push_back(x);
        }
        face_tabs_.push_back(tabulate_basis(p, dim, rule.points));
        face_rules_.push_back(std::move(rule));
    }

    const auto n = lagrange_nodes_1d(p);
    const int nzb = dim == 3 ? n1 : 1;
    for (int k = 0; k < nzb; ++k)
        for (int j = 0; j < n1; ++j)
            for (int i = 0; i < n1; ++i)
                nodes_.push_back({n[i], n[j], dim == 3 ? n[k] : 0.0});
}

FeSpace::FeSpace(std::shared_ptr<const mesh::Mesh> mesh, int p, int q)
    : mesh_(std::move(mesh)), p_(p), ref_(p, mesh_->dim(), q)
{
}

Point FeSpace::to_physical(std::size_t e, const Point& r) const
{
    const auto& o = mesh_->element_origin(e);
    const auto& s = mesh_->element_size(e);
    Point x{0.0, 0.0, 0.0};
    for (int d = 0; d < dim(); ++d)
        x[d] = o[d] + s[d] * r[d];
    return x;
}

Point FeSpace::to_reference(std::size_t e, const Point& x) const
{
    const auto& o = mesh_->element_origin(e);
    const auto& s = mesh_->element_size(e);
    Point r{0.0, 0.0, 0.0};
    for (int d = 0; d < dim(); ++d)
        r[d] = (x[d] - o[d]) / s[d];
    return r;
}

BlockState::BlockState(std::shared_ptr<const FeSpace> s, int fields)
    : space(std::move(s)), num_fields(fields), data(static_cast<std::size_t>(fields) * space->num_dofs(), 0.0)
{
}

std::span<double> BlockState::field(int k)
{
    return std::span<double>(data).subspan(static_cast<std::size_t>(k) * field_size(), field_size());
}

std::span<const double> BlockState::field(int k) const
{
    return std::span<const double>(data).subspan(static_cast<std::size_t>(k) * field_size(), field_size());
}

std::vector<double> interpolate(const FeSpace& space, const ScalarField& f)
{
    std::vector<double> c(space.num_dofs());
    const auto& nodes = space.ref().nodes();
    const int nd = space.dofs_per_element();
    for (std::size_t e = 0; e < space.mesh().num_elements(); ++e)
        for (int i = 0; i < nd; ++i)
            c[space.offset(e) + i] = f(space.to_physical(e, nodes[i]));
    return c;
}

double evaluate(const FeSpace& space, std::span<const double> coeffs, std::size_t e, const Point& r)
{
    const Point pts[1] = {r};
    const auto tab = tabulate_basis(space.order(), space.dim(), pts);
    double v = 0.0;
    for (int i = 0; i < tab.num_basis; ++i)
        v += coeffs[space.offset(e) + i] * tab.value(0, i);
    return v;
}

std::vector<double> restrict_nodal(const FeSpace& coarse, const FeSpace& fine, std::span<const int> parent,
                                   std::span<const double> u)
{
    if (coarse.order() != fine.order() || coarse.dim() != fine.dim())
        throw InvalidArgument("restriction needs spaces of equal order and dimension");
    if (parent.size() != fine.mesh().num_elements() || u.size() != fine.num_dofs())
        throw InvalidArgument("restriction input does not match the fine space");
    constexpr double tol = 1e-10;
    const int nb = coarse.dofs_per_element();
    const auto& nodes = coarse.ref().nodes();
    std::vector<double> out(coarse.num_dofs());
    std::vector<char> done(coarse.num_dofs(), 0);
    for (std::size_t c = 0; c < fine.mesh().num_elements(); ++c) {
        const auto pe = static_cast<std::size_t>(parent[c]);
        for (int i = 0; i < nb; ++i) {
            const std::size_t dof = coarse.offset(pe) + i;
            if (done[dof])
                continue;
            const Point r = fine.to_reference(c, coarse.to_physical(pe, nodes[i]));
            bool inside = true;
            for (int d = 0; d < fine.dim(); ++d)
                inside = inside && r[d] >= -tol && r[d] <= 1.0 + tol;
            if (!inside)
                continue;
            out[dof] = evaluate(fine, u, c, r);
            done[dof] = 1;
        }
    }
    return out;
}

namespace {

double l2_impl(const FeSpace& space, std::span<const double> coeffs, const ScalarField* exact, int q)
{
    if (coeffs.size() != space.num_dofs())
        throw InvalidArgument("coefficient vector does not match the space");
    const QuadRule rule = gauss_rule(q > 0 ? q : space.order() + 2, space.dim());
    const Tabulation tab = tabulate_basis(space.order(), space.dim(), rule.points);
    const auto& m = space.mesh();
    double sum = 0.0;
    for (std::size_t e = 0; e < m.num_elements(); ++e) {
        const double vol = m.element_volume(e);
        double local = 0.0;
        for (int p = 0; p < tab.num_points; ++p) {
            double uh = 0.0;
            for (int i = 0; i < tab.num_basis; ++i)
                uh += coeffs[space.offset(e) + i] * tab.value(p, i);
            const double diff = exact ? uh - (*exact)(space.to_physical(e, rule.points[p])) : uh;
            local += rule.weights[p] * diff * diff;
        }
        sum += vol * local;
    }
    return std::sqrt(sum);
}

} // namespace

double l2_error(const FeSpace& space, std::span<const double> coeffs, const ScalarField& exact, int q)
{
    return l2_impl(space, coeffs, &exact, q);
}

double l2_norm(const FeSpace& space, std::span<const double> coeffs, int q) { return l2_impl(space, coeffs, nullptr, q); }

} // namespace cnp::fe
