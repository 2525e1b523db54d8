#include "cnp/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace cnp::mesh {

std::string to_string(BoundaryTag tag)
{
    switch (tag) {
    case BoundaryTag::Inlet: return "inlet";
    case BoundaryTag::Outlet: return "outlet";
    case BoundaryTag::Wall: return "wall";
    case BoundaryTag::ElectrodeAnode: return "anode";
    case BoundaryTag::ElectrodeCathode: return "cathode";
    case BoundaryTag::Exterior: return "exterior";
    }
    return "unknown";
}

bool is_electrode(BoundaryTag tag)
{
    return tag == BoundaryTag::ElectrodeAnode || tag == BoundaryTag::ElectrodeCathode;
}

Mesh::Mesh(int dim, std::array<std::vector<double>, 3> axes) : dim_(dim), axes_(std::move(axes))
{
    if (dim != 2 && dim != 3)
        throw InvalidArgument("mesh dimension must be 2 or 3");
    for (int a = 0; a < 3; ++a) {
        if (a >= dim) {
            axes_[a] = {0.0, 1.0};
        }
        if (axes_[a].size() < 2)
            throw InvalidArgument("mesh axis " + std::to_string(a) + " needs at least one interval");
        for (std::size_t i = 1; i < axes_[a].size(); ++i)
            if (!(axes_[a][i] > axes_[a][i - 1]))
                throw InvalidArgument("mesh axis coordinates must be strictly increasing");
        counts_[a] = static_cast<int>(axes_[a].size()) - 1;
    }

    const int nx = counts_[0], ny = counts_[1], nz = counts_[2];
    const int vx = nx + 1, vy = ny + 1, vz = dim == 3 ? nz + 1 : 1;
    vertices_.reserve(static_cast<std::size_t>(vx) * vy * vz);
    for (int k = 0; k < vz; ++k)
        for (int j = 0; j < vy; ++j)
            for (int i = 0; i < vx; ++i)
                vertices_.push_back({axes_[0][i], axes_[1][j], dim == 3 ? axes_[2][k] : 0.0});

    const std::size_t ne = static_cast<std::size_t>(nx) * ny * nz;
    elements_.resize(ne);
    origin_.resize(ne);
    size_.resize(ne);
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                const auto e = static_cast<std::size_t>(element_index(i, j, k));
                auto& el = elements_[e];
                el.fill(-1);
                for (int c = 0; c < corners_per_element(); ++c) {
                    const int a = c & 1, b = (c >> 1) & 1, d = (c >> 2) & 1;
                    el[c] = (i + a) + vx * ((j + b) + vy * (k + d));
                }
                origin_[e] = {axes_[0][i], axes_[1][j], dim == 3 ? axes_[2][k] : 0.0};
                size_[e] = {axes_[0][i + 1] - axes_[0][i], axes_[1][j + 1] - axes_[1][j],
                            dim == 3 ? axes_[2][k + 1] - axes_[2][k] : 1.0};
            }

    boundary_lookup_.assign(ne * static_cast<std::size_t>(faces_per_element()), -1);
    for (std::size_t e = 0; e < ne; ++e) {
        for (int f = 0; f < faces_per_element(); ++f) {
            const int nb = neighbor(e, f);
            if (nb < 0) {
                boundary_lookup_[e * faces_per_element() + f] = static_cast<int>(boundary_faces_.size());
                boundary_faces_.push_back({static_cast<int>(e), f, BoundaryTag::Exterior});
            } else if (face_side(f) == 1) {
                interior_faces_.push_back({static_cast<int>(e), f, nb, f - 1});
            }
        }
    }
}

double Mesh::element_volume(std::size_t e) const
{
    const auto& s = size_[e];
    return dim_ == 3 ? s[0] * s[1] * s[2] : s[0] * s[1];
}

Point Mesh::element_centroid(std::size_t e) const
{
    const auto& o = origin_[e];
    const auto& s = size_[e];
    return {o[0] + 0.5 * s[0], o[1] + 0.5 * s[1], dim_ == 3 ? o[2] + 0.5 * s[2] : 0.0};
}

std::array<int, 3> Mesh::element_ijk(std::size_t e) const
{
    const int nx = counts_[0], ny = counts_[1];
    const int id = static_cast<int>(e);
    return {id % nx, (id / nx) % ny, id / (nx * ny)};
}

int Mesh::element_index(int i, int j, int k) const { return i + counts_[0] * (j + counts_[1] * k); }

int Mesh::neighbor(std::size_t e, int local_face) const
{
    auto ijk = element_ijk(e);
    const int a = face_axis(local_face);
    ijk[a] += face_side(local_face) == 0 ? -1 : 1;
    if (ijk[a] < 0 || ijk[a] >= counts_[a])
        return -1;
    return element_index(ijk[0], ijk[1], ijk[2]);
}

Point Mesh::face_centroid(std::size_t e, int local_face) const
{
    Point c = element_centroid(e);
    const int a = face_axis(local_face);
    c[a] = origin_[e][a] + (face_side(local_face) == 0 ? 0.0 : size_[e][a]);
    return c;
}

Vec3 Mesh::face_normal(int local_face) const
{
    Vec3 n{0.0, 0.0, 0.0};
    n[face_axis(local_face)] = face_normal_sign(local_face);
    return n;
}

double Mesh::face_area(std::size_t e, int local_face) const
{
    const int a = face_axis(local_face);
    double area = 1.0;
    for (int d = 0; d < dim_; ++d)
        if (d != a)
            area *= size_[e][d];
    return area;
}

int Mesh::boundary_face_index(std::size_t e, int local_face) const
{
    return boundary_lookup_[e * faces_per_element() + local_face];
}

namespace {

std::vector<double> uniform_nodes(double a, double b, int n)
{
    std::vector<double> x(static_cast<std::size_t>(n) + 1);
    for (int i = 0; i <= n; ++i)
        x[i] = a + (b - a) * static_cast<double>(i) / n;
    x[n] = b;
    return x;
}

} // namespace

Mesh build_box_mesh(int dim, const std::array<int, 3>& n, const Point& lower, const Point& upper)
{
    if (dim != 2 && dim != 3)
        throw InvalidArgument("box mesh dimension must be 2 or 3");
    std::array<std::vector<double>, 3> axes;
    for (int a = 0; a < dim; ++a) {
        if (n[a] < 1)
            throw InvalidArgument("box mesh element counts must be >= 1");
        if (!(upper[a] > lower[a]))
            throw InvalidArgument("box mesh extents must be positive");
        axes[a] = uniform_nodes(lower[a], upper[a], n[a]);
    }
    return Mesh(dim, std::move(axes));
}

Mesh build_unit_box_mesh(int dim, const std::array<int, 3>& n)
{
    return build_box_mesh(dim, n, {0.0, 0.0, 0.0}, {1.0, 1.0, 1.0});
}

std::vector<double> graded_nodes(double a, double b, int n, double strength, int toward)
{
    if (n < 1)
        throw InvalidArgument("graded segment needs at least one element");
    if (strength < 0.0)
        throw InvalidArgument("grading strength must be >= 0");
    std::vector<double> widths(static_cast<std::size_t>(n));
    if (toward == 0) {
        const int half = (n + 1) / 2;
        const double r = half > 1 ? std::exp(strength / (half - 1)) : 1.0;
        for (int i = 0; i < n; ++i)
            widths[i] = std::pow(r, std::min(i, n - 1 - i));
    } else {
        const double r = n > 1 ? std::exp(strength / (n - 1)) : 1.0;
        for (int i = 0; i < n; ++i)
            widths[i] = std::pow(r, toward < 0 ? i : n - 1 - i);
    }
    double total = 0.0;
    for (double w : widths)
        total += w;
    std::vector<double> x(static_cast<std::size_t>(n) + 1);
    x[0] = a;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        acc += widths[i];
        x[i + 1] = a + (b - a) * acc / total;
    }
    x[n] = b;
    return x;
}

std::array<std::vector<double>, 3> channel_axes(const ChannelSpec& s)
{
    if (!(s.L_a > 0 && s.L > 0 && s.L_b > 0 && s.h > 0 && s.w > 0))
        throw InvalidArgument("channel lengths must be positive");
    if (s.nx < 3 || s.ny < 1 || s.nz < 1)
        throw InvalidArgument("channel element counts too small");
    std::array<int, 3> seg{};
    if (s.x_segments) {
        seg = *s.x_segments;
    } else {
        if (s.nx % 4 != 0)
            throw InvalidArgument("electrode extent not resolvable: nx must be divisible by 4 "
                                  "(inlet nx/4, electrode nx/2, outlet nx/4) unless x_segments is given");
        seg = {s.nx / 4, s.nx / 2, s.nx / 4};
    }
    if (seg[0] < 1 || seg[1] < 1 || seg[2] < 1 || seg[0] + seg[1] + seg[2] != s.nx)
        throw InvalidArgument("electrode extent not resolvable: x segments must be positive and sum to nx");

    const double g = s.grading_strength;
    auto inlet = graded_nodes(0.0, s.L_a, seg[0], g, +1);
    auto elec = graded_nodes(s.L_a, s.L_a + s.L, seg[1], g, 0);
    auto outlet = graded_nodes(s.L_a + s.L, s.total_length(), seg[2], g, -1);

    std::array<std::vector<double>, 3> axes;
    axes[0] = inlet;
    axes[0].insert(axes[0].end(), elec.begin() + 1, elec.end());
    axes[0].insert(axes[0].end(), outlet.begin() + 1, outlet.end());
    axes[1] = graded_nodes(0.0, s.h, s.ny, g, 0);
    axes[2] = uniform_nodes(0.0, s.w, s.nz);
    for (auto& ax : axes)
        for (auto& v : ax)
            v *= s.scale;
    return axes;
}

Mesh build_channel_mesh(const ChannelSpec& s)
{
    Mesh m(3, channel_axes(s));
    const double x0 = s.L_a * s.scale, x1 = (s.L_a + s.L) * s.scale;
    const double eps = 1e-12 * s.total_length() * s.scale;
    for (std::size_t b = 0; b < m.boundary_faces().size(); ++b) {
        const auto& bf = m.boundary_faces()[b];
        const int a = face_axis(bf.local_face);
        const int side = face_side(bf.local_face);
        const Point c = m.face_centroid(bf.element, bf.local_face);
        BoundaryTag tag = BoundaryTag::Wall;
        if (a == 0) {
            tag = side == 0 ? BoundaryTag::Inlet : BoundaryTag::Outlet;
        } else if (a == 1 && c[0] > x0 - eps && c[0] < x1 + eps) {
            tag = side == 0 ? BoundaryTag::ElectrodeCathode : BoundaryTag::ElectrodeAnode;
        }
        m.set_boundary_tag(b, tag);
    }
    return m;
}

MeshHierarchy make_hierarchy(Mesh coarse)
{
    MeshHierarchy h;
    h.levels.push_back(std::move(coarse));
    h.parent_map.emplace_back();
    return h;
}

MeshHierarchy refine_uniform(const MeshHierarchy& h)
{
    if (h.levels.empty())
        throw InvalidArgument("cannot refine an empty hierarchy");
    const Mesh& c = h.finest();
    std::array<std::vector<double>, 3> axes;
    for (int a = 0; a < c.dim(); ++a) {
        const auto& ax = c.axes()[a];
        for (std::size_t i = 0; i + 1 < ax.size(); ++i) {
            axes[a].push_back(ax[i]);
            axes[a].push_back(0.5 * (ax[i] + ax[i + 1]));
        }
        axes[a].push_back(ax.back());
    }
    Mesh f(c.dim(), std::move(axes));

    std::vector<int> parent(f.num_elements());
    for (std::size_t e = 0; e < f.num_elements(); ++e) {
        const auto ijk = f.element_ijk(e);
        parent[e] = c.element_index(ijk[0] / 2, ijk[1] / 2, c.dim() == 3 ? ijk[2] / 2 : 0);
    }
    for (std::size_t b = 0; b < f.boundary_faces().size(); ++b) {
        const auto& bf = f.boundary_faces()[b];
        const int pb = c.boundary_face_index(static_cast<std::size_t>(parent[bf.element]), bf.local_face);
        f.set_boundary_tag(b, c.boundary_faces()[pb].tag);
    }

    MeshHierarchy out = h;
    out.levels.push_back(std::move(f));
    out.parent_map.push_back(std::move(parent));
    return out;
}

Mesh coarsen_structured(const Mesh& fine, std::vector<int>* parent_of_fine)
{
    std::array<std::vector<double>, 3> axes;
    for (int a = 0; a < fine.dim(); ++a) {
        const auto& ax = fine.axes()[a];
        if ((ax.size() - 1) % 2 != 0)
            throw InvalidArgument("structured coarsening requires even element counts on every axis");
        for (std::size_t i = 0; i < ax.size(); i += 2)
            axes[a].push_back(ax[i]);
    }
    Mesh c(fine.dim(), std::move(axes));

    std::vector<int> parent(fine.num_elements());
    for (std::size_t e = 0; e < fine.num_elements(); ++e) {
        const auto ijk = fine.element_ijk(e);
        parent[e] = c.element_index(ijk[0] / 2, ijk[1] / 2, fine.dim() == 3 ? ijk[2] / 2 : 0);
    }
    std::vector<int> assigned(c.boundary_faces().size(), 0);
    for (const auto& bf : fine.boundary_faces()) {
        const int cb = c.boundary_face_index(static_cast<std::size_t>(parent[bf.element]), bf.local_face);
        if (!assigned[cb]) {
            c.set_boundary_tag(cb, bf.tag);
            assigned[cb] = 1;
        } else if (c.boundary_faces()[cb].tag != bf.tag) {
            throw InvalidArgument("structured coarsening would merge faces with different boundary tags");
        }
    }
    if (parent_of_fine)
        *parent_of_fine = std::move(parent);
    return c;
}

MeshHierarchy coarsen_to_hierarchy(const Mesh& fine, int levels)
{
    if (levels < 1)
        throw InvalidArgument("hierarchy needs at least one level");
    std::vector<Mesh> meshes{fine};
    std::vector<std::vector<int>> parents;
    for (int l = 1; l < levels; ++l) {
        std::vector<int> parent;
        meshes.push_back(coarsen_structured(meshes.back(), &parent));
        parents.push_back(std::move(parent));
    }
    MeshHierarchy h;
    for (int l = levels - 1; l >= 0; --l)
        h.levels.push_back(std::move(meshes[l]));
    h.parent_map.emplace_back();
    for (int l = levels - 2; l >= 0; --l)
        h.parent_map.push_back(std::move(parents[l]));
    return h;
}

Mesh classify_boundary(Mesh mesh, const VectorField& velocity, double zero_tol)
{
    for (std::size_t b = 0; b < mesh.boundary_faces().size(); ++b) {
        const auto bf = mesh.boundary_faces()[b];
        if (bf.tag != BoundaryTag::Exterior)
            continue;
        const Vec3 n = mesh.face_normal(bf.local_face);
        const Point o = mesh.element_origin(bf.element);
        const Vec3 s = mesh.element_size(bf.element);
        const int a = face_axis(bf.local_face);

        bool pos = false, neg = false;
        auto probe = [&](const Point& x) {
            const double un = dot(velocity(x), n);
            if (un > zero_tol)
                pos = true;
            else if (un < -zero_tol)
                neg = true;
        };
        probe(mesh.face_centroid(bf.element, bf.local_face));
        for (int c = 0; c < mesh.corners_per_element(); ++c) {
            Point x = o;
            for (int d = 0; d < mesh.dim(); ++d)
                x[d] += ((c >> d) & 1) ? s[d] : 0.0;
            x[a] = o[a] + (face_side(bf.local_face) == 0 ? 0.0 : s[a]);
            probe(x);
        }
        if (pos && neg) {
            std::ostringstream msg;
            msg << "boundary face of element " << bf.element << " has mixed inflow/outflow sign";
            throw InvalidArgument(msg.str());
        }
        mesh.set_boundary_tag(b, neg ? BoundaryTag::Inlet : (pos ? BoundaryTag::Outlet : BoundaryTag::Wall));
    }
    return mesh;
}

namespace {

// VTK corner order from tensor-product corner order.
constexpr std::array<int, 8> kVtkHex{0, 1, 3, 2, 4, 5, 7, 6};

} // namespace

void write_vtk(const Mesh& mesh, std::ostream& os)
{
    const int dim = mesh.dim();
    const int nc = mesh.corners_per_element();
    const int nfc = nc / 2;
    const std::size_t ne = mesh.num_elements();
    const std::size_t nb = mesh.boundary_faces().size();

    os << "# vtk DataFile Version 3.0\ncnpdg mesh\nASCII\nDATASET UNSTRUCTURED_GRID\n";
    os << "POINTS " << mesh.vertices().size() << " double\n";
    os << std::setprecision(17);
    for (const auto& v : mesh.vertices())
        os << v[0] << ' ' << v[1] << ' ' << v[2] << '\n';

    os << "CELLS " << ne + nb << ' ' << ne * (nc + 1) + nb * (nfc + 1) << '\n';
    for (const auto& el : mesh.elements()) {
        os << nc;
        for (int c = 0; c < nc; ++c)
            os << ' ' << el[kVtkHex[c]];
        os << '\n';
    }
    for (const auto& bf : mesh.boundary_faces()) {
        const auto& el = mesh.elements()[bf.element];
        const int a = face_axis(bf.local_face);
        const int side = face_side(bf.local_face);
        std::vector<int> corners;
        for (int c = 0; c < nc; ++c)
            if (((c >> a) & 1) == side)
                corners.push_back(el[c]);
        os << nfc;
        if (dim == 3) {
            // corners are in tensor order over the two tangential axes
            for (int c : {0, 1, 3, 2})
                os << ' ' << corners[c];
        } else {
            for (int c : corners)
                os << ' ' << c;
        }
        os << '\n';
    }
    os << "CELL_TYPES " << ne + nb << '\n';
    for (std::size_t e = 0; e < ne; ++e)
        os << (dim == 3 ? 12 : 9) << '\n';
    for (std::size_t b = 0; b < nb; ++b)
        os << (dim == 3 ? 9 : 3) << '\n';
    os << "CELL_DATA " << ne + nb << "\nSCALARS boundary_tag int 1\nLOOKUP_TABLE default\n";
    for (std::size_t e = 0; e < ne; ++e)
        os << "-1\n";
    for (const auto& bf : mesh.boundary_faces())
        os << static_cast<int>(bf.tag) << '\n';
}

} // namespace cnp::mesh
