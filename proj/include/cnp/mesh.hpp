#pragma once

#include "cnp/common.hpp"

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace cnp::mesh {

enum class BoundaryTag : int {
    Inlet = 0,
    Outlet = 1,
    Wall = 2,
    ElectrodeAnode = 3,
    ElectrodeCathode = 4,
    Exterior = 5,
};

std::string to_string(BoundaryTag tag);
bool is_electrode(BoundaryTag tag);

// Local faces are numbered 2*axis + side, side 0 on the lower coordinate plane.
inline int face_axis(int local_face) { return local_face / 2; }
inline int face_side(int local_face) { return local_face % 2; }
inline double face_normal_sign(int local_face) { return face_side(local_face) == 0 ? -1.0 : 1.0; }

struct InteriorFace {
    int minus;      // element on the lower side; the normal points from minus to plus
    int face_minus; // local face of `minus`
    int plus;
    int face_plus;
};

struct BoundaryFace {
    int element;
    int local_face;
    BoundaryTag tag;
};

/// Axis-aligned structured mesh of quadrilaterals (dim 2) or hexahedra (dim 3).
///
/// Elements are stored lexicographically, x fastest. Vertex ordering inside an element
/// is tensor-product corner ordering: corner (a,b,c) -> a + 2b + 4c.
/// The per-axis node coordinates (`axes`) define the geometry; the explicit vertex,
/// element and face lists are derived from them on construction.
class Mesh {
public:
    Mesh() = default;
    Mesh(int dim, std::array<std::vector<double>, 3> axes);

    int dim() const { return dim_; }
    const std::array<std::vector<double>, 3>& axes() const { return axes_; }
    std::array<int, 3> counts() const { return counts_; }

    std::size_t num_elements() const { return elements_.size(); }
    int corners_per_element() const { return 1 << dim_; }
    int faces_per_element() const { return 2 * dim_; }

    const std::vector<Point>& vertices() const { return vertices_; }
    const std::vector<std::array<int, 8>>& elements() const { return elements_; }
    const std::vector<InteriorFace>& interior_faces() const { return interior_faces_; }
    const std::vector<BoundaryFace>& boundary_faces() const { return boundary_faces_; }

    /// Lower corner and per-axis extents of element e (unused axes have extent 1).
    const Point& element_origin(std::size_t e) const { return origin_[e]; }
    const Vec3& element_size(std::size_t e) const { return size_[e]; }
    double element_volume(std::size_t e) const;
    Point element_centroid(std::size_t e) const;

    std::array<int, 3> element_ijk(std::size_t e) const;
    int element_index(int i, int j, int k) const;

    /// Neighbor across local face f, or -1 on the boundary.
    int neighbor(std::size_t e, int local_face) const;

    /// Centroid of local face f of element e.
    Point face_centroid(std::size_t e, int local_face) const;
    /// Outward unit normal of local face f.
    Vec3 face_normal(int local_face) const;
    double face_area(std::size_t e, int local_face) const;

    void set_boundary_tag(std::size_t boundary_face, BoundaryTag tag) { boundary_faces_.at(boundary_face).tag = tag; }

    /// Index into boundary_faces() for (element, local_face), or -1 if interior.
    int boundary_face_index(std::size_t e, int local_face) const;

private:
    int dim_ = 0;
    std::array<std::vector<double>, 3> axes_;
    std::array<int, 3> counts_{1, 1, 1};
    std::vector<Point> vertices_;
    std::vector<std::array<int, 8>> elements_;
    std::vector<Point> origin_;
    std::vector<Vec3> size_;
    std::vector<InteriorFace> interior_faces_;
    std::vector<BoundaryFace> boundary_faces_;
    std::vector<int> boundary_lookup_; // (e * 2dim + f) -> boundary face index or -1
};

struct ChannelSpec {
    double L_a = 0.05;
    double L = 0.02;
    double L_b = 0.05;
    double h = 0.01;
    double w = 0.06;
    int nx = 64;
    int ny = 16;
    int nz = 8;
    double grading_strength = 0.0;
    /// Optional split of nx into inlet / electrode / outlet element counts.
    std::optional<std::array<int, 3>> x_segments;
    /// Factor applied to all coordinates (1 for SI lengths, 1/L for nondimensional).
    double scale = 1.0;

    double total_length() const { return L_a + L + L_b; }
};

/// Ordered meshes from coarse to fine with child -> parent maps.
struct MeshHierarchy {
    std::vector<Mesh> levels;
    /// parent_map[l][child] = parent element on level l-1 (parent_map[0] is empty).
    std::vector<std::vector<int>> parent_map;

    const Mesh& finest() const { return levels.back(); }
    std::size_t size() const { return levels.size(); }
};

Mesh build_unit_box_mesh(int dim, const std::array<int, 3>& n_per_axis);
Mesh build_box_mesh(int dim, const std::array<int, 3>& n_per_axis, const Point& lower, const Point& upper);

/// Graded channel mesh of [0, L_a+L+L_b] x [0,h] x [0,w] with inlet, outlet, electrode
/// and wall tags. Throws InvalidArgument when the electrode edges cannot be resolved.
Mesh build_channel_mesh(const ChannelSpec& spec);

/// Node coordinates of the graded channel mesh along each axis (before scaling).
std::array<std::vector<double>, 3> channel_axes(const ChannelSpec& spec);

/// Geometric stretching of n intervals on [a,b]. `toward` selects clustering:
/// -1 toward a, +1 toward b, 0 symmetric toward both ends.
std::vector<double> graded_nodes(double a, double b, int n, double strength, int toward);

MeshHierarchy make_hierarchy(Mesh coarse);
MeshHierarchy refine_uniform(const MeshHierarchy& h);

/// Merges 2^dim blocks of elements; requires even counts on every axis and
/// consistent boundary tags on merged faces.
Mesh coarsen_structured(const Mesh& fine, std::vector<int>* parent_of_fine = nullptr);

/// Builds a hierarchy whose finest level is `fine` by repeated structured coarsening.
MeshHierarchy coarsen_to_hierarchy(const Mesh& fine, int levels);

/// Retags Exterior faces from the sign of u.n at the face corners and centroid:
/// negative -> Inlet, positive -> Outlet, zero -> Wall. Electrode tags are kept.
Mesh classify_boundary(Mesh mesh, const VectorField& velocity, double zero_tol = 1e-14);

/// Legacy ASCII VTK with hex/quad cells plus boundary faces as extra cells
/// carrying an integer `boundary_tag` cell array (-1 for volume cells).
void write_vtk(const Mesh& mesh, std::ostream& os);

} // namespace cnp::mesh
