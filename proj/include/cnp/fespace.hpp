#pragma once

#include "cnp/common.hpp"
#include "cnp/mesh.hpp"

#include <memory>
#include <span>
#include <vector>

namespace cnp::fe {

/// Tensor-product Gauss-Legendre rule on the reference cell [0,1]^dim.
struct QuadRule {
    int dim = 1;
    std::vector<Point> points;
    std::vector<double> weights;

    std::size_t size() const { return weights.size(); }
};

QuadRule gauss_rule(int points_per_axis, int dim);

/// Equispaced closed Lagrange nodes on [0,1].
std::vector<double> lagrange_nodes_1d(int p);

/// Values and reference gradients of the Q^p nodal basis at a set of points.
/// Basis index i = ix + (p+1)*(iy + (p+1)*iz).
struct Tabulation {
    int num_basis = 0;
    int num_points = 0;
    std::vector<double> values; // [q * num_basis + i]
    std::vector<Vec3> grads;    // [q * num_basis + i], reference coordinates

    double value(int q, int i) const { return values[static_cast<std::size_t>(q) * num_basis + i]; }
    const Vec3& grad(int q, int i) const { return grads[static_cast<std::size_t>(q) * num_basis + i]; }
};

/// Throws InvalidArgument for p < 1; the scheme needs gradients.
Tabulation tabulate_basis(int p, int dim, std::span<const Point> ref_points);

/// Quadrature and tabulations shared by every element of a space.
class ReferenceElement {
public:
    ReferenceElement(int p, int dim, int q);

    int order() const { return p_; }
    int dim() const { return dim_; }
    int quad_points_per_axis() const { return q_; }
    int num_basis() const { return nb_; }

    const QuadRule& volume_rule() const { return volume_; }
    const Tabulation& volume_tab() const { return volume_tab_; }
    /// Face rule weights sum to 1 (reference face measure); points live in cell coordinates.
    const QuadRule& face_rule(int local_face) const { return face_rules_[local_face]; }
    const Tabulation& face_tab(int local_face) const { return face_tabs_[local_face]; }
    /// Reference coordinates of the nodal points.
    const std::vector<Point>& nodes() const { return nodes_; }

private:
    int p_, dim_, q_, nb_;
    QuadRule volume_;
    Tabulation volume_tab_;
    std::vector<QuadRule> face_rules_;
    std::vector<Tabulation> face_tabs_;
    std::vector<Point> nodes_;
};

/// Discontinuous Q^p space on an axis-aligned mesh. Element dof blocks are contiguous.
class FeSpace {
public:
    FeSpace(std::shared_ptr<const mesh::Mesh> mesh, int p, int quad_points_per_axis = 0);

    const mesh::Mesh& mesh() const { return *mesh_; }
    std::shared_ptr<const mesh::Mesh> mesh_ptr() const { return mesh_; }
    int order() const { return p_; }
    int dim() const { return mesh_->dim(); }
    int dofs_per_element() const { return ref_.num_basis(); }
    std::size_t num_dofs() const { return mesh_->num_elements() * static_cast<std::size_t>(dofs_per_element()); }
    std::size_t offset(std::size_t e) const { return e * static_cast<std::size_t>(dofs_per_element()); }
    const ReferenceElement& ref() const { return ref_; }

    Point to_physical(std::size_t e, const Point& ref_point) const;
    Point to_reference(std::size_t e, const Point& x) const;

private:
    std::shared_ptr<const mesh::Mesh> mesh_;
    int p_;
    ReferenceElement ref_;
};

/// Coefficients for (Phi, c_1, ..., c_{m-1}) stored field after field in one vector.
struct BlockState {
    std::shared_ptr<const FeSpace> space;
    int num_fields = 0;
    std::vector<double> data;

    BlockState() = default;
    BlockState(std::shared_ptr<const FeSpace> s, int fields);

    std::size_t field_size() const { return space->num_dofs(); }
    std::span<double> field(int k);
    std::span<const double> field(int k) const;
};

std::vector<double> interpolate(const FeSpace& space, const ScalarField& f);

/// Value of the discrete function at a reference point of element e.
double evaluate(const FeSpace& space, std::span<const double> coeffs, std::size_t e, const Point& ref_point);

/// Nodal values of a fine-level function on the parent level: each parent node
/// takes the value of the child containing it.
std::vector<double> restrict_nodal(const FeSpace& coarse, const FeSpace& fine, std::span<const int> parent_of_fine,
                                   std::span<const double> fine_coeffs);

/// sqrt(sum_K int_K (u_h - u)^2) with a Gauss rule of q points per axis (default p+2).
double l2_error(const FeSpace& space, std::span<const double> coeffs, const ScalarField& exact, int q = 0);
double l2_norm(const FeSpace& space, std::span<const double> coeffs, int q = 0);

} // namespace cnp::fe
