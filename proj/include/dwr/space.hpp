#pragma once

#include "dwr/mesh.hpp"
#include "dwr/quadrature.hpp"

#include <Eigen/Dense>

#include <functional>
#include <map>
#include <memory>
#include <vector>

namespace dwr {

/// Reference-element Lagrange basis of degree k on the unit triangle.
/// Shape i is 1 at lattice node i. Node order: the 3 vertices, then k-1 nodes
/// per edge (edge i opposite vertex i, walked from vertex i+1 to i+2), then
/// interior nodes.
class ShapeSet {
public:
  static const ShapeSet& get(int degree); // degree in {1,2,3}

  int degree() const { return degree_; }
  int size() const { return static_cast<int>(nodes_.rows()); }
  const Eigen::MatrixX2d& nodes() const { return nodes_; }

  void eval(const Vec2& x, Eigen::VectorXd& N) const;
  void eval_grad(const Vec2& x, Eigen::MatrixX2d& G) const;
  void eval_hess(const Vec2& x, Eigen::MatrixX3d& H) const; // columns: xx, xy, yy

private:
  explicit ShapeSet(int degree);
  int degree_;
  Eigen::MatrixX2d nodes_;
  std::vector<std::array<int, 2>> monomials_;
  Eigen::MatrixXd coeff_; // row i: monomial coefficients of shape i
};

/// Cached reference basis values at the points of a quadrature rule.
struct BasisTable {
  Eigen::MatrixXd N;                // nq x nloc
  std::vector<Eigen::MatrixX2d> dN; // per point, nloc x 2
  std::vector<Eigen::MatrixX3d> d2N;
  BasisTable(const ShapeSet& shapes, const Eigen::MatrixX2d& points, bool hessians = false);
};

struct CellGeometry {
  Vec2 x0;
  Eigen::Matrix2d J, Jinv; // affine map x = x0 + J xref
  double detJ;             // = 2 * area
};
CellGeometry cell_geometry(const Mesh& mesh, int c);

/// Outward unit normal of cell `c` on its local edge `le`.
Vec2 edge_outward_normal(const Mesh& mesh, int c, int le);

/// Prescribed boundary values per boundary tag. The function returns one
/// value per component. Tags not listed are natural (Neumann) boundary.
struct DirichletSpec {
  std::map<int, std::function<Eigen::VectorXd(const Vec2&)>> values;
};

DirichletSpec fixed_boundary(std::initializer_list<int> tags, int components);

/// Continuous Lagrange space of degree k with 1 or 2 components and
/// Dirichlet constraints resolved into an explicit free-dof numbering.
/// Dof of (node, component) = node * components + component.
struct Space {
  std::shared_ptr<const Mesh> mesh;
  int degree = 1;
  int components = 1;
  long n_nodes = 0;
  int nodes_per_cell = 0;
  std::vector<int> cell_nodes;  // n_cells * nodes_per_cell
  std::vector<Vec2> node_pos;

  std::vector<int> free_index;  // per dof; -1 if constrained
  std::vector<int> free_dofs;
  Eigen::VectorXd prescribed;   // full length; zero on free dofs
  std::vector<int> dirichlet_tags;

  long n_dofs() const { return n_nodes * components; }
  long n_free() const { return static_cast<long>(free_dofs.size()); }
  int dof(int node, int comp) const { return node * components + comp; }
  const int* cell_node_ptr(int c) const { return cell_nodes.data() + c * nodes_per_cell; }

  Eigen::VectorXd full_from_free(const Eigen::VectorXd& xf) const;
  Eigen::VectorXd free_from_full(const Eigen::VectorXd& xfull) const;
};

using SpacePtr = std::shared_ptr<const Space>;

SpacePtr build_space(std::shared_ptr<const Mesh> mesh, int degree, int components,
                     const DirichletSpec& dirichlet);

/// Space on the same mesh with the same Dirichlet tags but homogeneous values
/// (dual/test space), at the given degree.
SpacePtr homogeneous_space_like(const Space& s, int degree);

/// Nodes lying on boundary edges with the given tag.
std::vector<int> boundary_nodes(const Space& space, int tag);

struct Field {
  SpacePtr space;
  Eigen::VectorXd coeffs; // full dof vector

  Field() = default;
  explicit Field(SpacePtr s) : space(std::move(s)) {
    coeffs = Eigen::VectorXd::Zero(space->n_dofs());
    for (long i = 0; i < coeffs.size(); ++i)
      if (space->free_index[i] < 0) coeffs[i] = space->prescribed[i];
  }
};

Eigen::VectorXd eval_value(const Field& f, int cell, const Vec2& xref);
Eigen::MatrixXd eval_grad(const Field& f, int cell, const Vec2& xref);  // comp x 2
Eigen::MatrixXd eval_hess(const Field& f, int cell, const Vec2& xref);  // comp x 3 (xx,xy,yy)

/// Lagrange interpolation onto another space on the same mesh. Works in both
/// directions (onto a coarser-degree space this is i_h, onto a finer one the
/// natural embedding).
Field interpolate(const Field& f, SpacePtr target);

struct ExtrapolateStats {
  int patches = 0;
  int fallback_patches = 0;
  std::vector<int> fallback_vertices;
};

/// Patchwise least-squares lift to degree k+1: for every vertex patch a full
/// degree-(k+1) polynomial is fit to the nodal values of f; per-node results
/// from overlapping patches are averaged. Rank-deficient patches fall back to
/// the plain embedding (recorded in stats).
Field extrapolate(const Field& f, SpacePtr target, ExtrapolateStats* stats = nullptr);

/// Transfer to a space whose mesh descends from f's mesh (parent links).
Field transfer(const Field& f, SpacePtr target);

} // namespace dwr
