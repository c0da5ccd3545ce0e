#pragma once

#include "dwr/sparse.hpp"

#include <functional>
#include <map>
#include <optional>

namespace dwr {

/// Isotropic linear elastic parameters per mesh region, plane strain.
struct LinearMaterial {
  struct Params {
    double E = 0;  // Young's modulus (MPa)
    double nu = 0; // Poisson ratio
  };
  std::map<int, Params> regions;

  const Params& at(int region_tag) const;
  double mu(int region_tag) const;
  double lambda(int region_tag) const;
};

/// Active muscle-fiber pre-stress data: unit direction field sampled at cell
/// centroids, activation beta in [0,1], fiber tension (MPa). Acts only on
/// cells with the given region tag.
struct ActiveFibers {
  int region = -1;
  double beta = 0;
  double tension = 0;
  std::function<Vec2(const Vec2&)> direction;

  Vec2 cell_direction(const Mesh& mesh, int cell) const;
  bool active_on(const Mesh& mesh, int cell) const {
    return mesh.region_tag[cell] == region && beta * tension != 0.0;
  }
};

struct Loads {
  std::function<Vec2(const Vec2&)> body;                     // null = zero
  std::map<int, std::function<Vec2(const Vec2&)>> traction;  // per Neumann tag
};

/// Plane-strain Cauchy stress of a displacement gradient.
Eigen::Matrix2d hooke_stress(double mu, double lambda, const Eigen::Matrix2d& grad_u);

/// Stiffness a(u,v) = int sigma(u):eps(v) over the free dofs, with rhs
/// l_E(v) + l_A(v) (external loads plus active pre-stress) and Dirichlet
/// lifting applied.
SparseSystem assemble_primal(const Space& space, const LinearMaterial& mat,
                             const ActiveFibers* fibers, const Loads& loads);

/// Unconstrained stiffness over all dofs (no Dirichlet elimination).
Eigen::SparseMatrix<double> assemble_stiffness_unconstrained(const Space& space,
                                                             const LinearMaterial& mat);

struct Goal; // goals.hpp

/// Dual system on the (enriched) space: matrix a(.,.) with the structural
/// transpose applied, rhs_i = J(phi_i). The active pre-stress is a load, so
/// it does not enter the operator.
SparseSystem assemble_dual(const Space& enriched, const LinearMaterial& mat,
                           const ActiveFibers* fibers, const Goal& goal);

/// sigma_A(u) = sigma(u) + beta T (e_A x e_A) chi_A, piecewise polynomial
/// per cell; divergence computed exactly from the polynomial stress.
struct LinearStress {
  const Field* u = nullptr;
  const LinearMaterial* mat = nullptr;
  const ActiveFibers* fibers = nullptr;

  Eigen::Matrix2d eval(int cell, const Vec2& xref) const;
  Vec2 divergence(int cell, const Vec2& xref) const;
};

LinearStress sigma_active(const Field& u, const LinearMaterial& mat, const ActiveFibers* fibers);

} // namespace dwr
