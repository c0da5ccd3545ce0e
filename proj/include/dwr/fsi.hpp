#pragma once

#include "dwr/estimator.hpp"

namespace dwr {

/// Stationary simplified fluid-structure interaction: vector Poisson for the
/// fluid velocity v on F coupled through the linearized ALE determinant
/// 1 + div(u) to a vector Poisson for the deformation u on the whole domain.
/// v vanishes on all of the fluid boundary (including the interface), u on
/// the outer boundary.
struct FsiDomain {
  std::shared_ptr<const Mesh> mesh;
  int fluid_region = 1;
  int solid_region = 2;
  SpacePtr vspace; // velocity: free dofs strictly inside F
  SpacePtr uspace; // deformation: zero on the outer boundary
  std::vector<char> is_fluid;       // per cell
  std::vector<int> interface_edges; // global edge ids of I

  long n_unknowns() const { return vspace->n_free() + uspace->n_free(); }
};

FsiDomain make_fsi_domain(std::shared_ptr<const Mesh> mesh, int fluid_region, int solid_region,
                          int degree);

struct FsiLoad {
  std::function<Vec2(const Vec2&)> f; // right-hand side of the phi-equation
};

struct FsiGoal {
  enum class Kind { InterfaceFluxU, SubdomainV };
  Kind kind = Kind::SubdomainV;
  Eigen::Vector2d direction{1, 0}; // InterfaceFluxU: int_I (grad u . n_s) . direction
  int region_tag = -1;             // SubdomainV region
  Eigen::Vector2d weights{1, 1};   // SubdomainV component weights
};

/// Block residual over (phi tests; psi_f tests) of the coupled forms minus
/// (f, phi). State fields may live on coarser spaces over the same mesh.
Eigen::VectorXd fsi_residual(const FsiDomain& dom, const Field& v, const Field& u,
                             const FsiLoad& load);

/// Exact Jacobian of fsi_residual; rows (phi, psi_f), columns (dv, du).
Eigen::SparseMatrix<double> fsi_tangent(const FsiDomain& dom, const Field& v, const Field& u);

struct FsiState {
  Field v, u;
};

FsiState fsi_newton(const FsiDomain& dom, const FsiLoad& load, const NewtonConfig& cfg,
                    NewtonReport* report = nullptr);

double fsi_goal_value(const FsiDomain& dom, const FsiGoal& goal, const Field& v, const Field& u);

/// Goal derivative ordered like the unknown blocks (dv; du).
Eigen::VectorXd fsi_goal_derivative(const FsiDomain& dom, const FsiGoal& goal);

struct FsiAdjoint {
  Field z;  // lives on uspace (phi-test partner)
  Field wf; // lives on vspace (psi_f-test partner)
};

/// Transpose of the tangent at (v, u) against the goal derivative. Pass an
/// enriched domain to obtain the estimator's dual approximation.
FsiAdjoint fsi_adjoint(const FsiDomain& dom, const Field& v, const Field& u, const FsiGoal& goal);

/// r evaluated at arbitrary weight fields (wz on a 2-component space over the
/// mesh, wwf likewise with zero trace on the fluid boundary).
double fsi_residual_functional(const FsiDomain& dom, const Field& v, const Field& u,
                               const FsiLoad& load, const Field& wz, const Field& wwf);

/// Cell indicators with block residuals, flux jumps and the interface-
/// condition residual split between the two incident cells.
Eigen::VectorXd fsi_local_estimators(const FsiDomain& dom, const Field& v, const Field& u,
                                     const FsiLoad& load, const Field& z_hat,
                                     const Field& wf_hat, Eigen::VectorXd* signed_contribs = nullptr);

/// Full goal-oriented report for a converged state: enriched adjoint on
/// `enriched`, global estimator and localization on `dom`.
DwrReport fsi_dwr(const FsiDomain& dom, const FsiDomain& enriched, const Field& v,
                  const Field& u, const FsiLoad& load, const FsiGoal& goal, int iteration = 0);

} // namespace dwr
