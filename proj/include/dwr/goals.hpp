#pragma once

#include "dwr/hyperelastic.hpp"

#include <iosfwd>

namespace dwr {

/// Constitutive context a goal may need (boundary flux forms Pi(u) n).
/// Exactly one of lin_mat / hyper_mat is set for stress-valued goals.
struct GoalContext {
  const LinearMaterial* lin_mat = nullptr;
  const ActiveFibers* fibers = nullptr;
  const HyperMaterial* hyper_mat = nullptr;
  const Field* pressure = nullptr; // mixed formulation only
};

/// Quantity of interest. `scale` multiplies the raw integral (used e.g. to
/// convert a per-thickness traction integral to a force).
struct Goal {
  enum class Kind { SubdomainIntegral, BoundaryFlux, PointValue, Combined };
  Kind kind = Kind::SubdomainIntegral;

  int tag = -1;                    // region tag or boundary tag
  Eigen::Vector2d weights{0, 0};   // SubdomainIntegral component weights
  bool flux_along_normal = true;   // BoundaryFlux: (Pi n).n, else (Pi n).dir
  Eigen::Vector2d flux_direction{0, 0};
  Vec2 point{0, 0};                // PointValue
  int component = 0;
  double scale = 1.0;

  std::vector<Goal> parts;         // Combined only, one level deep
  std::vector<double> omegas;      // omega_i >= 0, parallel to parts
  std::vector<double> resolved_w;  // sign weights, set by resolve_signs

  static Goal subdomain(int region_tag, const Eigen::Vector2d& comp_weights);
  static Goal boundary_flux(int boundary_tag, double scale = 1.0);
  static Goal boundary_flux_directed(int boundary_tag, const Eigen::Vector2d& dir,
                                     double scale = 1.0);
  static Goal point_value(const Vec2& x, int component);
  static Goal combined(std::vector<Goal> parts, std::vector<double> omegas);
};

double evaluate(const Goal& goal, const Field& u, const GoalContext& ctx = {});

struct GoalDerivative {
  Eigen::VectorXd du; // full dof vector on the test displacement space
  Eigen::VectorXd dp; // full dof vector on the pressure test space (may be empty)
};

/// J'(u)(phi_i) for all dofs of the test space(s); reduces to J(phi_i) for
/// linear goals (then u may be null).
GoalDerivative goal_derivative_rhs(const Goal& goal, const Field* u, const Space& test_u,
                                   const GoalContext& ctx = {}, const Space* test_p = nullptr);

/// Sign weights w_i = omega_i sign(J_i(u2) - J_i(u)) / |J_i(u)| combining
/// several goals without error cancellation. u2 is a higher-order
/// approximation (enriched solve or extrapolation). Degenerate cases:
/// |J_i(u)| below 1e-14 of the goal scale uses a unit denominator; a zero
/// sign drops the goal (weight 0) with a warning.
std::vector<double> resolve_signs(const std::vector<Goal>& goals,
                                  const std::vector<double>& omegas, const Field& u,
                                  const Field& u2, const GoalContext& ctx = {},
                                  const GoalContext& ctx2 = {}, std::ostream* warn = nullptr);

} // namespace dwr
