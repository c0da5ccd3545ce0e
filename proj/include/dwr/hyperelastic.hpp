#pragma once

#include "dwr/ad.hpp"
#include "dwr/elasticity.hpp"

#include <optional>

namespace dwr {

/// Constitutive evaluation failure: inverted element or a law-specific
/// singularity (Gent locking stretch exceeded).
struct MaterialError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NewtonError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Hyperelastic law under one of two 2D reductions.
/// Plane strain (default): the Mooney/Gent/Haines-Wilson energies act on the
/// distortional invariants of diag(C, 1); volume change is carried by the
/// mixed pressure term, so these laws pair with `incompressible`.
/// Incompressible membrane (`plane_stress`): the thickness stretch
/// 1/det(C) enforces the 3D volume constraint pointwise, giving a pure
/// displacement formulation for thin sheets.
struct HyperMaterial {
  enum class Law { StVenantKirchhoff, Mooney, Gent, HainesWilson };
  Law law = Law::StVenantKirchhoff;
  bool incompressible = false;
  bool plane_stress = false;

  double mu = 0, lambda = 0;                           // St. Venant-Kirchhoff
  double C10 = 0, C01 = 0, C20 = 0, C02 = 0, C30 = 0, C11 = 0;
  double E = 0, Jm = 0;                                // Gent

  struct Active {
    double beta = 0;
    double tension = 0; // T_a
    Vec2 f0{1, 0};      // unit fiber direction
  };
  std::optional<Active> active;
};

namespace detail {

template <class T>
T passive_energy(const HyperMaterial& m, const TMat2<T>& C) {
  using Law = HyperMaterial::Law;
  if (m.law == Law::StVenantKirchhoff) {
    TMat2<T> E;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) E(i, j) = 0.5 * (C(i, j) - (i == j ? 1.0 : 0.0));
    T tr = E(0, 0) + E(1, 1);
    T ee = E(0, 0) * E(0, 0) + E(0, 1) * E(0, 1) + E(1, 0) * E(1, 0) + E(1, 1) * E(1, 1);
    return m.mu * ee + 0.5 * m.lambda * tr * tr;
  }
  T trC = C.trace();
  T dC = C.det();
  T a, b;
  if (m.plane_stress) {
    // thickness stretch 1/det(C): diag(C, 1/det C) has unit determinant
    T I1 = trC + 1.0 / dC;
    T I2 = trC / dC + dC;
    a = I1 - 3.0;
    b = I2 - 3.0;
  } else {
    // plane strain: distortional invariants of diag(C, 1)
    T I1 = trC + 1.0;
    T I2 = trC + dC;
    T lt = log(dC);
    a = I1 * exp(-1.0 / 3.0 * lt) - 3.0;
    b = I2 * exp(-2.0 / 3.0 * lt) - 3.0;
  }
  switch (m.law) {
    case Law::Mooney:
      return m.C10 * a + m.C01 * b;
    case Law::Gent: {
      T arg = 1.0 - a / m.Jm;
      if (ad_value(arg) <= 0.0)
        throw MaterialError("Gent singularity: I1 - 3 >= Jm at a quadrature point");
      return (-m.E / 6.0 * m.Jm) * log(arg);
    }
    case Law::HainesWilson:
      return m.C10 * a + m.C01 * b + m.C11 * a * b + m.C20 * a * a + m.C02 * b * b +
             m.C30 * a * a * a;
    default:
      throw std::logic_error("unknown hyperelastic law");
  }
}

} // namespace detail

/// Total strain energy density at a deformation gradient F (and pressure p in
/// the mixed incompressible case): passive + active + p (1 - det C).
template <class T>
T strain_energy(const HyperMaterial& m, const TMat2<T>& F, const T* p) {
  if (ad_value(F.det()) <= 0.0) throw MaterialError("inverted element (det F <= 0)");
  TMat2<T> C = F.transposed() * F;
  T W = detail::passive_energy(m, C);
  if (m.active && m.active->beta * m.active->tension != 0.0) {
    double fx = m.active->f0.x(), fy = m.active->f0.y();
    T q = C(0, 0) * (fx * fx) + (C(0, 1) + C(1, 0)) * (fx * fy) + C(1, 1) * (fy * fy);
    W = W + (0.5 * m.active->beta * m.active->tension) * (q - 1.0);
  }
  if (p) W = W + (*p) * (1.0 - C.det());
  return W;
}

/// First Piola-Kirchhoff stress Pi = dW/dF at grad_u, by forward-mode duals.
/// Pre: det(I + grad_u) > 0; p given iff the formulation is mixed.
template <class T>
TMat2<T> pk1(const HyperMaterial& m, const TMat2<T>& grad_u, const T* p) {
  TMat2<T> F = grad_u;
  F(0, 0) = F(0, 0) + 1.0;
  F(1, 1) = F(1, 1) + 1.0;
  TMat2<T> Pi;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      TMat2<Dual<T>> Fd;
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
          Fd(a, b) = Dual<T>(F(a, b), T(a == i && b == j ? 1.0 : 0.0));
      Dual<T> pd;
      if (p) pd = Dual<T>(*p, T(0.0));
      Dual<T> W = strain_energy(m, Fd, p ? &pd : nullptr);
      Pi(i, j) = W.d;
    }
  }
  return Pi;
}

/// Convenience overload on plain matrices.
Eigen::Matrix2d pk1(const HyperMaterial& m, const Eigen::Matrix2d& grad_u, const double* p);

struct NewtonConfig {
  double abs_tol = 1e-9;
  double rel_tol = 1e-12;
  int max_iter = 30;
  int load_steps = 1;
  int backtracking = 8;
};

struct HyperProblem {
  SpacePtr uspace;       // displacement, 2 components
  SpacePtr pspace;       // pressure (Taylor-Hood partner); null if compressible
  HyperMaterial mat;
  Loads loads;
};

/// Free-dof residual r_i = L(phi_i) - A(u[,p]; phi_i), u-block then p-block.
Eigen::VectorXd hyper_residual(const HyperProblem& prob, const Field& u, const Field* p);

/// Exact tangent of the residual assembled on the given test/trial spaces
/// (pass the primal spaces for Newton, enriched ones for the dual problem).
/// When a Dirichlet increment dg (full u-dof vector, nonzero on constrained
/// dofs) is given, lift_out receives K_fc dg so the increment can be folded
/// into the Newton update without evaluating a jumpy intermediate state.
Eigen::SparseMatrix<double> hyper_tangent(const HyperMaterial& mat, const Field& u,
                                          const Field* p, const Space& space_u,
                                          const Space* space_p,
                                          const Eigen::VectorXd* dirichlet_increment = nullptr,
                                          Eigen::VectorXd* lift_out = nullptr);

struct NewtonReport {
  bool converged = false;
  int load_steps_done = 0;
  int total_iterations = 0;
  std::vector<double> last_step_residuals; // residual norms of the final load step
};

struct HyperSolution {
  Field u;
  Field p; // empty when compressible
  bool has_pressure = false;
};

/// Newton with Dirichlet load ramping and residual backtracking. The initial
/// guess (if any) must live on the problem spaces.
HyperSolution newton_solve(const HyperProblem& prob, const NewtonConfig& cfg,
                           const Field* u0 = nullptr, const Field* p0 = nullptr,
                           NewtonReport* report = nullptr);

struct Goal;

struct HyperAdjoint {
  Field z;
  Field w; // pressure adjoint; empty when compressible
  bool has_pressure = false;
};

/// Solves the transposed tangent at the converged state against J'(u)(phi)
/// on the given dual spaces (same-degree or enriched).
HyperAdjoint adjoint_solve(const HyperProblem& prob, const Field& u, const Field* p,
                           const Goal& goal, SpacePtr dual_u, SpacePtr dual_p);

} // namespace dwr
