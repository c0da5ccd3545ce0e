#pragma once

#include "dwr/goals.hpp"

#include <functional>
#include <optional>

namespace dwr {

struct DwrReport {
  int iteration = 0;
  long cells = 0;
  long dofs = 0;
  double J_value = 0;
  double eta_global = 0;        // |r(z_hat)|
  Eigen::VectorXd eta_local;    // per-cell |eta_K|
  Eigen::VectorXd eta_signed;   // per-cell signed contributions
  double sum_local = 0;         // sum of eta_local
  std::optional<double> reference_error;
  std::optional<double> effectivity_global;
  std::optional<double> effectivity_sum;
};

/// The dual weight z_hat - i_h z_hat as a field on the enriched space (the
/// interpolant embeds exactly).
Field dwr_weight(const Field& z_hat, SpacePtr coarse);

/// eta_h = |r(z_hat)| for a residual functional.
double global_estimator(const std::function<double(const Field&)>& residual, const Field& z_hat);

/// Weak residual r(w) = l(w) - a(u_h, w) of the linear elastic problem,
/// evaluated by quadrature for w on any space over the same mesh.
double residual_functional(const Field& u, const LinearMaterial& mat, const ActiveFibers* fibers,
                           const Loads& loads, const Field& w);

/// Cell-local indicators eta_K from interior/edge residuals weighted by
/// z_hat - i_h z_hat. Data terms use cellwise/edgewise L2-projections of the
/// loads onto degree-k polynomials. Signed contributions sum to
/// r(z_hat - i_h z_hat); eta_K is their absolute value.
Eigen::VectorXd local_estimators(const Field& u, const Field& z_hat, const LinearMaterial& mat,
                                 const ActiveFibers* fibers, const Loads& loads,
                                 Eigen::VectorXd* signed_contribs = nullptr);

/// Hyperelastic weak residual r(w[,q]) = L(w) - A(u[,p]; w[,q]).
double residual_functional(const HyperProblem& prob, const Field& u, const Field* p,
                           const Field& wz, const Field* wq);

/// Hyperelastic local indicators; the stress jump uses Pi at the converged
/// state, the incompressible variant adds the (det C - 1) cell term weighted
/// by the pressure-space weight.
Eigen::VectorXd local_estimators(const HyperProblem& prob, const Field& u, const Field* p,
                                 const Field& z_hat, const Field* w_hat,
                                 Eigen::VectorXd* signed_contribs = nullptr);

/// Model-error indicator J(u_C) - J(u_F) ~ a_eps(u_C, z_C) for a model
/// hierarchy whose fine form adds a_eps to the coarse one.
double model_error_indicator(const std::function<double(const Field&, const Field&)>& a_eps_form,
                             const Field& u_coarse, const Field& z_coarse);

DwrReport make_report(int iteration, long cells, long dofs, double J_value, double eta_global,
                      const Eigen::VectorXd& eta_local, const Eigen::VectorXd& eta_signed);

/// Stores the effectivity ratios; checks eta_global <= sum_local.
DwrReport& effectivity(DwrReport& report, double reference_error);

} // namespace dwr
