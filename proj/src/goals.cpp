#include "dwr/goals.hpp"

#include <cmath>
#include <iostream>

namespace dwr {

Goal Goal::subdomain(int region_tag, const Eigen::Vector2d& comp_weights) {
  Goal g;
  g.kind = Kind::SubdomainIntegral;
  g.tag = region_tag;
  g.weights = comp_weights;
  return g;
}

Goal Goal::boundary_flux(int boundary_tag, double scale) {
  Goal g;
  g.kind = Kind::BoundaryFlux;
  g.tag = boundary_tag;
  g.scale = scale;
  return g;
}

Goal Goal::boundary_flux_directed(int boundary_tag, const Eigen::Vector2d& dir, double scale) {
  Goal g = boundary_flux(boundary_tag, scale);
  g.flux_along_normal = false;
  g.flux_direction = dir;
  return g;
}

Goal Goal::point_value(const Vec2& x, int component) {
  Goal g;
  g.kind = Kind::PointValue;
  g.point = x;
  g.component = component;
  return g;
}

Goal Goal::combined(std::vector<Goal> parts, std::vector<double> omegas) {
  if (parts.size() != omegas.size())
    throw std::invalid_argument("Goal::combined: parts/omegas size mismatch");
  Goal g;
  g.kind = Kind::Combined;
  for (const Goal& p : parts)
    if (p.kind == Kind::Combined)
      throw std::invalid_argument("Goal::combined: parts must not be combined goals");
  for (double o : omegas)
    if (o < 0) throw std::invalid_argument("Goal::combined: omega_i must be >= 0");
  g.parts = std::move(parts);
  g.omegas = std::move(omegas);
  return g;
}

namespace {

int locate_cell(const Mesh& mesh, const Vec2& x) {
  for (int c = 0; c < mesh.n_cells(); ++c) {
    CellGeometry geo = cell_geometry(mesh, c);
    Vec2 r = geo.Jinv * (x - geo.x0);
    const double tol = 1e-10;
    if (r.x() >= -tol && r.y() >= -tol && r.x() + r.y() <= 1.0 + tol) return c;
  }
  throw std::invalid_argument("goal: point (" + std::to_string(x.x()) + "," +
                              std::to_string(x.y()) + ") is outside the domain");
}

// Stress of the context at a cell/point; linear or hyperelastic.
Eigen::Matrix2d context_stress(const GoalContext& ctx, const Field& u, int cell,
                               const Vec2& xref) {
  if (ctx.lin_mat) {
    LinearStress s = sigma_active(u, *ctx.lin_mat, ctx.fibers);
    return s.eval(cell, xref);
  }
  if (!ctx.hyper_mat)
    throw std::invalid_argument("goal: boundary flux needs a material in the GoalContext");
  Eigen::MatrixXd G = eval_grad(u, cell, xref);
  TMat2<double> gu;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) gu(i, j) = G(i, j);
  double pval = 0;
  const double* pp = nullptr;
  if (ctx.pressure) {
    pval = eval_value(*ctx.pressure, cell, xref)[0];
    pp = &pval;
  }
  TMat2<double> Pi = pk1(*ctx.hyper_mat, gu, pp);
  Eigen::Matrix2d out;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) out(i, j) = Pi(i, j);
  return out;
}

bool goal_is_linear(const Goal& g, const GoalContext& ctx) {
  switch (g.kind) {
    case Goal::Kind::SubdomainIntegral:
    case Goal::Kind::PointValue:
      return true;
    case Goal::Kind::BoundaryFlux:
      return ctx.lin_mat != nullptr;
    case Goal::Kind::Combined:
      for (const auto& p : g.parts)
        if (!goal_is_linear(p, ctx)) return false;
      return true;
  }
  return false;
}

} // namespace

double evaluate(const Goal& goal, const Field& u, const GoalContext& ctx) {
  const Space& s = *u.space;
  const Mesh& mesh = *s.mesh;
  switch (goal.kind) {
    case Goal::Kind::SubdomainIntegral: {
      QuadratureRule rule = triangle_quadrature(std::min(8, 2 * s.degree));
      BasisTable basis(ShapeSet::get(s.degree), rule.points);
      double J = 0;
      for (int c = 0; c < mesh.n_cells(); ++c) {
        if (mesh.region_tag[c] != goal.tag) continue;
        CellGeometry geo = cell_geometry(mesh, c);
        const int* cn = s.cell_node_ptr(c);
        for (int q = 0; q < rule.size(); ++q) {
          double w = rule.weights[q] * geo.detJ;
          for (int i = 0; i < s.nodes_per_cell; ++i)
            for (int comp = 0; comp < s.components; ++comp)
              J += w * goal.weights[comp] * basis.N(q, i) * u.coeffs[s.dof(cn[i], comp)];
        }
      }
      return goal.scale * J;
    }
    case Goal::Kind::BoundaryFlux: {
      EdgeRule erule = edge_quadrature(std::min(15, 2 * s.degree + 2));
      double J = 0;
      bool found = false;
      for (std::size_t e = 0; e < mesh.edges.size(); ++e) {
        const EdgeInfo& ei = mesh.edges[e];
        if (ei.boundary_tag != goal.tag) continue;
        found = true;
        int c = ei.cell[0];
        CellGeometry geo = cell_geometry(mesh, c);
        Vec2 a = mesh.vertices[mesh.cells[c][(ei.local[0] + 1) % 3]];
        Vec2 b = mesh.vertices[mesh.cells[c][(ei.local[0] + 2) % 3]];
        double len = (b - a).norm();
        Vec2 n = edge_outward_normal(mesh, c, ei.local[0]);
        Eigen::Vector2d dir = goal.flux_along_normal ? n : goal.flux_direction;
        for (int q = 0; q < erule.size(); ++q) {
          Vec2 x = a + erule.points[q] * (b - a);
          Vec2 xref = geo.Jinv * (x - geo.x0);
          Eigen::Matrix2d sig = context_stress(ctx, u, c, xref);
          J += erule.weights[q] * len * dir.dot(sig * n);
        }
      }
      if (!found) throw std::invalid_argument("goal: unknown boundary tag " + std::to_string(goal.tag));
      return goal.scale * J;
    }
    case Goal::Kind::PointValue: {
      int c = locate_cell(mesh, goal.point);
      CellGeometry geo = cell_geometry(mesh, c);
      Vec2 xref = geo.Jinv * (goal.point - geo.x0);
      return goal.scale * eval_value(u, c, xref)[goal.component];
    }
    case Goal::Kind::Combined: {
      if (goal.resolved_w.size() != goal.parts.size())
        throw std::logic_error("combined goal: sign weights not resolved");
      double J = 0;
      for (std::size_t i = 0; i < goal.parts.size(); ++i)
        J += goal.resolved_w[i] * evaluate(goal.parts[i], u, ctx);
      return goal.scale * J;
    }
  }
  throw std::logic_error("unknown goal kind");
}

GoalDerivative goal_derivative_rhs(const Goal& goal, const Field* u, const Space& test_u,
                                   const GoalContext& ctx, const Space* test_p) {
  GoalDerivative out;
  out.du = Eigen::VectorXd::Zero(test_u.n_dofs());
  if (test_p) out.dp = Eigen::VectorXd::Zero(test_p->n_dofs());
  const Mesh& mesh = *test_u.mesh;

  switch (goal.kind) {
    case Goal::Kind::SubdomainIntegral: {
      QuadratureRule rule = triangle_quadrature(std::min(8, 2 * test_u.degree));
      BasisTable basis(ShapeSet::get(test_u.degree), rule.points);
      for (int c = 0; c < mesh.n_cells(); ++c) {
        if (mesh.region_tag[c] != goal.tag) continue;
        CellGeometry geo = cell_geometry(mesh, c);
        const int* cn = test_u.cell_node_ptr(c);
        for (int q = 0; q < rule.size(); ++q) {
          double w = rule.weights[q] * geo.detJ;
          for (int i = 0; i < test_u.nodes_per_cell; ++i)
            for (int comp = 0; comp < test_u.components; ++comp)
              out.du[test_u.dof(cn[i], comp)] += goal.scale * w * goal.weights[comp] * basis.N(q, i);
        }
      }
      return out;
    }
    case Goal::Kind::PointValue: {
      int c = locate_cell(mesh, goal.point);
      CellGeometry geo = cell_geometry(mesh, c);
      Vec2 xref = geo.Jinv * (goal.point - geo.x0);
      const ShapeSet& shapes = ShapeSet::get(test_u.degree);
      Eigen::VectorXd N(shapes.size());
      shapes.eval(xref, N);
      const int* cn = test_u.cell_node_ptr(c);
      for (int i = 0; i < test_u.nodes_per_cell; ++i)
        out.du[test_u.dof(cn[i], goal.component)] += goal.scale * N[i];
      return out;
    }
    case Goal::Kind::BoundaryFlux: {
      if (!goal_is_linear(goal, ctx) && !u)
        throw std::invalid_argument("goal derivative: nonlinear flux needs the state u");
      EdgeRule erule = edge_quadrature(std::min(15, 2 * test_u.degree + 2));
      const ShapeSet& shapes = ShapeSet::get(test_u.degree);
      Eigen::MatrixX2d G(shapes.size(), 2);
      const ShapeSet* pshapes = test_p ? &ShapeSet::get(test_p->degree) : nullptr;
      bool found = false;
      for (std::size_t e = 0; e < mesh.edges.size(); ++e) {
        const EdgeInfo& ei = mesh.edges[e];
        if (ei.boundary_tag != goal.tag) continue;
        found = true;
        int c = ei.cell[0];
        CellGeometry geo = cell_geometry(mesh, c);
        Vec2 a = mesh.vertices[mesh.cells[c][(ei.local[0] + 1) % 3]];
        Vec2 b = mesh.vertices[mesh.cells[c][(ei.local[0] + 2) % 3]];
        double len = (b - a).norm();
        Vec2 n = edge_outward_normal(mesh, c, ei.local[0]);
        Eigen::Vector2d dir = goal.flux_along_normal ? n : goal.flux_direction;
        const int* cn = test_u.cell_node_ptr(c);
        for (int q = 0; q < erule.size(); ++q) {
          Vec2 x = a + erule.points[q] * (b - a);
          Vec2 xref = geo.Jinv * (x - geo.x0);
          shapes.eval_grad(xref, G);
          Eigen::MatrixX2d Gphys = G * geo.Jinv;
          double w = erule.weights[q] * len * goal.scale;

          if (ctx.lin_mat) {
            int tag = mesh.region_tag[c];
            double mu = ctx.lin_mat->mu(tag), la = ctx.lin_mat->lambda(tag);
            for (int i = 0; i < test_u.nodes_per_cell; ++i) {
              for (int comp = 0; comp < 2; ++comp) {
                Eigen::Matrix2d gphi = Eigen::Matrix2d::Zero();
                gphi.row(comp) = Gphys.row(i);
                Eigen::Matrix2d dsig = hooke_stress(mu, la, gphi);
                out.du[test_u.dof(cn[i], comp)] += w * dir.dot(dsig * n);
              }
            }
          } else if (ctx.hyper_mat) {
            Eigen::MatrixXd Gu = eval_grad(*u, c, xref);
            double pval = 0;
            if (ctx.pressure) pval = eval_value(*ctx.pressure, c, xref)[0];
            for (int i = 0; i < test_u.nodes_per_cell; ++i) {
              for (int comp = 0; comp < 2; ++comp) {
                TMat2<D1> gu;
                for (int r = 0; r < 2; ++r)
                  for (int s2 = 0; s2 < 2; ++s2)
                    gu(r, s2) = D1(Gu(r, s2), (r == comp) ? Gphys(i, s2) : 0.0);
                D1 pd(pval, 0.0);
                TMat2<D1> Pi = pk1(*ctx.hyper_mat, gu, ctx.pressure ? &pd : nullptr);
                double v = 0;
                for (int r = 0; r < 2; ++r)
                  for (int s2 = 0; s2 < 2; ++s2) v += dir[r] * Pi(r, s2).d * n[s2];
                out.du[test_u.dof(cn[i], comp)] += w * v;
              }
            }
            if (test_p && ctx.pressure) {
              Eigen::VectorXd Np(pshapes->size());
              pshapes->eval(xref, Np);
              const int* pn = test_p->cell_node_ptr(c);
              TMat2<D1> gu;
              for (int r = 0; r < 2; ++r)
                for (int s2 = 0; s2 < 2; ++s2) gu(r, s2) = D1(Gu(r, s2), 0.0);
              for (int i = 0; i < test_p->nodes_per_cell; ++i) {
                D1 pd(pval, Np[i]);
                TMat2<D1> Pi = pk1(*ctx.hyper_mat, gu, &pd);
                double v = 0;
                for (int r = 0; r < 2; ++r)
                  for (int s2 = 0; s2 < 2; ++s2) v += dir[r] * Pi(r, s2).d * n[s2];
                out.dp[test_p->dof(pn[i], 0)] += w * v;
              }
            }
          } else {
            throw std::invalid_argument("goal derivative: boundary flux needs a material");
          }
        }
      }
      if (!found)
        throw std::invalid_argument("goal: unknown boundary tag " + std::to_string(goal.tag));
      return out;
    }
    case Goal::Kind::Combined: {
      if (goal.resolved_w.size() != goal.parts.size())
        throw std::logic_error("combined goal: sign weights not resolved");
      for (std::size_t i = 0; i < goal.parts.size(); ++i) {
        GoalDerivative d = goal_derivative_rhs(goal.parts[i], u, test_u, ctx, test_p);
        out.du += goal.scale * goal.resolved_w[i] * d.du;
        if (test_p && d.dp.size() > 0) out.dp += goal.scale * goal.resolved_w[i] * d.dp;
      }
      return out;
    }
  }
  throw std::logic_error("unknown goal kind");
}

std::vector<double> resolve_signs(const std::vector<Goal>& goals,
                                  const std::vector<double>& omegas, const Field& u,
                                  const Field& u2, const GoalContext& ctx,
                                  const GoalContext& ctx2, std::ostream* warn) {
  if (goals.size() != omegas.size())
    throw std::invalid_argument("resolve_signs: goals/omegas size mismatch");
  for (double o : omegas)
    if (o < 0) throw std::invalid_argument("resolve_signs: omega_i must be >= 0");

  std::vector<double> Jh(goals.size()), Jh2(goals.size());
  double scale = 0;
  for (std::size_t i = 0; i < goals.size(); ++i) {
    Jh[i] = evaluate(goals[i], u, ctx);
    Jh2[i] = evaluate(goals[i], u2, ctx2);
    scale = std::max({scale, std::abs(Jh[i]), std::abs(Jh2[i])});
  }

  std::vector<double> w(goals.size(), 0.0);
  for (std::size_t i = 0; i < goals.size(); ++i) {
    double diff = Jh2[i] - Jh[i];
    double sgn = diff > 0 ? 1.0 : (diff < 0 ? -1.0 : 0.0);
    if (sgn == 0.0) {
      if (warn)
        *warn << "resolve_signs: goal " << i
              << " has identical coarse/enriched values; dropped from the combination\n";
      w[i] = 0.0;
      continue;
    }
    if (std::abs(Jh[i]) < 1e-14 * scale) {
      double s2 = Jh2[i] > 0 ? 1.0 : (Jh2[i] < 0 ? -1.0 : 0.0);
      w[i] = omegas[i] * s2; // unit denominator
    } else {
      w[i] = omegas[i] * sgn / std::abs(Jh[i]);
    }
  }
  return w;
}

} // namespace dwr
