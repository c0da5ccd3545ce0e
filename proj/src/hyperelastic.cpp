#include "dwr/hyperelastic.hpp"

#include "dwr/goals.hpp"

#include <cmath>
#include <iostream>

namespace dwr {

Eigen::Matrix2d pk1(const HyperMaterial& m, const Eigen::Matrix2d& grad_u, const double* p) {
  TMat2<double> gu;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) gu(i, j) = grad_u(i, j);
  TMat2<double> Pi = pk1(m, gu, p);
  Eigen::Matrix2d out;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) out(i, j) = Pi(i, j);
  return out;
}

namespace {

int quad_order(const HyperProblem& prob) {
  return std::min(8, 2 * prob.uspace->degree + 2);
}

struct CellState {
  Eigen::Matrix2d grad_u;
  double p = 0;
};

// grad of field at tabulated quad point
Eigen::Matrix2d grad_at(const Field& u, const BasisTable& tab, int q, const CellGeometry& geo,
                        const int* cn) {
  const Space& s = *u.space;
  Eigen::MatrixX2d G = tab.dN[q] * geo.Jinv;
  Eigen::Matrix2d g = Eigen::Matrix2d::Zero();
  for (int i = 0; i < s.nodes_per_cell; ++i)
    for (int c = 0; c < 2; ++c) g.row(c) += u.coeffs[s.dof(cn[i], c)] * G.row(i);
  return g;
}

void external_load_vector(const Space& space, const Loads& loads, Eigen::VectorXd& L) {
  const Mesh& mesh = *space.mesh;
  const int k = space.degree;
  L.setZero(space.n_dofs());
  if (loads.body) {
    QuadratureRule rule = triangle_quadrature(std::min(8, 2 * k + 2));
    BasisTable basis(ShapeSet::get(k), rule.points);
    for (int c = 0; c < mesh.n_cells(); ++c) {
      CellGeometry geo = cell_geometry(mesh, c);
      const int* cn = space.cell_node_ptr(c);
      for (int q = 0; q < rule.size(); ++q) {
        double w = rule.weights[q] * geo.detJ;
        Vec2 x = geo.x0 + geo.J * Vec2(rule.points(q, 0), rule.points(q, 1));
        Vec2 b = loads.body(x);
        for (int i = 0; i < space.nodes_per_cell; ++i)
          for (int comp = 0; comp < 2; ++comp)
            L[space.dof(cn[i], comp)] += w * b[comp] * basis.N(q, i);
      }
    }
  }
  if (!loads.traction.empty()) {
    EdgeRule erule = edge_quadrature(std::min(15, 2 * k + 2));
    const ShapeSet& shapes = ShapeSet::get(k);
    Eigen::VectorXd N(shapes.size());
    for (std::size_t e = 0; e < mesh.edges.size(); ++e) {
      const EdgeInfo& ei = mesh.edges[e];
      if (ei.boundary_tag < 0) continue;
      auto it = loads.traction.find(ei.boundary_tag);
      if (it == loads.traction.end()) continue;
      int c = ei.cell[0];
      CellGeometry geo = cell_geometry(mesh, c);
      Vec2 a = mesh.vertices[mesh.cells[c][(ei.local[0] + 1) % 3]];
      Vec2 b = mesh.vertices[mesh.cells[c][(ei.local[0] + 2) % 3]];
      double len = (b - a).norm();
      const int* cn = space.cell_node_ptr(c);
      for (int q = 0; q < erule.size(); ++q) {
        Vec2 x = a + erule.points[q] * (b - a);
        Vec2 xref = geo.Jinv * (x - geo.x0);
        shapes.eval(xref, N);
        Vec2 t = it->second(x);
        double w = erule.weights[q] * len;
        for (int i = 0; i < shapes.size(); ++i)
          for (int comp = 0; comp < 2; ++comp) L[space.dof(cn[i], comp)] += w * t[comp] * N[i];
      }
    }
  }
}

} // namespace

Eigen::VectorXd hyper_residual(const HyperProblem& prob, const Field& u, const Field* p) {
  const Space& su = *prob.uspace;
  const Mesh& mesh = *su.mesh;
  const bool mixed = prob.pspace != nullptr;
  if (mixed && !p) throw std::invalid_argument("hyper_residual: mixed problem needs a pressure");

  QuadratureRule rule = triangle_quadrature(quad_order(prob));
  BasisTable bu(ShapeSet::get(su.degree), rule.points);
  const Space* sp = mixed ? prob.pspace.get() : nullptr;
  std::unique_ptr<BasisTable> bp;
  if (mixed) bp = std::make_unique<BasisTable>(ShapeSet::get(sp->degree), rule.points);

  Eigen::VectorXd L;
  external_load_vector(su, prob.loads, L);
  Eigen::VectorXd r_full = L;
  Eigen::VectorXd rp_full;
  if (mixed) rp_full = Eigen::VectorXd::Zero(sp->n_dofs());

  for (int c = 0; c < mesh.n_cells(); ++c) {
    CellGeometry geo = cell_geometry(mesh, c);
    const int* cn = su.cell_node_ptr(c);
    const int* pn = mixed ? sp->cell_node_ptr(c) : nullptr;
    try {
      for (int q = 0; q < rule.size(); ++q) {
        double w = rule.weights[q] * geo.detJ;
        Eigen::Matrix2d gu = grad_at(u, bu, q, geo, cn);
        double pval = 0;
        if (mixed) {
          for (int i = 0; i < sp->nodes_per_cell; ++i)
            pval += p->coeffs[sp->dof(pn[i], 0)] * bp->N(q, i);
        }
        Eigen::Matrix2d Pi = pk1(prob.mat, gu, mixed ? &pval : nullptr);
        Eigen::MatrixX2d G = bu.dN[q] * geo.Jinv;
        for (int i = 0; i < su.nodes_per_cell; ++i)
          for (int comp = 0; comp < 2; ++comp)
            r_full[su.dof(cn[i], comp)] -= w * (Pi(comp, 0) * G(i, 0) + Pi(comp, 1) * G(i, 1));
        if (mixed) {
          Eigen::Matrix2d F = Eigen::Matrix2d::Identity() + gu;
          double detC = F.determinant() * F.determinant();
          for (int i = 0; i < sp->nodes_per_cell; ++i)
            rp_full[sp->dof(pn[i], 0)] += w * (detC - 1.0) * bp->N(q, i);
        }
      }
    } catch (const MaterialError& err) {
      throw MaterialError(std::string(err.what()) + " in cell " + std::to_string(c));
    }
  }

  Eigen::VectorXd r(su.n_free() + (mixed ? sp->n_free() : 0));
  r.head(su.n_free()) = su.free_from_full(r_full);
  if (mixed) r.tail(sp->n_free()) = sp->free_from_full(rp_full);
  return r;
}

Eigen::SparseMatrix<double> hyper_tangent(const HyperMaterial& mat, const Field& u,
                                          const Field* p, const Space& space_u,
                                          const Space* space_p,
                                          const Eigen::VectorXd* dirichlet_increment,
                                          Eigen::VectorXd* lift_out) {
  const Mesh& mesh = *space_u.mesh;
  const bool mixed = space_p != nullptr;
  if (mixed && !p) throw std::invalid_argument("hyper_tangent: mixed problem needs a pressure");

  QuadratureRule rule = triangle_quadrature(std::min(8, 2 * space_u.degree + 2));
  BasisTable btest(ShapeSet::get(space_u.degree), rule.points);
  std::unique_ptr<BasisTable> bptest;
  if (mixed) bptest = std::make_unique<BasisTable>(ShapeSet::get(space_p->degree), rule.points);
  // state tables (state spaces may differ from test/trial spaces)
  BasisTable bstate(ShapeSet::get(u.space->degree), rule.points);
  std::unique_ptr<BasisTable> bpstate;
  if (mixed) bpstate = std::make_unique<BasisTable>(ShapeSet::get(p->space->degree), rule.points);

  const long nu_free = space_u.n_free();
  const long np_free = mixed ? space_p->n_free() : 0;
  std::vector<Eigen::Triplet<double>> trips;
  if (lift_out) lift_out->setZero(nu_free + np_free);

  const int nloc_u = 2 * space_u.nodes_per_cell;
  const int nloc_p = mixed ? space_p->nodes_per_cell : 0;
  Eigen::MatrixXd K(nloc_u + nloc_p, nloc_u + nloc_p);

  for (int c = 0; c < mesh.n_cells(); ++c) {
    CellGeometry geo = cell_geometry(mesh, c);
    const int* cn_state = u.space->cell_node_ptr(c);
    const int* cn = space_u.cell_node_ptr(c);
    const int* pn = mixed ? space_p->cell_node_ptr(c) : nullptr;
    const int* pn_state = mixed ? p->space->cell_node_ptr(c) : nullptr;
    K.setZero();
    try {
      for (int q = 0; q < rule.size(); ++q) {
        double w = rule.weights[q] * geo.detJ;
        Eigen::Matrix2d gu = grad_at(u, bstate, q, geo, cn_state);
        double pval = 0;
        if (mixed) {
          for (int i = 0; i < p->space->nodes_per_cell; ++i)
            pval += p->coeffs[p->space->dof(pn_state[i], 0)] * bpstate->N(q, i);
        }
        Eigen::MatrixX2d G = btest.dN[q] * geo.Jinv;
        Eigen::VectorXd Np;
        if (mixed) Np = bptest->N.row(q);

        auto add_column = [&](int col, const Eigen::Matrix2d& dgu, double dp) {
          TMat2<D1> gud;
          for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) gud(a, b) = D1(gu(a, b), dgu(a, b));
          D1 pd(pval, dp);
          TMat2<D1> Pi = pk1(mat, gud, mixed ? &pd : nullptr);
          for (int i = 0; i < space_u.nodes_per_cell; ++i)
            for (int comp = 0; comp < 2; ++comp)
              K(2 * i + comp, col) +=
                  w * (Pi(comp, 0).d * G(i, 0) + Pi(comp, 1).d * G(i, 1));
          if (mixed) {
            // q-row: K = dA/dx with A_q = int (1 - det C) q
            TMat2<D1> F = gud;
            F(0, 0) = F(0, 0) + 1.0;
            F(1, 1) = F(1, 1) + 1.0;
            D1 detC = F.det() * F.det();
            for (int i = 0; i < nloc_p; ++i) K(nloc_u + i, col) += -w * detC.d * Np[i];
          }
        };

        for (int j = 0; j < space_u.nodes_per_cell; ++j) {
          for (int comp = 0; comp < 2; ++comp) {
            Eigen::Matrix2d dgu = Eigen::Matrix2d::Zero();
            dgu.row(comp) = G.row(j);
            add_column(2 * j + comp, dgu, 0.0);
          }
        }
        if (mixed)
          for (int j = 0; j < nloc_p; ++j)
            add_column(nloc_u + j, Eigen::Matrix2d::Zero(), Np[j]);
      }
    } catch (const MaterialError& err) {
      throw MaterialError(std::string(err.what()) + " in cell " + std::to_string(c));
    }

    std::vector<long> gidx(nloc_u + nloc_p);
    for (int i = 0; i < space_u.nodes_per_cell; ++i)
      for (int comp = 0; comp < 2; ++comp)
        gidx[2 * i + comp] = space_u.free_index[space_u.dof(cn[i], comp)];
    for (int i = 0; i < nloc_p; ++i) {
      int fi = space_p->free_index[space_p->dof(pn[i], 0)];
      gidx[nloc_u + i] = fi < 0 ? -1 : nu_free + fi;
    }
    for (int i = 0; i < nloc_u + nloc_p; ++i) {
      if (gidx[i] < 0) continue;
      for (int j = 0; j < nloc_u + nloc_p; ++j) {
        if (gidx[j] >= 0) {
          trips.emplace_back(static_cast<int>(gidx[i]), static_cast<int>(gidx[j]), K(i, j));
        } else if (lift_out && dirichlet_increment && j < nloc_u) {
          double dg = (*dirichlet_increment)[space_u.dof(cn[j / 2], j % 2)];
          if (dg != 0.0) (*lift_out)[gidx[i]] += K(i, j) * dg;
        }
      }
    }
  }

  Eigen::SparseMatrix<double> A(nu_free + np_free, nu_free + np_free);
  A.setFromTriplets(trips.begin(), trips.end());
  A.makeCompressed();
  return A;
}

namespace {

struct NewtonState {
  Field u, p;
  bool mixed = false;
};

// Newton iterations at a fixed boundary state, with residual backtracking.
void newton_correct(const HyperProblem& prob, const NewtonConfig& cfg, NewtonState& st,
                    Eigen::VectorXd& r, std::vector<double>& history, NewtonReport& rep,
                    const std::string& where) {
  const Space& su = *prob.uspace;
  const Space* sp = st.mixed ? prob.pspace.get() : nullptr;
  const long nu = su.n_free();
  double rnorm = r.norm();
  double target = std::max(cfg.abs_tol, cfg.rel_tol * rnorm);

  int it = 0;
  while (rnorm > target) {
    if (++it > cfg.max_iter)
      throw NewtonError("Newton diverged (max_iter) at " + where + ", residual " +
                        std::to_string(rnorm));
    Eigen::SparseMatrix<double> K =
        hyper_tangent(prob.mat, st.u, st.mixed ? &st.p : nullptr, su, sp);
    Eigen::VectorXd d = solve(K, r);

    double t = 1.0;
    bool accepted = false;
    for (int bt = 0; bt <= cfg.backtracking; ++bt) {
      Field utrial = st.u;
      Field ptrial = st.p;
      for (long i = 0; i < nu; ++i) utrial.coeffs[su.free_dofs[i]] += t * d[i];
      if (st.mixed)
        for (long i = 0; i < sp->n_free(); ++i)
          ptrial.coeffs[sp->free_dofs[i]] += t * d[nu + i];
      try {
        Eigen::VectorXd rt = hyper_residual(prob, utrial, st.mixed ? &ptrial : nullptr);
        double rtn = rt.norm();
        if (rtn < rnorm || rtn <= target) {
          st.u = std::move(utrial);
          if (st.mixed) st.p = std::move(ptrial);
          r = std::move(rt);
          rnorm = rtn;
          accepted = true;
          break;
        }
      } catch (const MaterialError&) {
        // inverted trial state; halve the step
      }
      t *= 0.5;
    }
    if (!accepted)
      throw NewtonError("Newton diverged (backtracking exhausted) at " + where + ", residual " +
                        std::to_string(rnorm));
    history.push_back(rnorm);
    ++rep.total_iterations;
  }
}

} // namespace

HyperSolution newton_solve(const HyperProblem& prob, const NewtonConfig& cfg, const Field* u0,
                           const Field* p0, NewtonReport* report) {
  const Space& su = *prob.uspace;
  const bool mixed = prob.pspace != nullptr;
  const Space* sp = mixed ? prob.pspace.get() : nullptr;
  const long nu = su.n_free();

  NewtonReport local;
  NewtonReport& rep = report ? *report : local;
  rep = NewtonReport{};

  // Marches the boundary ramp from `ramp` to 1, folding every Dirichlet
  // increment through the tangent predictor; increments halve on failure.
  auto march = [&](NewtonState st, double ramp) {
    const double base_step = 1.0 / cfg.load_steps;
    double step = std::min(base_step, std::max(1.0 - ramp, 1e-12));
    const double min_step = base_step / 64.0;
    std::vector<double> history;
    int steps_done = 0;
    while (ramp < 1.0 - 1e-12) {
      double next = std::min(1.0, ramp + step);
      Eigen::VectorXd dg = (next - ramp) * su.prescribed;
      Eigen::VectorXd r = hyper_residual(prob, st.u, st.mixed ? &st.p : nullptr);
      Eigen::VectorXd lift;
      Eigen::SparseMatrix<double> K =
          hyper_tangent(prob.mat, st.u, st.mixed ? &st.p : nullptr, su, sp, &dg, &lift);
      Eigen::VectorXd d = solve(K, Eigen::VectorXd(r - lift));

      NewtonState trial = st;
      for (long i = 0; i < nu; ++i) trial.u.coeffs[su.free_dofs[i]] += d[i];
      if (mixed)
        for (long i = 0; i < sp->n_free(); ++i) trial.p.coeffs[sp->free_dofs[i]] += d[nu + i];
      for (long dd = 0; dd < su.n_dofs(); ++dd)
        if (su.free_index[dd] < 0) trial.u.coeffs[dd] = next * su.prescribed[dd];

      bool ok = true;
      try {
        Eigen::VectorXd rt = hyper_residual(prob, trial.u, st.mixed ? &trial.p : nullptr);
        history.assign(1, rt.norm());
        newton_correct(prob, cfg, trial, rt, history, rep,
                       "load increment to " + std::to_string(next));
      } catch (const MaterialError&) {
        ok = false;
      } catch (const NewtonError&) {
        ok = false;
      }
      if (ok) {
        st = std::move(trial);
        ramp = next;
        ++steps_done;
        step = base_step;
      } else {
        step *= 0.5;
        if (step < min_step)
          throw NewtonError("Newton diverged: load increment underflow at ramp " +
                            std::to_string(ramp));
      }
    }
    rep.load_steps_done = steps_done;
    rep.last_step_residuals = std::move(history);
    rep.converged = true;
    HyperSolution out;
    out.u = std::move(st.u);
    out.p = std::move(st.p);
    out.has_pressure = mixed;
    return out;
  };

  if (u0) {
    // Warm start: try the guess at the full boundary data, then restart the
    // ramp from scaled-down versions of it. The scaling backs a transferred
    // state out of locally inverted configurations.
    for (double s : {1.0, 0.9, 0.75, 0.5}) {
      NewtonState st;
      st.mixed = mixed;
      st.u = Field(prob.uspace);
      st.u.coeffs = s * u0->coeffs;
      if (mixed) {
        st.p = Field(prob.pspace);
        if (p0) st.p.coeffs = s * p0->coeffs;
      }
      for (long d = 0; d < su.n_dofs(); ++d)
        if (su.free_index[d] < 0) st.u.coeffs[d] = s * su.prescribed[d];
      try {
        if (s == 1.0) {
          Eigen::VectorXd r = hyper_residual(prob, st.u, mixed ? &st.p : nullptr);
          std::vector<double> history{r.norm()};
          newton_correct(prob, cfg, st, r, history, rep, "warm start");
          rep.load_steps_done = cfg.load_steps;
          rep.last_step_residuals = std::move(history);
          rep.converged = true;
          HyperSolution out;
          out.u = std::move(st.u);
          out.p = std::move(st.p);
          out.has_pressure = mixed;
          return out;
        }
        return march(std::move(st), s);
      } catch (const MaterialError&) {
      } catch (const NewtonError&) {
      }
      rep = NewtonReport{};
    }
  }

  NewtonState st;
  st.mixed = mixed;
  st.u = Field(prob.uspace);
  if (mixed) st.p = Field(prob.pspace);
  for (long d = 0; d < su.n_dofs(); ++d)
    if (su.free_index[d] < 0) st.u.coeffs[d] = 0.0;
  return march(std::move(st), 0.0);
}
HyperAdjoint adjoint_solve(const HyperProblem& prob, const Field& u, const Field* p,
                           const Goal& goal, SpacePtr dual_u, SpacePtr dual_p) {
  const bool mixed = prob.pspace != nullptr;
  if (mixed && !dual_p)
    throw std::invalid_argument("adjoint_solve: mixed problem needs a pressure dual space");

  Eigen::SparseMatrix<double> K =
      hyper_tangent(prob.mat, u, mixed ? p : nullptr, *dual_u, mixed ? dual_p.get() : nullptr);
  Eigen::SparseMatrix<double> Kt = K.transpose();

  GoalContext ctx;
  ctx.hyper_mat = &prob.mat;
  ctx.pressure = mixed ? p : nullptr;
  GoalDerivative d = goal_derivative_rhs(goal, &u, *dual_u, ctx, mixed ? dual_p.get() : nullptr);

  Eigen::VectorXd rhs(dual_u->n_free() + (mixed ? dual_p->n_free() : 0));
  rhs.head(dual_u->n_free()) = dual_u->free_from_full(d.du);
  if (mixed) rhs.tail(dual_p->n_free()) = dual_p->free_from_full(d.dp);

  Eigen::VectorXd y = solve(Kt, rhs);

  HyperAdjoint adj;
  adj.z = Field(dual_u);
  adj.z.coeffs = dual_u->full_from_free(y.head(dual_u->n_free()));
  adj.has_pressure = mixed;
  if (mixed) {
    adj.w = Field(dual_p);
    adj.w.coeffs = dual_p->full_from_free(y.tail(dual_p->n_free()));
  }
  return adj;
}


} // namespace dwr
