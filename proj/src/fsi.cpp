#include "dwr/fsi.hpp"

#include <set>

namespace dwr {

namespace {

SpacePtr make_vspace(std::shared_ptr<const Mesh> mesh, int degree, int fluid_region) {
  SpacePtr base = build_space(mesh, degree, 2, {});
  auto sp = std::make_shared<Space>(*base);
  Space& s = *sp;
  const Mesh& m = *mesh;
  std::vector<char> bad(s.n_nodes, 0);
  for (int c = 0; c < m.n_cells(); ++c) {
    if (m.region_tag[c] == fluid_region) continue;
    const int* cn = s.cell_node_ptr(c);
    for (int i = 0; i < s.nodes_per_cell; ++i) bad[cn[i]] = 1;
  }
  const int per_edge = degree - 1;
  const long nv = m.n_vertices();
  for (std::size_t e = 0; e < m.edges.size(); ++e) {
    if (m.edges[e].boundary_tag < 0) continue;
    bad[m.edges[e].v0] = 1;
    bad[m.edges[e].v1] = 1;
    for (int sl = 0; sl < per_edge; ++sl) bad[nv + static_cast<long>(e) * per_edge + sl] = 1;
  }
  s.free_index.assign(s.n_dofs(), -1);
  s.free_dofs.clear();
  s.prescribed.setZero();
  for (long n = 0; n < s.n_nodes; ++n) {
    if (bad[n]) continue;
    for (int comp = 0; comp < 2; ++comp) {
      long d = n * 2 + comp;
      s.free_index[d] = static_cast<int>(s.free_dofs.size());
      s.free_dofs.push_back(static_cast<int>(d));
    }
  }
  return sp;
}

struct Kinematics {
  Eigen::Matrix2d gv, gu;
  double divu = 0;
};

// ALE coefficient guard
double coefficient(double divu) {
  double c = 1.0 + divu;
  if (c <= 0.0) throw MaterialError("degenerate ALE coefficient (1 + div u <= 0)");
  return c;
}

} // namespace

FsiDomain make_fsi_domain(std::shared_ptr<const Mesh> mesh, int fluid_region, int solid_region,
                          int degree) {
  FsiDomain dom;
  dom.mesh = mesh;
  dom.fluid_region = fluid_region;
  dom.solid_region = solid_region;

  std::set<int> tags(mesh->boundary_tag.begin(), mesh->boundary_tag.end());
  DirichletSpec all_fixed;
  for (int t : tags)
    all_fixed.values[t] = [](const Vec2&) { return Eigen::VectorXd::Zero(2); };
  dom.uspace = build_space(mesh, degree, 2, all_fixed);
  dom.vspace = make_vspace(mesh, degree, fluid_region);

  dom.is_fluid.resize(mesh->n_cells());
  for (int c = 0; c < mesh->n_cells(); ++c) {
    int tag = mesh->region_tag[c];
    if (tag != fluid_region && tag != solid_region)
      throw std::invalid_argument("make_fsi_domain: cell region " + std::to_string(tag) +
                                  " is neither fluid nor solid");
    dom.is_fluid[c] = tag == fluid_region;
  }
  for (std::size_t e = 0; e < mesh->edges.size(); ++e) {
    const EdgeInfo& ei = mesh->edges[e];
    if (ei.cell[1] < 0) continue;
    if (dom.is_fluid[ei.cell[0]] != dom.is_fluid[ei.cell[1]])
      dom.interface_edges.push_back(static_cast<int>(e));
  }
  return dom;
}

Eigen::VectorXd fsi_residual(const FsiDomain& dom, const Field& v, const Field& u,
                             const FsiLoad& load) {
  const Mesh& mesh = *dom.mesh;
  const Space& tu = *dom.uspace; // phi tests
  const Space& tv = *dom.vspace; // psi_f tests
  const int order = std::min(8, 3 * std::max({tu.degree, v.space->degree, u.space->degree}));
  QuadratureRule rule = triangle_quadrature(order);
  BasisTable btu(ShapeSet::get(tu.degree), rule.points);
  BasisTable btv(ShapeSet::get(tv.degree), rule.points);
  BasisTable bsv(ShapeSet::get(v.space->degree), rule.points);
  BasisTable bsu(ShapeSet::get(u.space->degree), rule.points);

  Eigen::VectorXd r_phi = Eigen::VectorXd::Zero(tu.n_dofs());
  Eigen::VectorXd r_psi = Eigen::VectorXd::Zero(tv.n_dofs());

  for (int c = 0; c < mesh.n_cells(); ++c) {
    CellGeometry geo = cell_geometry(mesh, c);
    bool fluid = dom.is_fluid[c];
    const int* cu = tu.cell_node_ptr(c);
    const int* cv = tv.cell_node_ptr(c);
    const int* su = u.space->cell_node_ptr(c);
    const int* sv = v.space->cell_node_ptr(c);
    for (int q = 0; q < rule.size(); ++q) {
      double wq = rule.weights[q] * geo.detJ;
      Eigen::MatrixX2d Gtu = btu.dN[q] * geo.Jinv;
      Eigen::MatrixX2d Gtv = btv.dN[q] * geo.Jinv;
      Eigen::MatrixX2d Gsu = bsu.dN[q] * geo.Jinv;
      Eigen::MatrixX2d Gsv = bsv.dN[q] * geo.Jinv;
      Eigen::Matrix2d gu = Eigen::Matrix2d::Zero(), gv = Eigen::Matrix2d::Zero();
      for (int i = 0; i < u.space->nodes_per_cell; ++i)
        for (int comp = 0; comp < 2; ++comp)
          gu.row(comp) += u.coeffs[u.space->dof(su[i], comp)] * Gsu.row(i);
      for (int i = 0; i < v.space->nodes_per_cell; ++i)
        for (int comp = 0; comp < 2; ++comp)
          gv.row(comp) += v.coeffs[v.space->dof(sv[i], comp)] * Gsv.row(i);

      Vec2 x = geo.x0 + geo.J * Vec2(rule.points(q, 0), rule.points(q, 1));
      Vec2 f = load.f ? load.f(x) : Vec2(0, 0);
      if (fluid) {
        double coef = coefficient(gu.trace());
        for (int i = 0; i < tu.nodes_per_cell; ++i)
          for (int comp = 0; comp < 2; ++comp)
            r_phi[tu.dof(cu[i], comp)] +=
                wq * (f[comp] * btu.N(q, i) - coef * gv.row(comp).dot(Gtu.row(i)));
        for (int i = 0; i < tv.nodes_per_cell; ++i)
          for (int comp = 0; comp < 2; ++comp)
            r_psi[tv.dof(cv[i], comp)] -= wq * gu.row(comp).dot(Gtv.row(i));
      } else {
        for (int i = 0; i < tu.nodes_per_cell; ++i)
          for (int comp = 0; comp < 2; ++comp)
            r_phi[tu.dof(cu[i], comp)] +=
                wq * (f[comp] * btu.N(q, i) - gu.row(comp).dot(Gtu.row(i)));
      }
    }
  }

  Eigen::VectorXd r(tu.n_free() + tv.n_free());
  r.head(tu.n_free()) = tu.free_from_full(r_phi);
  r.tail(tv.n_free()) = tv.free_from_full(r_psi);
  return r;
}

Eigen::SparseMatrix<double> fsi_tangent(const FsiDomain& dom, const Field& v, const Field& u) {
  const Mesh& mesh = *dom.mesh;
  const Space& tu = *dom.uspace;
  const Space& tv = *dom.vspace;
  const long n_u = tu.n_free(), n_v = tv.n_free();
  const int order = std::min(8, 3 * std::max({tu.degree, v.space->degree, u.space->degree}));
  QuadratureRule rule = triangle_quadrature(order);
  BasisTable btu(ShapeSet::get(tu.degree), rule.points);
  BasisTable btv(ShapeSet::get(tv.degree), rule.points);
  BasisTable bsv(ShapeSet::get(v.space->degree), rule.points);
  BasisTable bsu(ShapeSet::get(u.space->degree), rule.points);

  std::vector<Eigen::Triplet<double>> trips;
  // rows: phi block [0, n_u), psi block [n_u, n_u + n_v)
  // cols: dv block [0, n_v), du block [n_v, n_v + n_u)
  for (int c = 0; c < mesh.n_cells(); ++c) {
    CellGeometry geo = cell_geometry(mesh, c);
    bool fluid = dom.is_fluid[c];
    const int* cu = tu.cell_node_ptr(c);
    const int* cv = tv.cell_node_ptr(c);
    const int* su = u.space->cell_node_ptr(c);
    const int* sv = v.space->cell_node_ptr(c);

    for (int q = 0; q < rule.size(); ++q) {
      double wq = rule.weights[q] * geo.detJ;
      Eigen::MatrixX2d Gtu = btu.dN[q] * geo.Jinv;
      Eigen::MatrixX2d Gtv = btv.dN[q] * geo.Jinv;
      Eigen::MatrixX2d Gsu = bsu.dN[q] * geo.Jinv;
      Eigen::MatrixX2d Gsv = bsv.dN[q] * geo.Jinv;
      Eigen::Matrix2d gu = Eigen::Matrix2d::Zero(), gv = Eigen::Matrix2d::Zero();
      for (int i = 0; i < u.space->nodes_per_cell; ++i)
        for (int comp = 0; comp < 2; ++comp)
          gu.row(comp) += u.coeffs[u.space->dof(su[i], comp)] * Gsu.row(i);
      for (int i = 0; i < v.space->nodes_per_cell; ++i)
        for (int comp = 0; comp < 2; ++comp)
          gv.row(comp) += v.coeffs[v.space->dof(sv[i], comp)] * Gsv.row(i);

      if (fluid) {
        double coef = coefficient(gu.trace());
        // phi rows
        for (int i = 0; i < tu.nodes_per_cell; ++i) {
          for (int ci = 0; ci < 2; ++ci) {
            long gi = tu.free_index[tu.dof(cu[i], ci)];
            if (gi < 0) continue;
            // d/dv: ((1+div u) grad dv, grad phi)
            for (int j = 0; j < tv.nodes_per_cell; ++j) {
              long gj = tv.free_index[tv.dof(cv[j], ci)];
              if (gj < 0) continue;
              trips.emplace_back(gi, gj, wq * coef * Gtv.row(j).dot(Gtu.row(i)));
            }
            // d/du: (div(du) grad v, grad phi)
            for (int j = 0; j < tu.nodes_per_cell; ++j) {
              for (int cj = 0; cj < 2; ++cj) {
                long gj = tu.free_index[tu.dof(cu[j], cj)];
                if (gj < 0) continue;
                trips.emplace_back(gi, n_v + gj,
                                   wq * Gtu(j, cj) * gv.row(ci).dot(Gtu.row(i)));
              }
            }
          }
        }
        // psi rows: (grad du, grad psi)
        for (int i = 0; i < tv.nodes_per_cell; ++i) {
          for (int ci = 0; ci < 2; ++ci) {
            long gi = tv.free_index[tv.dof(cv[i], ci)];
            if (gi < 0) continue;
            for (int j = 0; j < tu.nodes_per_cell; ++j) {
              long gj = tu.free_index[tu.dof(cu[j], ci)];
              if (gj < 0) continue;
              trips.emplace_back(n_u + gi, n_v + gj, wq * Gtu.row(j).dot(Gtv.row(i)));
            }
          }
        }
      } else {
        // phi rows: (grad du, grad phi)_S
        for (int i = 0; i < tu.nodes_per_cell; ++i) {
          for (int ci = 0; ci < 2; ++ci) {
            long gi = tu.free_index[tu.dof(cu[i], ci)];
            if (gi < 0) continue;
            for (int j = 0; j < tu.nodes_per_cell; ++j) {
              long gj = tu.free_index[tu.dof(cu[j], ci)];
              if (gj < 0) continue;
              trips.emplace_back(gi, n_v + gj, wq * Gtu.row(j).dot(Gtu.row(i)));
            }
          }
        }
      }
    }
  }

  Eigen::SparseMatrix<double> K(n_u + n_v, n_u + n_v);
  K.setFromTriplets(trips.begin(), trips.end());
  K.makeCompressed();
  return K;
}

FsiState fsi_newton(const FsiDomain& dom, const FsiLoad& load, const NewtonConfig& cfg,
                    NewtonReport* report) {
  FsiState st{Field(dom.vspace), Field(dom.uspace)};
  NewtonReport local;
  NewtonReport& rep = report ? *report : local;
  rep = NewtonReport{};

  Eigen::VectorXd r = fsi_residual(dom, st.v, st.u, load);
  double rnorm = r.norm();
  double target = std::max(cfg.abs_tol, cfg.rel_tol * rnorm);
  std::vector<double> history{rnorm};
  const long n_v = dom.vspace->n_free();

  int it = 0;
  while (rnorm > target) {
    if (++it > cfg.max_iter)
      throw NewtonError("fsi_newton diverged (max_iter), residual " + std::to_string(rnorm));
    Eigen::SparseMatrix<double> K = fsi_tangent(dom, st.v, st.u);
    Eigen::VectorXd d = solve(K, r);
    double t = 1.0;
    bool accepted = false;
    for (int bt = 0; bt <= cfg.backtracking; ++bt) {
      FsiState trial = st;
      for (long i = 0; i < n_v; ++i) trial.v.coeffs[dom.vspace->free_dofs[i]] += t * d[i];
      for (long i = 0; i < dom.uspace->n_free(); ++i)
        trial.u.coeffs[dom.uspace->free_dofs[i]] += t * d[n_v + i];
      try {
        Eigen::VectorXd rt = fsi_residual(dom, trial.v, trial.u, load);
        double rtn = rt.norm();
        if (rtn < rnorm || rtn <= target) {
          st = std::move(trial);
          r = std::move(rt);
          rnorm = rtn;
          accepted = true;
          break;
        }
      } catch (const MaterialError&) {
      }
      t *= 0.5;
    }
    if (!accepted) throw NewtonError("fsi_newton diverged (backtracking exhausted)");
    history.push_back(rnorm);
    ++rep.total_iterations;
  }
  rep.converged = true;
  rep.load_steps_done = 1;
  rep.last_step_residuals = std::move(history);
  return st;
}

double fsi_goal_value(const FsiDomain& dom, const FsiGoal& goal, const Field& v, const Field& u) {
  const Mesh& mesh = *dom.mesh;
  if (goal.kind == FsiGoal::Kind::SubdomainV) {
    const Space& s = *v.space;
    QuadratureRule rule = triangle_quadrature(std::min(8, 2 * s.degree));
    BasisTable basis(ShapeSet::get(s.degree), rule.points);
    double J = 0;
    for (int c = 0; c < mesh.n_cells(); ++c) {
      if (mesh.region_tag[c] != goal.region_tag) continue;
      CellGeometry geo = cell_geometry(mesh, c);
      const int* cn = s.cell_node_ptr(c);
      for (int q = 0; q < rule.size(); ++q)
        for (int i = 0; i < s.nodes_per_cell; ++i)
          for (int comp = 0; comp < 2; ++comp)
            J += rule.weights[q] * geo.detJ * goal.weights[comp] * basis.N(q, i) *
                 v.coeffs[s.dof(cn[i], comp)];
    }
    return J;
  }
  // InterfaceFluxU, evaluated from the solid side
  EdgeRule erule = edge_quadrature(std::min(15, 2 * u.space->degree + 2));
  double J = 0;
  for (int e : dom.interface_edges) {
    const EdgeInfo& ei = mesh.edges[e];
    int side = dom.is_fluid[ei.cell[0]] ? 1 : 0;
    int cs = ei.cell[side];
    int le = ei.local[side];
    CellGeometry geo = cell_geometry(mesh, cs);
    Vec2 a = mesh.vertices[mesh.cells[cs][(le + 1) % 3]];
    Vec2 b = mesh.vertices[mesh.cells[cs][(le + 2) % 3]];
    double len = (b - a).norm();
    Vec2 ns = edge_outward_normal(mesh, cs, le);
    for (int q = 0; q < erule.size(); ++q) {
      Vec2 x = a + erule.points[q] * (b - a);
      Eigen::MatrixXd G = eval_grad(u, cs, geo.Jinv * (x - geo.x0));
      Vec2 flux(G.row(0).dot(ns), G.row(1).dot(ns));
      J += erule.weights[q] * len * flux.dot(goal.direction);
    }
  }
  return J;
}

Eigen::VectorXd fsi_goal_derivative(const FsiDomain& dom, const FsiGoal& goal) {
  const Mesh& mesh = *dom.mesh;
  const Space& sv = *dom.vspace;
  const Space& su = *dom.uspace;
  Eigen::VectorXd dv_full = Eigen::VectorXd::Zero(sv.n_dofs());
  Eigen::VectorXd du_full = Eigen::VectorXd::Zero(su.n_dofs());

  if (goal.kind == FsiGoal::Kind::SubdomainV) {
    QuadratureRule rule = triangle_quadrature(std::min(8, 2 * sv.degree));
    BasisTable basis(ShapeSet::get(sv.degree), rule.points);
    for (int c = 0; c < mesh.n_cells(); ++c) {
      if (mesh.region_tag[c] != goal.region_tag) continue;
      CellGeometry geo = cell_geometry(mesh, c);
      const int* cn = sv.cell_node_ptr(c);
      for (int q = 0; q < rule.size(); ++q)
        for (int i = 0; i < sv.nodes_per_cell; ++i)
          for (int comp = 0; comp < 2; ++comp)
            dv_full[sv.dof(cn[i], comp)] +=
                rule.weights[q] * geo.detJ * goal.weights[comp] * basis.N(q, i);
    }
  } else {
    EdgeRule erule = edge_quadrature(std::min(15, 2 * su.degree + 2));
    const ShapeSet& shapes = ShapeSet::get(su.degree);
    Eigen::MatrixX2d G(shapes.size(), 2);
    for (int e : dom.interface_edges) {
      const EdgeInfo& ei = mesh.edges[e];
      int side = dom.is_fluid[ei.cell[0]] ? 1 : 0;
      int cs = ei.cell[side];
      int le = ei.local[side];
      CellGeometry geo = cell_geometry(mesh, cs);
      Vec2 a = mesh.vertices[mesh.cells[cs][(le + 1) % 3]];
      Vec2 b = mesh.vertices[mesh.cells[cs][(le + 2) % 3]];
      double len = (b - a).norm();
      Vec2 ns = edge_outward_normal(mesh, cs, le);
      const int* cn = su.cell_node_ptr(cs);
      for (int q = 0; q < erule.size(); ++q) {
        Vec2 x = a + erule.points[q] * (b - a);
        shapes.eval_grad(geo.Jinv * (x - geo.x0), G);
        Eigen::MatrixX2d Gp = G * geo.Jinv;
        for (int i = 0; i < su.nodes_per_cell; ++i)
          for (int comp = 0; comp < 2; ++comp)
            du_full[su.dof(cn[i], comp)] +=
                erule.weights[q] * len * goal.direction[comp] * Gp.row(i).dot(ns);
      }
    }
  }

  Eigen::VectorXd g(sv.n_free() + su.n_free());
  g.head(sv.n_free()) = sv.free_from_full(dv_full);
  g.tail(su.n_free()) = su.free_from_full(du_full);
  return g;
}

FsiAdjoint fsi_adjoint(const FsiDomain& dom, const Field& v, const Field& u,
                       const FsiGoal& goal) {
  Eigen::SparseMatrix<double> K = fsi_tangent(dom, v, u);
  Eigen::SparseMatrix<double> Kt = K.transpose();
  Eigen::VectorXd g = fsi_goal_derivative(dom, goal);
  Eigen::VectorXd y = solve(Kt, g);
  FsiAdjoint adj{Field(dom.uspace), Field(dom.vspace)};
  adj.z.coeffs = dom.uspace->full_from_free(y.head(dom.uspace->n_free()));
  adj.wf.coeffs = dom.vspace->full_from_free(y.tail(dom.vspace->n_free()));
  return adj;
}

double fsi_residual_functional(const FsiDomain& dom, const Field& v, const Field& u,
                               const FsiLoad& load, const Field& wz, const Field& wwf) {
  const Mesh& mesh = *dom.mesh;
  const int order =
      std::min(8, 2 * std::max({wz.space->degree, u.space->degree, v.space->degree}) + 2);
  QuadratureRule rule = triangle_quadrature(order);
  BasisTable bwz(ShapeSet::get(wz.space->degree), rule.points);
  BasisTable bwf(ShapeSet::get(wwf.space->degree), rule.points);
  BasisTable bsu(ShapeSet::get(u.space->degree), rule.points);
  BasisTable bsv(ShapeSet::get(v.space->degree), rule.points);

  double r = 0;
  for (int c = 0; c < mesh.n_cells(); ++c) {
    CellGeometry geo = cell_geometry(mesh, c);
    bool fluid = dom.is_fluid[c];
    const int* su = u.space->cell_node_ptr(c);
    const int* sv = v.space->cell_node_ptr(c);
    const int* nz = wz.space->cell_node_ptr(c);
    const int* nf = wwf.space->cell_node_ptr(c);
    for (int q = 0; q < rule.size(); ++q) {
      double wq = rule.weights[q] * geo.detJ;
      Eigen::MatrixX2d Gsu = bsu.dN[q] * geo.Jinv;
      Eigen::MatrixX2d Gsv = bsv.dN[q] * geo.Jinv;
      Eigen::MatrixX2d Gz = bwz.dN[q] * geo.Jinv;
      Eigen::MatrixX2d Gf = bwf.dN[q] * geo.Jinv;
      Eigen::Matrix2d gu = Eigen::Matrix2d::Zero(), gv = Eigen::Matrix2d::Zero(),
                      gz = Eigen::Matrix2d::Zero(), gf = Eigen::Matrix2d::Zero();
      Vec2 zval(0, 0);
      for (int i = 0; i < u.space->nodes_per_cell; ++i)
        for (int comp = 0; comp < 2; ++comp)
          gu.row(comp) += u.coeffs[u.space->dof(su[i], comp)] * Gsu.row(i);
      for (int i = 0; i < v.space->nodes_per_cell; ++i)
        for (int comp = 0; comp < 2; ++comp)
          gv.row(comp) += v.coeffs[v.space->dof(sv[i], comp)] * Gsv.row(i);
      for (int i = 0; i < wz.space->nodes_per_cell; ++i)
        for (int comp = 0; comp < 2; ++comp) {
          gz.row(comp) += wz.coeffs[wz.space->dof(nz[i], comp)] * Gz.row(i);
          zval[comp] += wz.coeffs[wz.space->dof(nz[i], comp)] * bwz.N(q, i);
        }
      for (int i = 0; i < wwf.space->nodes_per_cell; ++i)
        for (int comp = 0; comp < 2; ++comp)
          gf.row(comp) += wwf.coeffs[wwf.space->dof(nf[i], comp)] * Gf.row(i);

      Vec2 x = geo.x0 + geo.J * Vec2(rule.points(q, 0), rule.points(q, 1));
      double val = load.f ? load.f(x).dot(zval) : 0.0;
      if (fluid) {
        double coef = coefficient(gu.trace());
        val -= coef * (gv.array() * gz.array()).sum();
        val -= (gu.array() * gf.array()).sum();
      } else {
        val -= (gu.array() * gz.array()).sum();
      }
      r += wq * val;
    }
  }
  return r;
}

Eigen::VectorXd fsi_local_estimators(const FsiDomain& dom, const Field& v, const Field& u,
                                     const FsiLoad& load, const Field& z_hat,
                                     const Field& wf_hat, Eigen::VectorXd* signed_contribs) {
  const Mesh& mesh = *dom.mesh;
  const int k = dom.uspace->degree;

  Field wz = dwr_weight(z_hat, dom.uspace);
  Field wf = dwr_weight(wf_hat, dom.vspace);

  Eigen::VectorXd signed_eta = Eigen::VectorXd::Zero(mesh.n_cells());

  // flux of the v-equation in F
  auto fluid_flux = [&](int c, const Vec2& xref) {
    Eigen::MatrixXd Gu = eval_grad(u, c, xref);
    Eigen::MatrixXd Gv = eval_grad(v, c, xref);
    return Eigen::Matrix2d(coefficient(Gu.trace()) * Gv);
  };

  QuadratureRule rule = triangle_quadrature(std::min(8, 2 * k + 2));
  BasisTable bk(ShapeSet::get(k), rule.points);
  // cellwise data projection of f onto degree-k polynomials
  const ShapeSet& shapes_k = ShapeSet::get(k);
  Eigen::MatrixXd mass = Eigen::MatrixXd::Zero(shapes_k.size(), shapes_k.size());
  for (int q = 0; q < rule.size(); ++q)
    mass += rule.weights[q] * bk.N.row(q).transpose() * bk.N.row(q);
  Eigen::PartialPivLU<Eigen::MatrixXd> mass_lu(mass);

  for (int c = 0; c < mesh.n_cells(); ++c) {
    CellGeometry geo = cell_geometry(mesh, c);
    bool fluid = dom.is_fluid[c];

    Eigen::MatrixXd fcoef;
    if (load.f) {
      Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(shapes_k.size(), 2);
      for (int q = 0; q < rule.size(); ++q) {
        Vec2 x = geo.x0 + geo.J * Vec2(rule.points(q, 0), rule.points(q, 1));
        Vec2 fv = load.f(x);
        for (int i = 0; i < shapes_k.size(); ++i) {
          rhs(i, 0) += rule.weights[q] * bk.N(q, i) * fv.x();
          rhs(i, 1) += rule.weights[q] * bk.N(q, i) * fv.y();
        }
      }
      fcoef = mass_lu.solve(rhs);
    }

    double acc = 0;
    for (int q = 0; q < rule.size(); ++q) {
      Vec2 xref(rule.points(q, 0), rule.points(q, 1));
      double wq = rule.weights[q] * geo.detJ;
      Vec2 fk(0, 0);
      if (load.f)
        fk = Vec2(fcoef.col(0).dot(bk.N.row(q).transpose()),
                  fcoef.col(1).dot(bk.N.row(q).transpose()));
      Eigen::VectorXd wzv = eval_value(wz, c, xref);
      Eigen::MatrixXd Hu = eval_hess(u, c, xref);
      Vec2 lap_u(Hu(0, 0) + Hu(0, 2), Hu(1, 0) + Hu(1, 2));
      if (fluid) {
        Eigen::MatrixXd Gu = eval_grad(u, c, xref);
        Eigen::MatrixXd Gv = eval_grad(v, c, xref);
        Eigen::MatrixXd Hv = eval_hess(v, c, xref);
        double coef = coefficient(Gu.trace());
        Vec2 grad_divu(Hu(0, 0) + Hu(1, 1), Hu(0, 1) + Hu(1, 2));
        Vec2 lap_v(Hv(0, 0) + Hv(0, 2), Hv(1, 0) + Hv(1, 2));
        Vec2 divG;
        for (int comp = 0; comp < 2; ++comp)
          divG[comp] = grad_divu.dot(Gv.row(comp)) + coef * lap_v[comp];
        acc += wq * (fk + divG).dot(Vec2(wzv[0], wzv[1]));
        Eigen::VectorXd wfv = eval_value(wf, c, xref);
        acc += wq * lap_u.dot(Vec2(wfv[0], wfv[1]));
      } else {
        acc += wq * (fk + lap_u).dot(Vec2(wzv[0], wzv[1]));
      }
    }
    signed_eta[c] += acc;
  }

  EdgeRule erule = edge_quadrature(std::min(15, 2 * k + 2));
  for (std::size_t e = 0; e < mesh.edges.size(); ++e) {
    const EdgeInfo& ei = mesh.edges[e];
    if (ei.cell[1] < 0) continue; // boundary: all weights vanish
    int c0 = ei.cell[0], c1 = ei.cell[1];
    Vec2 a = mesh.vertices[mesh.cells[c0][(ei.local[0] + 1) % 3]];
    Vec2 b = mesh.vertices[mesh.cells[c0][(ei.local[0] + 2) % 3]];
    double len = (b - a).norm();
    Vec2 n0 = edge_outward_normal(mesh, c0, ei.local[0]);
    bool f0 = dom.is_fluid[c0], f1 = dom.is_fluid[c1];

    double acc = 0;
    for (int q = 0; q < erule.size(); ++q) {
      Vec2 x = a + erule.points[q] * (b - a);
      CellGeometry g0 = cell_geometry(mesh, c0), g1 = cell_geometry(mesh, c1);
      Vec2 r0 = g0.Jinv * (x - g0.x0), r1 = g1.Jinv * (x - g1.x0);
      Eigen::VectorXd wzv = eval_value(wz, c0, r0);
      Vec2 wzvec(wzv[0], wzv[1]);
      if (f0 && f1) {
        Eigen::Matrix2d G0 = fluid_flux(c0, r0), G1 = fluid_flux(c1, r1);
        acc += erule.weights[q] * len * 0.5 * ((G1 - G0) * n0).dot(wzvec);
        Eigen::VectorXd wfv = eval_value(wf, c0, r0);
        Eigen::Matrix2d U0 = eval_grad(u, c0, r0), U1 = eval_grad(u, c1, r1);
        acc += erule.weights[q] * len * 0.5 * ((U1 - U0) * n0).dot(Vec2(wfv[0], wfv[1]));
      } else if (!f0 && !f1) {
        Eigen::Matrix2d U0 = eval_grad(u, c0, r0), U1 = eval_grad(u, c1, r1);
        acc += erule.weights[q] * len * 0.5 * ((U1 - U0) * n0).dot(wzvec);
      } else {
        // interface: -(coef grad v n_f + grad u_S n_s) . wz, split half/half
        int cf = f0 ? c0 : c1;
        int cs = f0 ? c1 : c0;
        const Vec2& rf = f0 ? r0 : r1;
        const Vec2& rsol = f0 ? r1 : r0;
        Vec2 nf = f0 ? n0 : Vec2(-n0.x(), -n0.y());
        Eigen::Matrix2d Gf = fluid_flux(cf, rf);
        Eigen::Matrix2d Us = eval_grad(u, cs, rsol);
        Vec2 resid = -((Gf - Us) * nf); // n_s = -n_f
        acc += erule.weights[q] * len * 0.5 * resid.dot(wzvec);
      }
    }
    signed_eta[c0] += acc;
    signed_eta[c1] += acc;
  }

  if (signed_contribs) *signed_contribs = signed_eta;
  return signed_eta.cwiseAbs();
}

DwrReport fsi_dwr(const FsiDomain& dom, const FsiDomain& enriched, const Field& v,
                  const Field& u, const FsiLoad& load, const FsiGoal& goal, int iteration) {
  FsiAdjoint adj = fsi_adjoint(enriched, v, u, goal);
  Field wz = dwr_weight(adj.z, dom.uspace);
  Field wf = dwr_weight(adj.wf, dom.vspace);
  double eta = std::abs(fsi_residual_functional(dom, v, u, load, wz, wf));
  Eigen::VectorXd sgn;
  Eigen::VectorXd eta_local = fsi_local_estimators(dom, v, u, load, adj.z, adj.wf, &sgn);
  double J = fsi_goal_value(dom, goal, v, u);
  return make_report(iteration, dom.mesh->n_cells(), dom.n_unknowns(), J, eta, eta_local, sgn);
}

} // namespace dwr
