#include "dwr/estimator.hpp"

#include <cmath>

namespace dwr {

Field dwr_weight(const Field& z_hat, SpacePtr coarse) {
  Field iz = interpolate(z_hat, std::move(coarse));
  Field w = interpolate(iz, z_hat.space);
  w.coeffs = z_hat.coeffs - w.coeffs;
  return w;
}

double global_estimator(const std::function<double(const Field&)>& residual,
                        const Field& z_hat) {
  return std::abs(residual(z_hat));
}

namespace {

// Cellwise L2-projection of an analytic vector function onto degree-k
// polynomials, returned as nodal coefficients of the cell's Lagrange basis.
class CellProjection {
public:
  CellProjection(const Mesh& mesh, int degree, const std::function<Vec2(const Vec2&)>& fn)
      : mesh_(mesh), shapes_(ShapeSet::get(degree)), fn_(fn) {
    rule_ = triangle_quadrature(std::min(8, 2 * degree + 2));
    tab_ = std::make_unique<BasisTable>(shapes_, rule_.points);
    const int nl = shapes_.size();
    mass_.setZero(nl, nl);
    for (int q = 0; q < rule_.size(); ++q)
      mass_ += rule_.weights[q] * tab_->N.row(q).transpose() * tab_->N.row(q);
    // reference mass; detJ cancels between mass and rhs for affine cells
    mass_lu_ = mass_.partialPivLu();
  }

  bool active() const { return static_cast<bool>(fn_); }

  // nodal coefficients (nl x 2) of the projection on cell c
  Eigen::MatrixXd coefficients(int c) const {
    const int nl = shapes_.size();
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(nl, 2);
    CellGeometry geo = cell_geometry(mesh_, c);
    for (int q = 0; q < rule_.size(); ++q) {
      Vec2 x = geo.x0 + geo.J * Vec2(rule_.points(q, 0), rule_.points(q, 1));
      Vec2 f = fn_(x);
      for (int i = 0; i < nl; ++i) {
        rhs(i, 0) += rule_.weights[q] * tab_->N(q, i) * f.x();
        rhs(i, 1) += rule_.weights[q] * tab_->N(q, i) * f.y();
      }
    }
    return mass_lu_.solve(rhs);
  }

  Vec2 eval(const Eigen::MatrixXd& coeffs, const Eigen::VectorXd& N) const {
    return {coeffs.col(0).dot(N), coeffs.col(1).dot(N)};
  }

private:
  const Mesh& mesh_;
  const ShapeSet& shapes_;
  std::function<Vec2(const Vec2&)> fn_;
  QuadratureRule rule_;
  std::unique_ptr<BasisTable> tab_;
  Eigen::MatrixXd mass_;
  Eigen::PartialPivLU<Eigen::MatrixXd> mass_lu_;
};

// Edgewise 1D L2-projection onto degree-k polynomials in the arclength
// parameter, evaluated at edge quadrature points.
Eigen::MatrixXd edge_projection_values(const std::function<Vec2(const Vec2&)>& fn, const Vec2& a,
                                       const Vec2& b, int degree, const EdgeRule& eval_rule) {
  const int n = degree + 1;
  EdgeRule prule = edge_quadrature(2 * degree + 2);
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n, 2);
  for (int q = 0; q < prule.size(); ++q) {
    double t = prule.points[q], w = prule.weights[q];
    Eigen::VectorXd mono(n);
    double tp = 1;
    for (int j = 0; j < n; ++j, tp *= t) mono[j] = tp;
    M += w * mono * mono.transpose();
    Vec2 f = fn(a + t * (b - a));
    rhs.col(0) += w * f.x() * mono;
    rhs.col(1) += w * f.y() * mono;
  }
  Eigen::MatrixXd coef = M.partialPivLu().solve(rhs);
  Eigen::MatrixXd vals(eval_rule.size(), 2);
  for (int q = 0; q < eval_rule.size(); ++q) {
    double t = eval_rule.points[q];
    Vec2 v(0, 0);
    double tp = 1;
    for (int j = 0; j < n; ++j, tp *= t) v += tp * Vec2(coef(j, 0), coef(j, 1));
    vals.row(q) = v;
  }
  return vals;
}

bool edge_is_dirichlet(const Space& s, const EdgeInfo& e) {
  if (e.boundary_tag < 0) return false;
  return std::find(s.dirichlet_tags.begin(), s.dirichlet_tags.end(), e.boundary_tag) !=
         s.dirichlet_tags.end();
}

Vec2 ref_point_on_edge(const Mesh& mesh, int c, int le, const Vec2& x) {
  CellGeometry geo = cell_geometry(mesh, c);
  return geo.Jinv * (x - geo.x0);
}

} // namespace

double residual_functional(const Field& u, const LinearMaterial& mat, const ActiveFibers* fibers,
                           const Loads& loads, const Field& w) {
  const Space& su = *u.space;
  const Space& sw = *w.space;
  if (su.mesh.get() != sw.mesh.get())
    throw std::invalid_argument("residual_functional: fields on different meshes");
  const Mesh& mesh = *su.mesh;
  const int order = std::min(8, su.degree + sw.degree + 2);
  QuadratureRule rule = triangle_quadrature(order);
  BasisTable bu(ShapeSet::get(su.degree), rule.points);
  BasisTable bw(ShapeSet::get(sw.degree), rule.points);

  double r = 0;
  for (int c = 0; c < mesh.n_cells(); ++c) {
    CellGeometry geo = cell_geometry(mesh, c);
    int tag = mesh.region_tag[c];
    double mu = mat.mu(tag), la = mat.lambda(tag);
    const int* cu = su.cell_node_ptr(c);
    const int* cw = sw.cell_node_ptr(c);
    bool act = fibers && fibers->active_on(mesh, c);
    Eigen::Matrix2d A = Eigen::Matrix2d::Zero();
    if (act) {
      Vec2 e = fibers->cell_direction(mesh, c);
      A = (fibers->beta * fibers->tension) * (e * e.transpose());
    }
    for (int q = 0; q < rule.size(); ++q) {
      double wq = rule.weights[q] * geo.detJ;
      Eigen::MatrixX2d Gu = bu.dN[q] * geo.Jinv;
      Eigen::MatrixX2d Gw = bw.dN[q] * geo.Jinv;
      Eigen::Matrix2d gu = Eigen::Matrix2d::Zero(), gw = Eigen::Matrix2d::Zero();
      Vec2 wval(0, 0);
      for (int i = 0; i < su.nodes_per_cell; ++i)
        for (int comp = 0; comp < 2; ++comp) gu.row(comp) += u.coeffs[su.dof(cu[i], comp)] * Gu.row(i);
      for (int i = 0; i < sw.nodes_per_cell; ++i)
        for (int comp = 0; comp < 2; ++comp) {
          gw.row(comp) += w.coeffs[sw.dof(cw[i], comp)] * Gw.row(i);
          wval[comp] += w.coeffs[sw.dof(cw[i], comp)] * bw.N(q, i);
        }
      Eigen::Matrix2d sig = hooke_stress(mu, la, gu);
      double val = -(sig.array() * (0.5 * (gw + gw.transpose())).array()).sum();
      if (act) val -= (A.array() * gw.array()).sum();
      if (loads.body) {
        Vec2 x = geo.x0 + geo.J * Vec2(rule.points(q, 0), rule.points(q, 1));
        val += loads.body(x).dot(wval);
      }
      r += wq * val;
    }
  }

  if (!loads.traction.empty()) {
    EdgeRule erule = edge_quadrature(std::min(15, 2 * sw.degree + 2));
    const ShapeSet& wshapes = ShapeSet::get(sw.degree);
    Eigen::VectorXd N(wshapes.size());
    for (const EdgeInfo& ei : mesh.edges) {
      if (ei.boundary_tag < 0) continue;
      auto it = loads.traction.find(ei.boundary_tag);
      if (it == loads.traction.end()) continue;
      int c = ei.cell[0];
      CellGeometry geo = cell_geometry(mesh, c);
      Vec2 a = mesh.vertices[mesh.cells[c][(ei.local[0] + 1) % 3]];
      Vec2 b = mesh.vertices[mesh.cells[c][(ei.local[0] + 2) % 3]];
      double len = (b - a).norm();
      const int* cw = sw.cell_node_ptr(c);
      for (int q = 0; q < erule.size(); ++q) {
        Vec2 x = a + erule.points[q] * (b - a);
        wshapes.eval(geo.Jinv * (x - geo.x0), N);
        Vec2 wval(0, 0);
        for (int i = 0; i < sw.nodes_per_cell; ++i)
          for (int comp = 0; comp < 2; ++comp) wval[comp] += w.coeffs[sw.dof(cw[i], comp)] * N[i];
        r += erule.weights[q] * len * it->second(x).dot(wval);
      }
    }
  }
  return r;
}

Eigen::VectorXd local_estimators(const Field& u, const Field& z_hat, const LinearMaterial& mat,
                                 const ActiveFibers* fibers, const Loads& loads,
                                 Eigen::VectorXd* signed_contribs) {
  const Space& su = *u.space;
  const Space& sz = *z_hat.space;
  if (su.mesh.get() != sz.mesh.get())
    throw std::invalid_argument("local_estimators: fields on different meshes");
  const Mesh& mesh = *su.mesh;
  const int k = su.degree;

  Field w = dwr_weight(z_hat, u.space);
  LinearStress stress = sigma_active(u, mat, fibers);

  Eigen::VectorXd signed_eta = Eigen::VectorXd::Zero(mesh.n_cells());

  // cell terms
  QuadratureRule rule = triangle_quadrature(std::min(8, 2 * k + 2));
  BasisTable bw(ShapeSet::get(sz.degree), rule.points);
  BasisTable bk(ShapeSet::get(k), rule.points);
  CellProjection body_proj(mesh, k, loads.body);
  for (int c = 0; c < mesh.n_cells(); ++c) {
    CellGeometry geo = cell_geometry(mesh, c);
    Eigen::MatrixXd bcoef;
    if (body_proj.active()) bcoef = body_proj.coefficients(c);
    const int* cw = sz.cell_node_ptr(c);
    double acc = 0;
    for (int q = 0; q < rule.size(); ++q) {
      Vec2 xref(rule.points(q, 0), rule.points(q, 1));
      Vec2 R = stress.divergence(c, xref);
      if (body_proj.active()) R += body_proj.eval(bcoef, bk.N.row(q).transpose());
      Vec2 wval(0, 0);
      for (int i = 0; i < sz.nodes_per_cell; ++i)
        for (int comp = 0; comp < 2; ++comp)
          wval[comp] += w.coeffs[sz.dof(cw[i], comp)] * bw.N(q, i);
      acc += rule.weights[q] * geo.detJ * R.dot(wval);
    }
    signed_eta[c] += acc;
  }

  // edge terms
  EdgeRule erule = edge_quadrature(std::min(15, 2 * k + 2));
  static const std::function<Vec2(const Vec2&)> zero_fn;
  for (const EdgeInfo& ei : mesh.edges) {
    int c0 = ei.cell[0];
    Vec2 a = mesh.vertices[mesh.cells[c0][(ei.local[0] + 1) % 3]];
    Vec2 b = mesh.vertices[mesh.cells[c0][(ei.local[0] + 2) % 3]];
    double len = (b - a).norm();
    Vec2 n0 = edge_outward_normal(mesh, c0, ei.local[0]);

    if (ei.cell[1] >= 0) {
      int c1 = ei.cell[1];
      double acc = 0;
      for (int q = 0; q < erule.size(); ++q) {
        Vec2 x = a + erule.points[q] * (b - a);
        Eigen::Matrix2d s0 = stress.eval(c0, ref_point_on_edge(mesh, c0, ei.local[0], x));
        Eigen::Matrix2d s1 = stress.eval(c1, ref_point_on_edge(mesh, c1, ei.local[1], x));
        Vec2 jump = (s1 - s0) * n0; // (outer - inner) n, seen from c0
        Eigen::VectorXd wv = eval_value(w, c0, ref_point_on_edge(mesh, c0, ei.local[0], x));
        acc += erule.weights[q] * len * 0.5 * jump.dot(Vec2(wv[0], wv[1]));
      }
      // the same signed value is each cell's half share of the jump term
      signed_eta[c0] += acc;
      signed_eta[c1] += acc;
    } else if (!edge_is_dirichlet(su, ei)) {
      auto it = loads.traction.find(ei.boundary_tag);
      const auto& tr = it != loads.traction.end() ? it->second : zero_fn;
      Eigen::MatrixXd bvals;
      if (tr) bvals = edge_projection_values(tr, a, b, k, erule);
      double acc = 0;
      for (int q = 0; q < erule.size(); ++q) {
        Vec2 x = a + erule.points[q] * (b - a);
        Vec2 xref = ref_point_on_edge(mesh, c0, ei.local[0], x);
        Vec2 R = -(stress.eval(c0, xref) * n0);
        if (tr) R += Vec2(bvals(q, 0), bvals(q, 1));
        Eigen::VectorXd wv = eval_value(w, c0, xref);
        acc += erule.weights[q] * len * R.dot(Vec2(wv[0], wv[1]));
      }
      signed_eta[c0] += acc;
    }
  }

  if (signed_contribs) *signed_contribs = signed_eta;
  return signed_eta.cwiseAbs();
}

double residual_functional(const HyperProblem& prob, const Field& u, const Field* p,
                           const Field& wz, const Field* wq) {
  const Space& su = *u.space;
  const Space& sw = *wz.space;
  const Mesh& mesh = *su.mesh;
  const bool mixed = prob.pspace != nullptr;
  const int order = std::min(8, 2 * std::max(su.degree, sw.degree) + 2);
  QuadratureRule rule = triangle_quadrature(order);
  BasisTable bu(ShapeSet::get(su.degree), rule.points);
  BasisTable bw(ShapeSet::get(sw.degree), rule.points);
  std::unique_ptr<BasisTable> bp, bwq;
  if (mixed) {
    bp = std::make_unique<BasisTable>(ShapeSet::get(p->space->degree), rule.points);
    if (wq) bwq = std::make_unique<BasisTable>(ShapeSet::get(wq->space->degree), rule.points);
  }

  double r = 0;
  for (int c = 0; c < mesh.n_cells(); ++c) {
    CellGeometry geo = cell_geometry(mesh, c);
    const int* cu = su.cell_node_ptr(c);
    const int* cw = sw.cell_node_ptr(c);
    for (int q = 0; q < rule.size(); ++q) {
      double wqd = rule.weights[q] * geo.detJ;
      Eigen::MatrixX2d Gu = bu.dN[q] * geo.Jinv;
      Eigen::MatrixX2d Gw = bw.dN[q] * geo.Jinv;
      Eigen::Matrix2d gu = Eigen::Matrix2d::Zero(), gw = Eigen::Matrix2d::Zero();
      Vec2 wval(0, 0);
      for (int i = 0; i < su.nodes_per_cell; ++i)
        for (int comp = 0; comp < 2; ++comp) gu.row(comp) += u.coeffs[su.dof(cu[i], comp)] * Gu.row(i);
      for (int i = 0; i < sw.nodes_per_cell; ++i)
        for (int comp = 0; comp < 2; ++comp) {
          gw.row(comp) += wz.coeffs[sw.dof(cw[i], comp)] * Gw.row(i);
          wval[comp] += wz.coeffs[sw.dof(cw[i], comp)] * bw.N(q, i);
        }
      double pval = 0;
      if (mixed) {
        const int* pn = p->space->cell_node_ptr(c);
        for (int i = 0; i < p->space->nodes_per_cell; ++i)
          pval += p->coeffs[p->space->dof(pn[i], 0)] * bp->N(q, i);
      }
      Eigen::Matrix2d Pi = pk1(prob.mat, gu, mixed ? &pval : nullptr);
      double val = -(Pi.array() * gw.array()).sum();
      if (prob.loads.body) {
        Vec2 x = geo.x0 + geo.J * Vec2(rule.points(q, 0), rule.points(q, 1));
        val += prob.loads.body(x).dot(wval);
      }
      if (mixed && wq) {
        const Space& swq = *wq->space;
        const int* qn = swq.cell_node_ptr(c);
        double qval = 0;
        for (int i = 0; i < swq.nodes_per_cell; ++i)
          qval += wq->coeffs[swq.dof(qn[i], 0)] * bwq->N(q, i);
        Eigen::Matrix2d F = Eigen::Matrix2d::Identity() + gu;
        double detC = F.determinant() * F.determinant();
        val += (detC - 1.0) * qval;
      }
      r += wqd * val;
    }
  }

  if (!prob.loads.traction.empty()) {
    EdgeRule erule = edge_quadrature(std::min(15, 2 * sw.degree + 2));
    const ShapeSet& wshapes = ShapeSet::get(sw.degree);
    Eigen::VectorXd N(wshapes.size());
    for (const EdgeInfo& ei : mesh.edges) {
      if (ei.boundary_tag < 0) continue;
      auto it = prob.loads.traction.find(ei.boundary_tag);
      if (it == prob.loads.traction.end()) continue;
      int c = ei.cell[0];
      CellGeometry geo = cell_geometry(mesh, c);
      Vec2 a = mesh.vertices[mesh.cells[c][(ei.local[0] + 1) % 3]];
      Vec2 b = mesh.vertices[mesh.cells[c][(ei.local[0] + 2) % 3]];
      double len = (b - a).norm();
      const int* cw = sw.cell_node_ptr(c);
      for (int q = 0; q < erule.size(); ++q) {
        Vec2 x = a + erule.points[q] * (b - a);
        wshapes.eval(geo.Jinv * (x - geo.x0), N);
        Vec2 wval(0, 0);
        for (int i = 0; i < sw.nodes_per_cell; ++i)
          for (int comp = 0; comp < 2; ++comp) wval[comp] += wz.coeffs[sw.dof(cw[i], comp)] * N[i];
        r += erule.weights[q] * len * it->second(x).dot(wval);
      }
    }
  }
  return r;
}

namespace {

// div Pi at a point from the state's polynomial structure, via one dual
// evaluation per coordinate direction.
Vec2 div_pk1(const HyperMaterial& mat, const Field& u, const Field* p, int cell,
             const Vec2& xref) {
  Eigen::MatrixXd G = eval_grad(u, cell, xref);
  Eigen::MatrixXd H = eval_hess(u, cell, xref); // comp x (xx,xy,yy)
  Eigen::Vector2d gp = Eigen::Vector2d::Zero();
  double pval = 0;
  if (p) {
    pval = eval_value(*p, cell, xref)[0];
    gp = eval_grad(*p, cell, xref).row(0);
  }
  Vec2 div(0, 0);
  for (int l = 0; l < 2; ++l) {
    TMat2<D1> gu;
    for (int a2 = 0; a2 < 2; ++a2)
      for (int b2 = 0; b2 < 2; ++b2) {
        // d(grad u)_{a b}/dx_l = d2 u_a / dx_b dx_l
        int idx = (b2 == 0 && l == 0) ? 0 : ((b2 == 1 && l == 1) ? 2 : 1);
        gu(a2, b2) = D1(G(a2, b2), H(a2, idx));
      }
    D1 pd(pval, gp[l]);
    TMat2<D1> Pi = pk1(mat, gu, p ? &pd : nullptr);
    div[0] += Pi(0, l).d;
    div[1] += Pi(1, l).d;
  }
  return div;
}

Eigen::Matrix2d pk1_at(const HyperMaterial& mat, const Field& u, const Field* p, int cell,
                       const Vec2& xref) {
  Eigen::MatrixXd G = eval_grad(u, cell, xref);
  double pval = 0;
  if (p) pval = eval_value(*p, cell, xref)[0];
  return pk1(mat, Eigen::Matrix2d(G), p ? &pval : nullptr);
}

} // namespace

Eigen::VectorXd local_estimators(const HyperProblem& prob, const Field& u, const Field* p,
                                 const Field& z_hat, const Field* w_hat,
                                 Eigen::VectorXd* signed_contribs) {
  const Space& su = *u.space;
  const Mesh& mesh = *su.mesh;
  const int k = su.degree;
  const bool mixed = prob.pspace != nullptr;

  Field wz = dwr_weight(z_hat, u.space);
  std::optional<Field> wq;
  if (mixed && w_hat) wq = dwr_weight(*w_hat, p->space);

  Eigen::VectorXd signed_eta = Eigen::VectorXd::Zero(mesh.n_cells());

  QuadratureRule rule = triangle_quadrature(std::min(8, 2 * k + 2));
  BasisTable bw(ShapeSet::get(z_hat.space->degree), rule.points);
  BasisTable bk(ShapeSet::get(k), rule.points);
  std::unique_ptr<BasisTable> bwq;
  if (wq) bwq = std::make_unique<BasisTable>(ShapeSet::get(wq->space->degree), rule.points);
  CellProjection body_proj(mesh, k, prob.loads.body);

  for (int c = 0; c < mesh.n_cells(); ++c) {
    CellGeometry geo = cell_geometry(mesh, c);
    Eigen::MatrixXd bcoef;
    if (body_proj.active()) bcoef = body_proj.coefficients(c);
    const int* cw = z_hat.space->cell_node_ptr(c);
    double acc = 0;
    for (int q = 0; q < rule.size(); ++q) {
      Vec2 xref(rule.points(q, 0), rule.points(q, 1));
      Vec2 R = div_pk1(prob.mat, u, mixed ? p : nullptr, c, xref);
      if (body_proj.active()) R += body_proj.eval(bcoef, bk.N.row(q).transpose());
      Vec2 wval(0, 0);
      for (int i = 0; i < z_hat.space->nodes_per_cell; ++i)
        for (int comp = 0; comp < 2; ++comp)
          wval[comp] += wz.coeffs[z_hat.space->dof(cw[i], comp)] * bw.N(q, i);
      double val = R.dot(wval);
      if (wq) {
        Eigen::MatrixXd G = eval_grad(u, c, xref);
        Eigen::Matrix2d F = Eigen::Matrix2d::Identity() + G;
        double detC = F.determinant() * F.determinant();
        const Space& swq = *wq->space;
        const int* qn = swq.cell_node_ptr(c);
        double qval = 0;
        for (int i = 0; i < swq.nodes_per_cell; ++i)
          qval += wq->coeffs[swq.dof(qn[i], 0)] * bwq->N(q, i);
        val += (detC - 1.0) * qval;
      }
      acc += rule.weights[q] * geo.detJ * val;
    }
    signed_eta[c] += acc;
  }

  EdgeRule erule = edge_quadrature(std::min(15, 2 * k + 2));
  static const std::function<Vec2(const Vec2&)> zero_fn;
  for (const EdgeInfo& ei : mesh.edges) {
    int c0 = ei.cell[0];
    Vec2 a = mesh.vertices[mesh.cells[c0][(ei.local[0] + 1) % 3]];
    Vec2 b = mesh.vertices[mesh.cells[c0][(ei.local[0] + 2) % 3]];
    double len = (b - a).norm();
    Vec2 n0 = edge_outward_normal(mesh, c0, ei.local[0]);

    if (ei.cell[1] >= 0) {
      int c1 = ei.cell[1];
      double acc = 0;
      for (int q = 0; q < erule.size(); ++q) {
        Vec2 x = a + erule.points[q] * (b - a);
        Eigen::Matrix2d s0 =
            pk1_at(prob.mat, u, mixed ? p : nullptr, c0, ref_point_on_edge(mesh, c0, ei.local[0], x));
        Eigen::Matrix2d s1 =
            pk1_at(prob.mat, u, mixed ? p : nullptr, c1, ref_point_on_edge(mesh, c1, ei.local[1], x));
        Vec2 jump = (s1 - s0) * n0;
        Eigen::VectorXd wv = eval_value(wz, c0, ref_point_on_edge(mesh, c0, ei.local[0], x));
        acc += erule.weights[q] * len * 0.5 * jump.dot(Vec2(wv[0], wv[1]));
      }
      signed_eta[c0] += acc;
      signed_eta[c1] += acc;
    } else if (!edge_is_dirichlet(su, ei)) {
      auto it = prob.loads.traction.find(ei.boundary_tag);
      const auto& tr = it != prob.loads.traction.end() ? it->second : zero_fn;
      Eigen::MatrixXd bvals;
      if (tr) bvals = edge_projection_values(tr, a, b, k, erule);
      double acc = 0;
      for (int q = 0; q < erule.size(); ++q) {
        Vec2 x = a + erule.points[q] * (b - a);
        Vec2 xref = ref_point_on_edge(mesh, c0, ei.local[0], x);
        Vec2 R = -(pk1_at(prob.mat, u, mixed ? p : nullptr, c0, xref) * n0);
        if (tr) R += Vec2(bvals(q, 0), bvals(q, 1));
        Eigen::VectorXd wv = eval_value(wz, c0, xref);
        acc += erule.weights[q] * len * R.dot(Vec2(wv[0], wv[1]));
      }
      signed_eta[c0] += acc;
    }
  }

  if (signed_contribs) *signed_contribs = signed_eta;
  return signed_eta.cwiseAbs();
}

double model_error_indicator(const std::function<double(const Field&, const Field&)>& a_eps_form,
                             const Field& u_coarse, const Field& z_coarse) {
  // For the hierarchy a(u_F,v) + a_eps(u_F,v) = L(v) against a(u_C,v) = L(v),
  // testing the fine dual with e_u = u_C - u_F gives exactly
  // J(e_u) = a_eps(u_C, z_F); replacing z_F by the coarse dual is the
  // first-order approximation evaluated here.
  return a_eps_form(u_coarse, z_coarse);
}

DwrReport make_report(int iteration, long cells, long dofs, double J_value, double eta_global,
                      const Eigen::VectorXd& eta_local, const Eigen::VectorXd& eta_signed) {
  DwrReport r;
  r.iteration = iteration;
  r.cells = cells;
  r.dofs = dofs;
  r.J_value = J_value;
  r.eta_global = eta_global;
  r.eta_local = eta_local;
  r.eta_signed = eta_signed;
  r.sum_local = eta_local.sum();
  if (r.eta_global > r.sum_local + 1e-9 * (1.0 + r.eta_global))
    throw std::logic_error("DwrReport: eta_global exceeds the sum of local estimators");
  return r;
}

DwrReport& effectivity(DwrReport& report, double reference_error) {
  if (!(reference_error > 0))
    throw std::invalid_argument("effectivity: reference error must be positive");
  report.reference_error = reference_error;
  report.effectivity_global = report.eta_global / reference_error;
  report.effectivity_sum = report.sum_local / reference_error;
  if (report.eta_global > report.sum_local + 1e-9 * (1.0 + report.eta_global))
    throw std::logic_error("DwrReport: eta_global exceeds the sum of local estimators");
  return report;
}

} // namespace dwr
