#include "dwr/elasticity.hpp"

#include "dwr/goals.hpp"

#include <stdexcept>

namespace dwr {

const LinearMaterial::Params& LinearMaterial::at(int region_tag) const {
  auto it = regions.find(region_tag);
  if (it == regions.end())
    throw std::invalid_argument("LinearMaterial: no parameters for region tag " +
                                std::to_string(region_tag));
  return it->second;
}

double LinearMaterial::mu(int tag) const {
  const Params& p = at(tag);
  return p.E / (2.0 * (1.0 + p.nu));
}

double LinearMaterial::lambda(int tag) const {
  const Params& p = at(tag);
  return p.E * p.nu / ((1.0 + p.nu) * (1.0 - 2.0 * p.nu));
}

Vec2 ActiveFibers::cell_direction(const Mesh& mesh, int cell) const {
  Vec2 e = direction(mesh.centroid(cell));
  double n = e.norm();
  if (n == 0) throw std::invalid_argument("ActiveFibers: zero direction vector");
  return e / n;
}

Eigen::Matrix2d hooke_stress(double mu, double lambda, const Eigen::Matrix2d& grad_u) {
  Eigen::Matrix2d eps = 0.5 * (grad_u + grad_u.transpose());
  return 2.0 * mu * eps + lambda * eps.trace() * Eigen::Matrix2d::Identity();
}

namespace {

// Element stiffness for the vector Lagrange basis, dofs interleaved
// (node, component). sigma(u):eps(v) = 2 mu eps(u):eps(v) + lambda div u div v.
void element_stiffness(const BasisTable& basis, const QuadratureRule& rule,
                       const CellGeometry& geo, double mu, double lambda, Eigen::MatrixXd& K) {
  const int nl = static_cast<int>(basis.N.cols());
  K.setZero(2 * nl, 2 * nl);
  for (int q = 0; q < rule.size(); ++q) {
    Eigen::MatrixXd G = basis.dN[q] * geo.Jinv; // nl x 2, physical gradients
    double w = rule.weights[q] * geo.detJ;
    for (int i = 0; i < nl; ++i) {
      for (int ci = 0; ci < 2; ++ci) {
        // eps(phi_i e_ci) as flat symmetric tensor (xx, yy, xy)
        double ei[3] = {ci == 0 ? G(i, 0) : 0.0, ci == 1 ? G(i, 1) : 0.0,
                        0.5 * (ci == 0 ? G(i, 1) : G(i, 0))};
        double divi = G(i, ci);
        for (int j = 0; j < nl; ++j) {
          for (int cj = 0; cj < 2; ++cj) {
            double ej[3] = {cj == 0 ? G(j, 0) : 0.0, cj == 1 ? G(j, 1) : 0.0,
                            0.5 * (cj == 0 ? G(j, 1) : G(j, 0))};
            double divj = G(j, cj);
            double v = 2.0 * mu * (ei[0] * ej[0] + ei[1] * ej[1] + 2.0 * ei[2] * ej[2]) +
                       lambda * divi * divj;
            K(2 * i + ci, 2 * j + cj) += w * v;
          }
        }
      }
    }
  }
}

} // namespace

SparseSystem assemble_primal(const Space& space, const LinearMaterial& mat,
                             const ActiveFibers* fibers, const Loads& loads) {
  if (space.components != 2)
    throw std::invalid_argument("assemble_primal: displacement space needs 2 components");
  const Mesh& mesh = *space.mesh;
  const int k = space.degree;
  QuadratureRule rule = triangle_quadrature(std::min(8, 2 * k));
  const ShapeSet& shapes = ShapeSet::get(k);
  BasisTable basis(shapes, rule.points);

  BlockLayout layout({&space});
  Assembler asmb(layout);

  Eigen::MatrixXd K;
  for (int c = 0; c < mesh.n_cells(); ++c) {
    CellGeometry geo = cell_geometry(mesh, c);
    int tag = mesh.region_tag[c];
    element_stiffness(basis, rule, geo, mat.mu(tag), mat.lambda(tag), K);
    std::vector<long> dofs = cell_dofs(space, c);
    asmb.add_matrix(0, dofs, 0, dofs, K);

    bool has_body = static_cast<bool>(loads.body);
    bool has_active = fibers && fibers->active_on(mesh, c);
    Eigen::Matrix2d act = Eigen::Matrix2d::Zero();
    if (has_active) {
      Vec2 e = fibers->cell_direction(mesh, c);
      act = (fibers->beta * fibers->tension) * (e * e.transpose());
    }
    if (has_body || has_active) {
      Eigen::VectorXd fe = Eigen::VectorXd::Zero(dofs.size());
      for (int q = 0; q < rule.size(); ++q) {
        double w = rule.weights[q] * geo.detJ;
        Eigen::MatrixXd G = basis.dN[q] * geo.Jinv;
        Vec2 x = geo.x0 + geo.J * Vec2(rule.points(q, 0), rule.points(q, 1));
        Vec2 b = has_body ? loads.body(x) : Vec2(0, 0);
        for (int i = 0; i < static_cast<int>(basis.N.cols()); ++i) {
          for (int ci = 0; ci < 2; ++ci) {
            double v = 0;
            if (has_body) v += b[ci] * basis.N(q, i);
            // l_A(w) = -beta T int (eps(w) e_A).e_A = -(beta T e_A x e_A):grad w
            if (has_active) v -= act(ci, 0) * G(i, 0) + act(ci, 1) * G(i, 1);
            fe[2 * i + ci] += w * v;
          }
        }
      }
      asmb.add_vector(0, dofs, fe);
    }
  }

  if (!loads.traction.empty()) {
    EdgeRule erule = edge_quadrature(2 * k + 2);
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
      std::vector<long> dofs = cell_dofs(space, c);
      Eigen::VectorXd fe = Eigen::VectorXd::Zero(dofs.size());
      for (int q = 0; q < erule.size(); ++q) {
        Vec2 x = a + erule.points[q] * (b - a);
        Vec2 xref = geo.Jinv * (x - geo.x0);
        shapes.eval(xref, N);
        Vec2 t = it->second(x);
        double w = erule.weights[q] * len;
        for (int i = 0; i < shapes.size(); ++i)
          for (int ci = 0; ci < 2; ++ci) fe[2 * i + ci] += w * t[ci] * N[i];
      }
      asmb.add_vector(0, dofs, fe);
    }
  }
  return asmb.finish();
}

Eigen::SparseMatrix<double> assemble_stiffness_unconstrained(const Space& space,
                                                             const LinearMaterial& mat) {
  const Mesh& mesh = *space.mesh;
  QuadratureRule rule = triangle_quadrature(std::min(8, 2 * space.degree));
  BasisTable basis(ShapeSet::get(space.degree), rule.points);
  std::vector<Eigen::Triplet<double>> trips;
  Eigen::MatrixXd K;
  for (int c = 0; c < mesh.n_cells(); ++c) {
    CellGeometry geo = cell_geometry(mesh, c);
    int tag = mesh.region_tag[c];
    element_stiffness(basis, rule, geo, mat.mu(tag), mat.lambda(tag), K);
    std::vector<long> dofs = cell_dofs(space, c);
    for (std::size_t i = 0; i < dofs.size(); ++i)
      for (std::size_t j = 0; j < dofs.size(); ++j)
        trips.emplace_back(static_cast<int>(dofs[i]), static_cast<int>(dofs[j]), K(i, j));
  }
  Eigen::SparseMatrix<double> A(space.n_dofs(), space.n_dofs());
  A.setFromTriplets(trips.begin(), trips.end());
  return A;
}

SparseSystem assemble_dual(const Space& enriched, const LinearMaterial& mat,
                           const ActiveFibers* fibers, const Goal& goal) {
  Loads none;
  SparseSystem sys = assemble_primal(enriched, mat, nullptr, none);
  sys.A = Eigen::SparseMatrix<double>(sys.A.transpose());
  GoalContext ctx;
  ctx.lin_mat = &mat;
  ctx.fibers = fibers; // pre-stress is a load; only the linearization of J uses it
  GoalDerivative d = goal_derivative_rhs(goal, nullptr, enriched, ctx, nullptr);
  sys.b = enriched.free_from_full(d.du);
  return sys;
}

LinearStress sigma_active(const Field& u, const LinearMaterial& mat, const ActiveFibers* fibers) {
  LinearStress s;
  s.u = &u;
  s.mat = &mat;
  s.fibers = fibers;
  return s;
}

Eigen::Matrix2d LinearStress::eval(int cell, const Vec2& xref) const {
  const Mesh& mesh = *u->space->mesh;
  int tag = mesh.region_tag[cell];
  Eigen::Matrix2d sig = hooke_stress(mat->mu(tag), mat->lambda(tag), eval_grad(*u, cell, xref));
  if (fibers && fibers->active_on(mesh, cell)) {
    Vec2 e = fibers->cell_direction(mesh, cell);
    sig += (fibers->beta * fibers->tension) * (e * e.transpose());
  }
  return sig;
}

Vec2 LinearStress::divergence(int cell, const Vec2& xref) const {
  const Mesh& mesh = *u->space->mesh;
  int tag = mesh.region_tag[cell];
  double m = mat->mu(tag), l = mat->lambda(tag);
  Eigen::MatrixXd H = eval_hess(*u, cell, xref); // comp x (xx, xy, yy)
  // div sigma = mu lap u + (mu + lambda) grad div u; the per-cell constant
  // active part has zero divergence.
  Vec2 lap(H(0, 0) + H(0, 2), H(1, 0) + H(1, 2));
  Vec2 gdiv(H(0, 0) + H(1, 1), H(0, 1) + H(1, 2));
  return m * lap + (m + l) * gdiv;
}

} // namespace dwr
