#include "dwr/space.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace dwr {

namespace {

double ipow(double x, int e) {
  double r = 1.0;
  for (int i = 0; i < e; ++i) r *= x;
  return r;
}

int interior_nodes(int degree) { return degree >= 3 ? (degree - 1) * (degree - 2) / 2 : 0; }

} // namespace

ShapeSet::ShapeSet(int degree) : degree_(degree) {
  if (degree < 1 || degree > 3) throw std::invalid_argument("ShapeSet: degree must be 1..3");
  const int k = degree;
  std::vector<Vec2> nodes;
  nodes.emplace_back(0.0, 0.0);
  nodes.emplace_back(1.0, 0.0);
  nodes.emplace_back(0.0, 1.0);
  const Vec2 vref[3] = {{0, 0}, {1, 0}, {0, 1}};
  for (int e = 0; e < 3; ++e) {
    Vec2 a = vref[(e + 1) % 3], b = vref[(e + 2) % 3];
    for (int s = 1; s < k; ++s) nodes.emplace_back(a + (double(s) / k) * (b - a));
  }
  if (k == 3) nodes.emplace_back(1.0 / 3.0, 1.0 / 3.0);

  nodes_.resize(static_cast<int>(nodes.size()), 2);
  for (std::size_t i = 0; i < nodes.size(); ++i) nodes_.row(static_cast<int>(i)) = nodes[i];

  for (int d = 0; d <= k; ++d)
    for (int a = d; a >= 0; --a) monomials_.push_back({a, d - a});

  const int n = size();
  Eigen::MatrixXd V(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      V(i, j) = ipow(nodes_(i, 0), monomials_[j][0]) * ipow(nodes_(i, 1), monomials_[j][1]);
  coeff_ = V.fullPivLu().inverse().transpose();
}

const ShapeSet& ShapeSet::get(int degree) {
  static const ShapeSet s1(1), s2(2), s3(3);
  switch (degree) {
    case 1: return s1;
    case 2: return s2;
    case 3: return s3;
    default: throw std::invalid_argument("ShapeSet: degree must be 1..3");
  }
}

void ShapeSet::eval(const Vec2& x, Eigen::VectorXd& N) const {
  const int n = size();
  Eigen::VectorXd m(n);
  for (int j = 0; j < n; ++j) m[j] = ipow(x.x(), monomials_[j][0]) * ipow(x.y(), monomials_[j][1]);
  N.noalias() = coeff_ * m;
}

void ShapeSet::eval_grad(const Vec2& x, Eigen::MatrixX2d& G) const {
  const int n = size();
  Eigen::MatrixX2d dm(n, 2);
  for (int j = 0; j < n; ++j) {
    int a = monomials_[j][0], b = monomials_[j][1];
    dm(j, 0) = a == 0 ? 0.0 : a * ipow(x.x(), a - 1) * ipow(x.y(), b);
    dm(j, 1) = b == 0 ? 0.0 : b * ipow(x.x(), a) * ipow(x.y(), b - 1);
  }
  G.noalias() = coeff_ * dm;
}

void ShapeSet::eval_hess(const Vec2& x, Eigen::MatrixX3d& H) const {
  const int n = size();
  Eigen::MatrixX3d d2(n, 3);
  for (int j = 0; j < n; ++j) {
    int a = monomials_[j][0], b = monomials_[j][1];
    d2(j, 0) = a < 2 ? 0.0 : double(a) * (a - 1) * ipow(x.x(), a - 2) * ipow(x.y(), b);
    d2(j, 1) = (a == 0 || b == 0) ? 0.0 : double(a) * b * ipow(x.x(), a - 1) * ipow(x.y(), b - 1);
    d2(j, 2) = b < 2 ? 0.0 : double(b) * (b - 1) * ipow(x.x(), a) * ipow(x.y(), b - 2);
  }
  H.noalias() = coeff_ * d2;
}

BasisTable::BasisTable(const ShapeSet& shapes, const Eigen::MatrixX2d& points, bool hessians) {
  const int nq = static_cast<int>(points.rows());
  const int nl = shapes.size();
  N.resize(nq, nl);
  dN.resize(nq);
  if (hessians) d2N.resize(nq);
  Eigen::VectorXd vals(nl);
  for (int q = 0; q < nq; ++q) {
    Vec2 x = points.row(q);
    shapes.eval(x, vals);
    N.row(q) = vals;
    Eigen::MatrixX2d g(nl, 2);
    shapes.eval_grad(x, g);
    dN[q] = g;
    if (hessians) {
      Eigen::MatrixX3d h(nl, 3);
      shapes.eval_hess(x, h);
      d2N[q] = h;
    }
  }
}

CellGeometry cell_geometry(const Mesh& mesh, int c) {
  CellGeometry g;
  const auto& t = mesh.cells[c];
  g.x0 = mesh.vertices[t[0]];
  g.J.col(0) = mesh.vertices[t[1]] - g.x0;
  g.J.col(1) = mesh.vertices[t[2]] - g.x0;
  g.detJ = g.J(0, 0) * g.J(1, 1) - g.J(0, 1) * g.J(1, 0);
  g.Jinv << g.J(1, 1), -g.J(0, 1), -g.J(1, 0), g.J(0, 0);
  g.Jinv /= g.detJ;
  return g;
}

Vec2 edge_outward_normal(const Mesh& mesh, int c, int le) {
  int a = mesh.cells[c][(le + 1) % 3];
  int b = mesh.cells[c][(le + 2) % 3];
  Vec2 t = (mesh.vertices[b] - mesh.vertices[a]).normalized();
  return {t.y(), -t.x()}; // CCW traversal keeps the interior on the left
}

DirichletSpec fixed_boundary(std::initializer_list<int> tags, int components) {
  DirichletSpec spec;
  for (int tag : tags)
    spec.values[tag] = [components](const Vec2&) { return Eigen::VectorXd::Zero(components); };
  return spec;
}

SpacePtr build_space(std::shared_ptr<const Mesh> mesh, int degree, int components,
                     const DirichletSpec& dirichlet) {
  if (degree < 1 || degree > 3) throw std::invalid_argument("build_space: degree must be 1..3");
  if (components < 1 || components > 2)
    throw std::invalid_argument("build_space: components must be 1 or 2");

  auto sp = std::make_shared<Space>();
  Space& s = *sp;
  s.mesh = mesh;
  s.degree = degree;
  s.components = components;

  const Mesh& m = *mesh;
  const int k = degree;
  const int per_edge = k - 1;
  const long nv = m.n_vertices();
  const long ne = static_cast<long>(m.edges.size());
  const long nc = m.n_cells();
  const int n_int = interior_nodes(k);
  s.n_nodes = nv + ne * per_edge + nc * n_int;
  s.nodes_per_cell = 3 + 3 * per_edge + n_int;

  s.cell_nodes.resize(nc * s.nodes_per_cell);
  for (long c = 0; c < nc; ++c) {
    int* cn = s.cell_nodes.data() + c * s.nodes_per_cell;
    for (int i = 0; i < 3; ++i) cn[i] = m.cells[c][i];
    int pos = 3;
    for (int le = 0; le < 3; ++le) {
      int ge = m.cell_edges[c][le];
      bool forward = m.cells[c][(le + 1) % 3] == m.edges[ge].v0;
      for (int sl = 0; sl < per_edge; ++sl) {
        int slot = forward ? sl : per_edge - 1 - sl;
        cn[pos++] = static_cast<int>(nv + static_cast<long>(ge) * per_edge + slot);
      }
    }
    for (int i = 0; i < n_int; ++i) cn[pos++] = static_cast<int>(nv + ne * per_edge + c * n_int + i);
  }

  s.node_pos.resize(s.n_nodes);
  for (long v = 0; v < nv; ++v) s.node_pos[v] = m.vertices[v];
  for (long e = 0; e < ne; ++e) {
    Vec2 a = m.vertices[m.edges[e].v0], b = m.vertices[m.edges[e].v1];
    for (int sl = 0; sl < per_edge; ++sl)
      s.node_pos[nv + e * per_edge + sl] = a + (double(sl + 1) / k) * (b - a);
  }
  if (n_int > 0)
    for (long c = 0; c < nc; ++c) s.node_pos[nv + ne * per_edge + c] = m.centroid(static_cast<int>(c));

  // Dirichlet nodes from tagged boundary edges.
  std::set<int> mesh_tags(m.boundary_tag.begin(), m.boundary_tag.end());
  for (const auto& [tag, fn] : dirichlet.values) {
    if (!mesh_tags.count(tag))
      throw std::invalid_argument("build_space: unknown boundary tag " + std::to_string(tag) +
                                  " in Dirichlet specification");
    s.dirichlet_tags.push_back(tag);
  }

  s.prescribed = Eigen::VectorXd::Zero(s.n_dofs());
  std::vector<char> constrained(s.n_dofs(), 0);
  for (long e = 0; e < ne; ++e) {
    const EdgeInfo& ei = m.edges[e];
    if (ei.boundary_tag < 0) continue;
    auto it = dirichlet.values.find(ei.boundary_tag);
    if (it == dirichlet.values.end()) continue;
    std::vector<long> nodes = {ei.v0, ei.v1};
    for (int sl = 0; sl < per_edge; ++sl) nodes.push_back(nv + e * per_edge + sl);
    for (long node : nodes) {
      Eigen::VectorXd val = it->second(s.node_pos[node]);
      for (int comp = 0; comp < components; ++comp) {
        long d = node * components + comp;
        constrained[d] = 1;
        s.prescribed[d] = val[comp];
      }
    }
  }

  s.free_index.assign(s.n_dofs(), -1);
  for (long d = 0; d < s.n_dofs(); ++d) {
    if (!constrained[d]) {
      s.free_index[d] = static_cast<int>(s.free_dofs.size());
      s.free_dofs.push_back(static_cast<int>(d));
    }
  }
  return sp;
}

SpacePtr homogeneous_space_like(const Space& s, int degree) {
  DirichletSpec spec;
  const int comps = s.components;
  for (int tag : s.dirichlet_tags)
    spec.values[tag] = [comps](const Vec2&) { return Eigen::VectorXd::Zero(comps); };
  return build_space(s.mesh, degree, s.components, spec);
}

std::vector<int> boundary_nodes(const Space& space, int tag) {
  const Mesh& m = *space.mesh;
  const int per_edge = space.degree - 1;
  const long nv = m.n_vertices();
  std::set<int> nodes;
  for (std::size_t e = 0; e < m.edges.size(); ++e) {
    if (m.edges[e].boundary_tag != tag) continue;
    nodes.insert(m.edges[e].v0);
    nodes.insert(m.edges[e].v1);
    for (int sl = 0; sl < per_edge; ++sl)
      nodes.insert(static_cast<int>(nv + static_cast<long>(e) * per_edge + sl));
  }
  return {nodes.begin(), nodes.end()};
}

Eigen::VectorXd Space::full_from_free(const Eigen::VectorXd& xf) const {
  Eigen::VectorXd full = prescribed;
  for (std::size_t i = 0; i < free_dofs.size(); ++i) full[free_dofs[i]] = xf[static_cast<long>(i)];
  return full;
}

Eigen::VectorXd Space::free_from_full(const Eigen::VectorXd& xfull) const {
  Eigen::VectorXd xf(n_free());
  for (std::size_t i = 0; i < free_dofs.size(); ++i) xf[static_cast<long>(i)] = xfull[free_dofs[i]];
  return xf;
}

namespace {

void gather_local(const Space& s, int cell, Eigen::MatrixXd& loc, const Eigen::VectorXd& coeffs) {
  loc.resize(s.nodes_per_cell, s.components);
  const int* cn = s.cell_node_ptr(cell);
  for (int i = 0; i < s.nodes_per_cell; ++i)
    for (int c = 0; c < s.components; ++c) loc(i, c) = coeffs[s.dof(cn[i], c)];
}

} // namespace

Eigen::VectorXd eval_value(const Field& f, int cell, const Vec2& xref) {
  const Space& s = *f.space;
  const ShapeSet& shapes = ShapeSet::get(s.degree);
  Eigen::VectorXd N;
  shapes.eval(xref, N);
  Eigen::MatrixXd loc;
  gather_local(s, cell, loc, f.coeffs);
  return loc.transpose() * N;
}

Eigen::MatrixXd eval_grad(const Field& f, int cell, const Vec2& xref) {
  const Space& s = *f.space;
  const ShapeSet& shapes = ShapeSet::get(s.degree);
  Eigen::MatrixX2d G;
  shapes.eval_grad(xref, G);
  CellGeometry geo = cell_geometry(*s.mesh, cell);
  Eigen::MatrixXd loc;
  gather_local(s, cell, loc, f.coeffs);
  // physical gradient: comp x 2
  return loc.transpose() * (G * geo.Jinv);
}

Eigen::MatrixXd eval_hess(const Field& f, int cell, const Vec2& xref) {
  const Space& s = *f.space;
  const ShapeSet& shapes = ShapeSet::get(s.degree);
  Eigen::MatrixX3d H;
  shapes.eval_hess(xref, H);
  CellGeometry geo = cell_geometry(*s.mesh, cell);
  Eigen::MatrixXd loc;
  gather_local(s, cell, loc, f.coeffs);
  Eigen::MatrixXd out(s.components, 3);
  const Eigen::Matrix2d& A = geo.Jinv; // xref = A (x - x0)
  for (int comp = 0; comp < s.components; ++comp) {
    Eigen::Matrix2d Href = Eigen::Matrix2d::Zero();
    for (int i = 0; i < s.nodes_per_cell; ++i) {
      Href(0, 0) += loc(i, comp) * H(i, 0);
      Href(0, 1) += loc(i, comp) * H(i, 1);
      Href(1, 0) += loc(i, comp) * H(i, 1);
      Href(1, 1) += loc(i, comp) * H(i, 2);
    }
    Eigen::Matrix2d Hphys = A.transpose() * Href * A;
    out(comp, 0) = Hphys(0, 0);
    out(comp, 1) = Hphys(0, 1);
    out(comp, 2) = Hphys(1, 1);
  }
  return out;
}

Field interpolate(const Field& f, SpacePtr target) {
  const Space& src = *f.space;
  const Space& dst = *target;
  if (src.mesh.get() != dst.mesh.get())
    throw std::invalid_argument("interpolate: spaces live on different meshes");
  if (src.components != dst.components)
    throw std::invalid_argument("interpolate: component count mismatch");

  const ShapeSet& dshapes = ShapeSet::get(dst.degree);
  Field out(target);
  for (int c = 0; c < dst.mesh->n_cells(); ++c) {
    const int* cn = dst.cell_node_ptr(c);
    for (int i = 0; i < dst.nodes_per_cell; ++i) {
      Vec2 xref = dshapes.nodes().row(i);
      Eigen::VectorXd v = eval_value(f, c, xref);
      for (int comp = 0; comp < dst.components; ++comp) out.coeffs[dst.dof(cn[i], comp)] = v[comp];
    }
  }
  return out;
}

Field extrapolate(const Field& f, SpacePtr target, ExtrapolateStats* stats) {
  const Space& src = *f.space;
  const Space& dst = *target;
  if (src.mesh.get() != dst.mesh.get())
    throw std::invalid_argument("extrapolate: spaces live on different meshes");
  if (dst.degree != src.degree + 1)
    throw std::invalid_argument("extrapolate: target degree must be source degree + 1");
  if (src.components != dst.components)
    throw std::invalid_argument("extrapolate: component count mismatch");

  const Mesh& m = *src.mesh;
  const int kfit = dst.degree;
  std::vector<std::array<int, 2>> monos;
  for (int d = 0; d <= kfit; ++d)
    for (int a = d; a >= 0; --a) monos.push_back({a, d - a});
  const int M = static_cast<int>(monos.size());

  std::vector<std::vector<int>> vertex_cells(m.n_vertices());
  for (int c = 0; c < m.n_cells(); ++c)
    for (int v : m.cells[c]) vertex_cells[v].push_back(c);

  Field embedded = interpolate(f, target);

  Eigen::VectorXd acc = Eigen::VectorXd::Zero(dst.n_dofs());
  Eigen::VectorXd cnt = Eigen::VectorXd::Zero(dst.n_nodes);

  std::vector<int> src_nodes, dst_nodes;
  for (int v = 0; v < m.n_vertices(); ++v) {
    const auto& patch = vertex_cells[v];
    if (patch.empty()) continue;
    if (stats) ++stats->patches;

    src_nodes.clear();
    dst_nodes.clear();
    for (int c : patch) {
      const int* cn = src.cell_node_ptr(c);
      src_nodes.insert(src_nodes.end(), cn, cn + src.nodes_per_cell);
      const int* dn = dst.cell_node_ptr(c);
      dst_nodes.insert(dst_nodes.end(), dn, dn + dst.nodes_per_cell);
    }
    std::sort(src_nodes.begin(), src_nodes.end());
    src_nodes.erase(std::unique(src_nodes.begin(), src_nodes.end()), src_nodes.end());
    std::sort(dst_nodes.begin(), dst_nodes.end());
    dst_nodes.erase(std::unique(dst_nodes.begin(), dst_nodes.end()), dst_nodes.end());

    const int np = static_cast<int>(src_nodes.size());
    bool good = np >= M;
    Eigen::MatrixXd fit; // M x components
    if (good) {
      Vec2 center = m.vertices[v];
      double h = 0;
      for (int n : src_nodes) h = std::max(h, (src.node_pos[n] - center).norm());
      if (h == 0) h = 1;
      Eigen::MatrixXd A(np, M);
      Eigen::MatrixXd b(np, src.components);
      for (int r = 0; r < np; ++r) {
        Vec2 x = (src.node_pos[src_nodes[r]] - center) / h;
        for (int j = 0; j < M; ++j) A(r, j) = ipow(x.x(), monos[j][0]) * ipow(x.y(), monos[j][1]);
        for (int comp = 0; comp < src.components; ++comp)
          b(r, comp) = f.coeffs[src.dof(src_nodes[r], comp)];
      }
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
      qr.setThreshold(1e-9);
      if (qr.rank() < M) {
        good = false;
      } else {
        fit = qr.solve(b);
        for (int n : dst_nodes) {
          Vec2 x = (dst.node_pos[n] - center) / h;
          cnt[n] += 1;
          for (int comp = 0; comp < dst.components; ++comp) {
            double val = 0;
            for (int j = 0; j < M; ++j)
              val += fit(j, comp) * ipow(x.x(), monos[j][0]) * ipow(x.y(), monos[j][1]);
            acc[dst.dof(n, comp)] += val;
          }
        }
      }
    }
    if (!good) {
      if (stats) {
        ++stats->fallback_patches;
        stats->fallback_vertices.push_back(v);
      }
      for (int n : dst_nodes) {
        cnt[n] += 1;
        for (int comp = 0; comp < dst.components; ++comp)
          acc[dst.dof(n, comp)] += embedded.coeffs[dst.dof(n, comp)];
      }
    }
  }

  Field out(target);
  for (long n = 0; n < dst.n_nodes; ++n)
    for (int comp = 0; comp < dst.components; ++comp)
      out.coeffs[dst.dof(static_cast<int>(n), comp)] =
          cnt[n] > 0 ? acc[dst.dof(static_cast<int>(n), comp)] / cnt[n]
                     : embedded.coeffs[dst.dof(static_cast<int>(n), comp)];
  return out;
}

Field transfer(const Field& f, SpacePtr target) {
  const Space& src = *f.space;
  const Space& dst = *target;
  if (src.components != dst.components)
    throw std::invalid_argument("transfer: component count mismatch");
  const Mesh& dm = *dst.mesh;
  const ShapeSet& dshapes = ShapeSet::get(dst.degree);

  Field out(target);
  for (int c = 0; c < dm.n_cells(); ++c) {
    int a = dm.parent.empty() ? -1 : dm.parent[c];
    if (a < 0 || a >= src.mesh->n_cells())
      throw std::invalid_argument("transfer: target mesh has no parent link into source mesh");
    CellGeometry geo = cell_geometry(*src.mesh, a);
    const int* cn = dst.cell_node_ptr(c);
    CellGeometry dgeo = cell_geometry(dm, c);
    for (int i = 0; i < dst.nodes_per_cell; ++i) {
      Vec2 x = dgeo.x0 + dgeo.J * Vec2(dshapes.nodes()(i, 0), dshapes.nodes()(i, 1));
      Vec2 xref = geo.Jinv * (x - geo.x0);
      Eigen::VectorXd v = eval_value(f, a, xref);
      for (int comp = 0; comp < dst.components; ++comp) out.coeffs[dst.dof(cn[i], comp)] = v[comp];
    }
  }
  return out;
}

} // namespace dwr
