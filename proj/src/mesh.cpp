#include "dwr/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace dwr {

namespace {

inline std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

inline double signed_area(const Vec2& a, const Vec2& b, const Vec2& c) {
  return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x()));
}

} // namespace

double Mesh::cell_area(int c) const {
  const auto& t = cells[c];
  return signed_area(vertices[t[0]], vertices[t[1]], vertices[t[2]]);
}

Vec2 Mesh::centroid(int c) const {
  const auto& t = cells[c];
  return (vertices[t[0]] + vertices[t[1]] + vertices[t[2]]) / 3.0;
}

double Mesh::total_area() const {
  double s = 0;
  for (int c = 0; c < n_cells(); ++c) s += cell_area(c);
  return s;
}

double Mesh::min_angle() const {
  double amin = M_PI;
  for (const auto& t : cells) {
    for (int i = 0; i < 3; ++i) {
      Vec2 u = vertices[t[(i + 1) % 3]] - vertices[t[i]];
      Vec2 v = vertices[t[(i + 2) % 3]] - vertices[t[i]];
      double ang = std::acos(std::clamp(u.dot(v) / (u.norm() * v.norm()), -1.0, 1.0));
      amin = std::min(amin, ang);
    }
  }
  return amin;
}

int Mesh::neighbor(int c, int le) const {
  const EdgeInfo& e = edges[cell_edges[c][le]];
  return e.cell[0] == c ? e.cell[1] : e.cell[0];
}

void Mesh::build_topology() {
  const int nc = n_cells();
  edges.clear();
  cell_edges.assign(nc, {-1, -1, -1});

  std::unordered_map<std::uint64_t, int> index;
  index.reserve(3 * nc);
  for (int c = 0; c < nc; ++c) {
    for (int le = 0; le < 3; ++le) {
      int a = cells[c][(le + 1) % 3];
      int b = cells[c][(le + 2) % 3];
      auto key = edge_key(a, b);
      auto it = index.find(key);
      if (it == index.end()) {
        EdgeInfo e;
        e.v0 = std::min(a, b);
        e.v1 = std::max(a, b);
        e.cell[0] = c;
        e.local[0] = le;
        index.emplace(key, static_cast<int>(edges.size()));
        cell_edges[c][le] = static_cast<int>(edges.size());
        edges.push_back(e);
      } else {
        EdgeInfo& e = edges[it->second];
        if (e.cell[1] != -1)
          throw MeshError("non-manifold edge (" + std::to_string(e.v0) + "," +
                          std::to_string(e.v1) + ") has more than 2 incident cells");
        e.cell[1] = c;
        e.local[1] = le;
        cell_edges[c][le] = it->second;
      }
    }
  }

  // Attach boundary tags; every 1-incidence edge must carry exactly one tag.
  for (std::size_t i = 0; i < boundary_edges.size(); ++i) {
    auto key = edge_key(boundary_edges[i][0], boundary_edges[i][1]);
    auto it = index.find(key);
    if (it == index.end())
      throw MeshError("boundary edge (" + std::to_string(boundary_edges[i][0]) + "," +
                      std::to_string(boundary_edges[i][1]) + ") is not an edge of any cell");
    EdgeInfo& e = edges[it->second];
    if (e.cell[1] != -1)
      throw MeshError("boundary edge (" + std::to_string(e.v0) + "," + std::to_string(e.v1) +
                      ") is interior");
    if (e.boundary_tag != -1)
      throw MeshError("duplicate boundary edge (" + std::to_string(e.v0) + "," +
                      std::to_string(e.v1) + ")");
    e.boundary_tag = boundary_tag[i];
  }
  for (const EdgeInfo& e : edges) {
    if (e.cell[1] == -1 && e.boundary_tag == -1)
      throw MeshError("untagged boundary edge (" + std::to_string(e.v0) + "," +
                      std::to_string(e.v1) + ")");
  }
}

namespace {

// Deterministic refinement-edge choice: longest edge, ties broken by the
// global (min,max) vertex ids so that neighbors agree on shared edges.
int longest_edge_local(const Mesh& m, int c) {
  int best = 0;
  std::array<double, 3> len2;
  std::array<std::uint64_t, 3> key;
  for (int le = 0; le < 3; ++le) {
    int a = m.cells[c][(le + 1) % 3];
    int b = m.cells[c][(le + 2) % 3];
    len2[le] = (m.vertices[a] - m.vertices[b]).squaredNorm();
    key[le] = edge_key(a, b);
  }
  for (int le = 1; le < 3; ++le) {
    if (len2[le] > len2[best] || (len2[le] == len2[best] && key[le] > key[best])) best = le;
  }
  return best;
}

} // namespace

Mesh make_mesh(std::vector<Vec2> vertices, std::vector<std::array<int, 3>> cells,
               std::vector<int> region_tag, std::vector<std::array<int, 2>> boundary_edges,
               std::vector<int> boundary_tag, int* reoriented) {
  Mesh m;
  m.vertices = std::move(vertices);
  m.cells = std::move(cells);
  m.region_tag = std::move(region_tag);
  m.boundary_edges = std::move(boundary_edges);
  m.boundary_tag = std::move(boundary_tag);

  if (m.region_tag.size() != m.cells.size())
    throw MeshError("region tag count does not match cell count");
  if (m.boundary_tag.size() != m.boundary_edges.size())
    throw MeshError("boundary tag count does not match boundary edge count");

  const int nv = m.n_vertices();
  for (std::size_t c = 0; c < m.cells.size(); ++c) {
    auto& t = m.cells[c];
    for (int v : t)
      if (v < 0 || v >= nv)
        throw MeshError("cell " + std::to_string(c) + " references invalid vertex " +
                        std::to_string(v));
    double a = signed_area(m.vertices[t[0]], m.vertices[t[1]], m.vertices[t[2]]);
    if (a == 0.0)
      throw MeshError("inverted cell " + std::to_string(c) + " (zero area)");
    if (a < 0.0) {
      std::swap(t[1], t[2]);
      if (reoriented) ++*reoriented;
    }
  }

  m.refinement_edge.resize(m.cells.size());
  for (int c = 0; c < m.n_cells(); ++c) m.refinement_edge[c] = longest_edge_local(m, c);
  m.parent.assign(m.cells.size(), -1);
  m.build_topology();
  return m;
}

Mesh load_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MeshError("cannot open mesh file: " + path);

  auto fail = [&](const std::string& what) {
    throw MeshError("parse failure in " + path + ": " + what);
  };

  long nv, nc, nbe;
  if (!(in >> nv >> nc >> nbe)) fail("header (expected NV NC NBE)");
  if (nv < 3 || nc < 1 || nbe < 0) fail("implausible header counts");

  std::vector<Vec2> vs(nv);
  for (long i = 0; i < nv; ++i)
    if (!(in >> vs[i].x() >> vs[i].y())) fail("vertex " + std::to_string(i));

  std::vector<std::array<int, 3>> cs(nc);
  std::vector<int> rt(nc);
  for (long i = 0; i < nc; ++i)
    if (!(in >> cs[i][0] >> cs[i][1] >> cs[i][2] >> rt[i])) fail("cell " + std::to_string(i));

  std::vector<std::array<int, 2>> be(nbe);
  std::vector<int> bt(nbe);
  for (long i = 0; i < nbe; ++i)
    if (!(in >> be[i][0] >> be[i][1] >> bt[i])) fail("boundary edge " + std::to_string(i));

  int reoriented = 0;
  Mesh m = make_mesh(std::move(vs), std::move(cs), std::move(rt), std::move(be), std::move(bt),
                     &reoriented);
  if (reoriented > 0)
    std::cerr << "load_mesh: reoriented " << reoriented << " clockwise cell(s) in " << path
              << "\n";
  return m;
}

void save_mesh(const Mesh& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw MeshError("cannot write mesh file: " + path);
  out.precision(17);
  out << m.n_vertices() << " " << m.n_cells() << " " << m.boundary_edges.size() << "\n";
  for (const Vec2& v : m.vertices) out << v.x() << " " << v.y() << "\n";
  for (int c = 0; c < m.n_cells(); ++c)
    out << m.cells[c][0] << " " << m.cells[c][1] << " " << m.cells[c][2] << " " << m.region_tag[c]
        << "\n";
  for (std::size_t i = 0; i < m.boundary_edges.size(); ++i)
    out << m.boundary_edges[i][0] << " " << m.boundary_edges[i][1] << " " << m.boundary_tag[i]
        << "\n";
}

MarkedSet dorfler_mark(const std::vector<double>& indicators, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw std::invalid_argument("dorfler_mark: alpha must be in (0,1]");
  for (std::size_t i = 0; i < indicators.size(); ++i)
    if (indicators[i] < 0.0 || !std::isfinite(indicators[i]))
      throw std::invalid_argument("dorfler_mark: negative indicator at cell " + std::to_string(i));

  std::vector<int> order(indicators.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return indicators[a] > indicators[b]; });

  double total = 0;
  for (double v : indicators) total += v;
  const double target = alpha * total;

  MarkedSet marked;
  double sum = 0;
  for (int c : order) {
    if (sum >= target) break;
    marked.cell_ids.push_back(c);
    sum += indicators[c];
  }
  return marked;
}

namespace {

// Working state for bisection refinement. Cells are kept peak-first: the
// refinement edge is always (v[1], v[2]).
struct Bisector {
  std::vector<Vec2> vertices;
  struct WCell {
    std::array<int, 3> v;
    int region;
    int root;
    bool alive;
  };
  std::vector<WCell> wcells;
  std::unordered_map<std::uint64_t, std::array<int, 2>> edge_cells;
  std::unordered_map<std::uint64_t, int> midpoint;
  std::unordered_map<std::uint64_t, int> boundary; // edge -> tag

  explicit Bisector(const Mesh& m) {
    vertices = m.vertices;
    wcells.reserve(2 * m.n_cells());
    for (int c = 0; c < m.n_cells(); ++c) {
      int r = m.refinement_edge[c];
      WCell w;
      w.v = {m.cells[c][r], m.cells[c][(r + 1) % 3], m.cells[c][(r + 2) % 3]};
      w.region = m.region_tag[c];
      w.root = c;
      w.alive = true;
      attach(static_cast<int>(wcells.size()), w.v);
      wcells.push_back(w);
    }
    for (std::size_t i = 0; i < m.boundary_edges.size(); ++i)
      boundary[edge_key(m.boundary_edges[i][0], m.boundary_edges[i][1])] = m.boundary_tag[i];
  }

  void attach(int id, const std::array<int, 3>& v) {
    for (int le = 0; le < 3; ++le) {
      auto key = edge_key(v[(le + 1) % 3], v[(le + 2) % 3]);
      auto it = edge_cells.try_emplace(key, std::array<int, 2>{-1, -1}).first;
      if (it->second[0] == -1) it->second[0] = id;
      else if (it->second[1] == -1) it->second[1] = id;
      else throw MeshError("refine: non-manifold edge encountered");
    }
  }

  void detach(int id, const std::array<int, 3>& v) {
    for (int le = 0; le < 3; ++le) {
      auto key = edge_key(v[(le + 1) % 3], v[(le + 2) % 3]);
      auto& slot = edge_cells.at(key);
      if (slot[0] == id) slot[0] = -1;
      else if (slot[1] == id) slot[1] = -1;
    }
  }

  int other_cell(std::uint64_t key, int self) const {
    auto it = edge_cells.find(key);
    if (it == edge_cells.end()) return -1;
    if (it->second[0] != self && it->second[0] != -1) return it->second[0];
    if (it->second[1] != self && it->second[1] != -1) return it->second[1];
    return -1;
  }

  int midpoint_of(int a, int b) {
    auto key = edge_key(a, b);
    auto it = midpoint.find(key);
    if (it != midpoint.end()) return it->second;
    int id = static_cast<int>(vertices.size());
    vertices.push_back(0.5 * (vertices[a] + vertices[b]));
    midpoint.emplace(key, id);
    return id;
  }

  // Splits one peak-first cell at its base midpoint m.
  void bisect(int c, int m) {
    WCell& w = wcells[c];
    detach(c, w.v);
    w.alive = false;
    WCell c1{{m, w.v[0], w.v[1]}, w.region, w.root, true};
    WCell c2{{m, w.v[2], w.v[0]}, w.region, w.root, true};
    int id1 = static_cast<int>(wcells.size());
    wcells.push_back(c1);
    attach(id1, c1.v);
    int id2 = static_cast<int>(wcells.size());
    wcells.push_back(c2);
    attach(id2, c2.v);
  }

  // Bisects cell c; first makes the neighbor across the base compatible.
  void refine_cell(int c0) {
    if (!wcells[c0].alive) return;
    std::vector<int> stack{c0};
    std::size_t guard = 0;
    while (!stack.empty()) {
      if (++guard > 64 * wcells.size() + 64)
        throw MeshError("refine: conforming closure did not terminate");
      int c = stack.back();
      if (!wcells[c].alive) {
        stack.pop_back();
        continue;
      }
      const auto& v = wcells[c].v;
      auto base = edge_key(v[1], v[2]);
      int n = other_cell(base, c);
      if (n != -1) {
        const auto& nv = wcells[n].v;
        if (edge_key(nv[1], nv[2]) != base) {
          stack.push_back(n);
          continue;
        }
      }
      int m = midpoint_of(v[1], v[2]);
      auto bnd = boundary.find(base);
      if (bnd != boundary.end()) {
        int tag = bnd->second;
        boundary.erase(bnd);
        boundary[edge_key(v[1], m)] = tag;
        boundary[edge_key(m, v[2])] = tag;
      }
      bisect(c, m);
      if (n != -1) bisect(n, m);
      stack.pop_back();
    }
  }

  Mesh finish() const {
    Mesh out;
    out.vertices = vertices;
    for (const WCell& w : wcells) {
      if (!w.alive) continue;
      out.cells.push_back(w.v);
      out.region_tag.push_back(w.region);
      out.refinement_edge.push_back(0);
      out.parent.push_back(w.root);
    }
    // Deterministic boundary order: walk cell edges in cell order.
    std::unordered_map<std::uint64_t, char> seen;
    for (const auto& t : out.cells) {
      for (int le = 0; le < 3; ++le) {
        auto key = edge_key(t[(le + 1) % 3], t[(le + 2) % 3]);
        auto it = boundary.find(key);
        if (it != boundary.end() && !seen.count(key)) {
          seen.emplace(key, 1);
          out.boundary_edges.push_back({t[(le + 1) % 3], t[(le + 2) % 3]});
          out.boundary_tag.push_back(it->second);
        }
      }
    }
    out.build_topology();
    return out;
  }
};

} // namespace

Mesh refine(const Mesh& mesh, const MarkedSet& marked) {
  for (int c : marked.cell_ids)
    if (c < 0 || c >= mesh.n_cells())
      throw MeshError("refine: marked cell " + std::to_string(c) + " out of range");
  if (marked.cell_ids.empty()) {
    Mesh copy = mesh;
    copy.parent.resize(copy.cells.size());
    std::iota(copy.parent.begin(), copy.parent.end(), 0);
    return copy;
  }
  Bisector b(mesh);
  for (int c : marked.cell_ids) b.refine_cell(c);
  return b.finish();
}

Mesh uniform_refine(const Mesh& mesh) {
  Mesh out;
  out.vertices = mesh.vertices;
  std::unordered_map<std::uint64_t, int> midpoint;
  auto mid = [&](int a, int b) {
    auto key = edge_key(a, b);
    auto it = midpoint.find(key);
    if (it != midpoint.end()) return it->second;
    int id = static_cast<int>(out.vertices.size());
    out.vertices.push_back(0.5 * (mesh.vertices[a] + mesh.vertices[b]));
    midpoint.emplace(key, id);
    return id;
  };

  for (int c = 0; c < mesh.n_cells(); ++c) {
    const auto& t = mesh.cells[c];
    int m0 = mid(t[1], t[2]);
    int m1 = mid(t[2], t[0]);
    int m2 = mid(t[0], t[1]);
    const std::array<std::array<int, 3>, 4> children = {{
        {t[0], m2, m1}, {t[1], m0, m2}, {t[2], m1, m0}, {m0, m1, m2}}};
    for (const auto& ch : children) {
      out.cells.push_back(ch);
      out.region_tag.push_back(mesh.region_tag[c]);
      out.parent.push_back(c);
    }
  }
  for (std::size_t i = 0; i < mesh.boundary_edges.size(); ++i) {
    int a = mesh.boundary_edges[i][0], bv = mesh.boundary_edges[i][1];
    int m = mid(a, bv);
    out.boundary_edges.push_back({a, m});
    out.boundary_tag.push_back(mesh.boundary_tag[i]);
    out.boundary_edges.push_back({m, bv});
    out.boundary_tag.push_back(mesh.boundary_tag[i]);
  }
  out.refinement_edge.resize(out.cells.size());
  for (int c = 0; c < out.n_cells(); ++c) out.refinement_edge[c] = longest_edge_local(out, c);
  out.build_topology();
  return out;
}

void check_conforming(const Mesh& mesh) {
  for (int c = 0; c < mesh.n_cells(); ++c)
    if (mesh.cell_area(c) <= 0)
      throw MeshError("cell " + std::to_string(c) + " has non-positive area");
  // build_topology already enforces 1/2 incidence and boundary tagging, but a
  // stale `edges` array would hide violations; rebuild from scratch.
  Mesh probe;
  probe.vertices = mesh.vertices;
  probe.cells = mesh.cells;
  probe.region_tag = mesh.region_tag;
  probe.boundary_edges = mesh.boundary_edges;
  probe.boundary_tag = mesh.boundary_tag;
  probe.build_topology();
}

} // namespace dwr
