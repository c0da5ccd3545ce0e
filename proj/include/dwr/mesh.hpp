#pragma once

#include <Eigen/Dense>

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

namespace dwr {

using Vec2 = Eigen::Vector2d;

/// Raised on malformed or inconsistent mesh data. The message identifies
/// the failing entity (cell, edge, vertex) where possible.
struct MeshError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EdgeInfo {
  int v0 = -1, v1 = -1;        // endpoint vertex ids, v0 < v1
  int cell[2] = {-1, -1};      // incident cells; cell[1] == -1 on the boundary
  int local[2] = {-1, -1};     // local edge index within each incident cell
  int boundary_tag = -1;       // -1 for interior edges
};

/// Conforming triangle mesh. Immutable after construction; refinement
/// returns a new mesh. Cells are counter-clockwise vertex triples.
/// Local edge i of a cell is the edge opposite local vertex i.
struct Mesh {
  std::vector<Vec2> vertices;
  std::vector<std::array<int, 3>> cells;
  std::vector<int> region_tag;                    // per cell
  std::vector<std::array<int, 2>> boundary_edges; // vertex pairs
  std::vector<int> boundary_tag;                  // per boundary edge
  std::vector<int> refinement_edge;               // per cell, local edge index
  std::vector<int> parent;                        // cell id in the source mesh, -1 if original

  // Derived connectivity, filled by build_topology().
  std::vector<EdgeInfo> edges;
  std::vector<std::array<int, 3>> cell_edges;

  int n_vertices() const { return static_cast<int>(vertices.size()); }
  int n_cells() const { return static_cast<int>(cells.size()); }

  double cell_area(int c) const;
  Vec2 centroid(int c) const;
  double min_angle() const; // radians
  double total_area() const;

  /// Cell on the other side of local edge `le` of cell `c`, or -1.
  int neighbor(int c, int le) const;

  void build_topology();
};

/// Validates, repairs orientation (CW cells are flipped; the count of flips is
/// written to *reoriented when given) and builds connectivity.
Mesh make_mesh(std::vector<Vec2> vertices, std::vector<std::array<int, 3>> cells,
               std::vector<int> region_tag,
               std::vector<std::array<int, 2>> boundary_edges,
               std::vector<int> boundary_tag, int* reoriented = nullptr);

/// Text format: header `NV NC NBE`, then NV lines `x y`, NC lines
/// `v0 v1 v2 region_tag`, NBE lines `v0 v1 boundary_tag`, 0-based indices.
Mesh load_mesh(const std::string& path);
void save_mesh(const Mesh& mesh, const std::string& path);

struct MarkedSet {
  std::vector<int> cell_ids; // in selection order, no duplicates
};

/// Minimal prefix of the descending-sorted cells whose indicator sum reaches
/// alpha times the total. Ties are broken by ascending cell index.
MarkedSet dorfler_mark(const std::vector<double>& indicators, double alpha);

/// Newest-vertex bisection of the marked cells with recursive conforming
/// closure. Region and boundary tags are inherited; `parent` in the result
/// points at the ancestor cell of the input mesh.
Mesh refine(const Mesh& mesh, const MarkedSet& marked);

/// Red refinement: every cell is split into 4 similar children.
Mesh uniform_refine(const Mesh& mesh);

/// Throws MeshError if any conformity invariant is violated (edge incidence,
/// orientation, boundary tagging).
void check_conforming(const Mesh& mesh);

} // namespace dwr
