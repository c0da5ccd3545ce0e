#include "dwr/meshgen.hpp"

#include <cmath>
#include <map>
#include <unordered_map>

namespace dwr::meshgen {

namespace {

struct GridBuilder {
  std::vector<Vec2> vertices;
  std::vector<std::array<int, 3>> cells;
  std::vector<int> regions;

  int add_vertex(const Vec2& p) {
    vertices.push_back(p);
    return static_cast<int>(vertices.size()) - 1;
  }

  // Finalize: drop unused vertices, tag 1-incidence edges via classify.
  Mesh finish(const std::function<int(const Vec2&, const Vec2&)>& classify) {
    std::vector<int> remap(vertices.size(), -1);
    std::vector<Vec2> vs;
    for (auto& c : cells)
      for (int& v : c) {
        if (remap[v] < 0) {
          remap[v] = static_cast<int>(vs.size());
          vs.push_back(vertices[v]);
        }
        v = remap[v];
      }
    // count incidences
    std::map<std::pair<int, int>, int> count;
    for (const auto& c : cells)
      for (int le = 0; le < 3; ++le) {
        int a = c[(le + 1) % 3], b = c[(le + 2) % 3];
        if (a > b) std::swap(a, b);
        ++count[{a, b}];
      }
    std::vector<std::array<int, 2>> bedges;
    std::vector<int> btags;
    for (const auto& [e, n] : count) {
      if (n != 1) continue;
      bedges.push_back({e.first, e.second});
      btags.push_back(classify(vs[e.first], vs[e.second]));
    }
    return make_mesh(std::move(vs), std::move(cells), std::move(regions), std::move(bedges),
                     std::move(btags));
  }
};

} // namespace

Mesh unit_square_two_cells() {
  std::vector<Vec2> vs = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  std::vector<std::array<int, 3>> cells = {{0, 1, 2}, {0, 2, 3}};
  std::vector<int> regions = {1, 1};
  std::vector<std::array<int, 2>> be = {{0, 1}, {1, 2}, {2, 3}, {3, 0}};
  std::vector<int> bt = {1, 1, 1, 1};
  return make_mesh(std::move(vs), std::move(cells), std::move(regions), std::move(be),
                   std::move(bt));
}

Mesh rectangle(const Vec2& lo, const Vec2& hi, int nx, int ny,
               const std::function<int(const Vec2&)>& region, bool alternate_diagonals) {
  GridBuilder g;
  auto vid = [&](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      g.add_vertex({lo.x() + (hi.x() - lo.x()) * i / nx, lo.y() + (hi.y() - lo.y()) * j / ny});
  auto push = [&](int a, int b, int c) {
    g.cells.push_back({a, b, c});
    Vec2 cen = (g.vertices[a] + g.vertices[b] + g.vertices[c]) / 3.0;
    g.regions.push_back(region ? region(cen) : 1);
  };
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      int v00 = vid(i, j), v10 = vid(i + 1, j), v11 = vid(i + 1, j + 1), v01 = vid(i, j + 1);
      if (!alternate_diagonals || (i + j) % 2 == 0) {
        push(v00, v10, v11);
        push(v00, v11, v01);
      } else {
        push(v00, v10, v01);
        push(v10, v11, v01);
      }
    }
  }
  const double tol = 1e-9 * (1.0 + (hi - lo).norm());
  return g.finish([&](const Vec2& a, const Vec2& b) {
    if (std::abs(a.y() - lo.y()) < tol && std::abs(b.y() - lo.y()) < tol) return 1;
    if (std::abs(a.x() - hi.x()) < tol && std::abs(b.x() - hi.x()) < tol) return 2;
    if (std::abs(a.y() - hi.y()) < tol && std::abs(b.y() - hi.y()) < tol) return 3;
    return 4;
  });
}

Mesh artery_proxy(int n_theta, int n_rad, const ArteryGeometry& geo) {
  const double outer_r = geo.outer_r;
  const Vec2 lumen_c = geo.lumen_c;
  const double lumen_r = geo.lumen_r;
  const double media_r = geo.media_r;

  GridBuilder g;
  auto vid = [&](int i, int j) { return i * n_theta + (j % n_theta); };
  for (int i = 0; i <= n_rad; ++i) {
    double t = double(i) / n_rad;
    for (int j = 0; j < n_theta; ++j) {
      double th = 2.0 * M_PI * j / n_theta;
      Vec2 inner = lumen_c + lumen_r * Vec2(std::cos(th), std::sin(th));
      Vec2 outer = outer_r * Vec2(std::cos(th), std::sin(th));
      g.add_vertex(inner + t * (outer - inner));
    }
  }
  auto classify_region = [&](const Vec2& c) {
    double dist = (c - lumen_c).norm() - lumen_r;
    double phi = std::atan2(c.y() - lumen_c.y(), c.x() - lumen_c.x()) - geo.cap_dir;
    while (phi > M_PI) phi -= 2 * M_PI;
    while (phi < -M_PI) phi += 2 * M_PI;
    if (dist < geo.cap_thickness && std::abs(phi) < geo.cap_angle) return 3;
    if (dist < geo.cap_thickness + geo.core_thickness && std::abs(phi) < geo.core_angle)
      return 2;
    if (c.norm() > media_r) return 4;
    return 1;
  };
  auto push = [&](int a, int b, int c) {
    g.cells.push_back({a, b, c});
    Vec2 cen = (g.vertices[a] + g.vertices[b] + g.vertices[c]) / 3.0;
    g.regions.push_back(classify_region(cen));
  };
  for (int i = 0; i < n_rad; ++i) {
    for (int j = 0; j < n_theta; ++j) {
      int v00 = vid(i, j), v10 = vid(i + 1, j), v11 = vid(i + 1, j + 1), v01 = vid(i, j + 1);
      if ((i + j) % 2 == 0) {
        push(v00, v10, v11);
        push(v00, v11, v01);
      } else {
        push(v00, v10, v01);
        push(v10, v11, v01);
      }
    }
  }
  return g.finish([&](const Vec2& a, const Vec2& b) {
    Vec2 mid = 0.5 * (a + b);
    if (mid.norm() > 0.5 * (outer_r + lumen_r + lumen_c.x() + 0.2)) {
      // outer circle: clamp the lower-left arc
      double th = std::atan2(mid.y(), mid.x());
      if (th > geo.clamp_from && th < geo.clamp_to) return 1;
      return 2;
    }
    return 2; // lumen: traction-free
  });
}

Mesh silicone_proxy(int nx, int ny) {
  const Vec2 lo(-62.0, -82.5), hi(0.0, 0.0);
  const double hole_r = 10.0;
  const std::array<Vec2, 5> holes = {Vec2(-47.5, -21.4), Vec2(-14.0, -23.0), Vec2(-31.5, -41.0),
                                     Vec2(-47.7, -59.1), Vec2(-14.5, -58.0)};
  const Vec2 cut_a = holes[0], cut_b = holes[2];
  const double dx = (hi.x() - lo.x()) / nx, dy = (hi.y() - lo.y()) / ny;
  const double slit_halfwidth = 0.55 * std::min(dx, dy);

  auto dist_seg = [&](const Vec2& p) {
    Vec2 d = cut_b - cut_a;
    double t = std::clamp((p - cut_a).dot(d) / d.squaredNorm(), 0.0, 1.0);
    return (p - (cut_a + t * d)).norm();
  };
  auto keep = [&](const Vec2& c) {
    for (const Vec2& h : holes)
      if ((c - h).norm() < hole_r) return false;
    if (dist_seg(c) < slit_halfwidth) return false;
    return true;
  };

  GridBuilder g;
  auto vid = [&](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      g.add_vertex({lo.x() + dx * i, lo.y() + dy * j});
  auto push = [&](int a, int b, int c) {
    Vec2 cen = (g.vertices[a] + g.vertices[b] + g.vertices[c]) / 3.0;
    if (!keep(cen)) return;
    g.cells.push_back({a, b, c});
    g.regions.push_back(1);
  };
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      int v00 = vid(i, j), v10 = vid(i + 1, j), v11 = vid(i + 1, j + 1), v01 = vid(i, j + 1);
      if ((i + j) % 2 == 0) {
        push(v00, v10, v11);
        push(v00, v11, v01);
      } else {
        push(v00, v10, v01);
        push(v10, v11, v01);
      }
    }
  }
  const double tol = 1e-9 * 100;
  return g.finish([&](const Vec2& a, const Vec2& b) {
    if (std::abs(a.y() - lo.y()) < tol && std::abs(b.y() - lo.y()) < tol) return 1;
    if (std::abs(a.y() - hi.y()) < tol && std::abs(b.y() - hi.y()) < tol) return 3;
    return 2;
  });
}

Mesh fsi_square(int n, double split) {
  return rectangle({0, 0}, {1, 1}, n, n,
                   [split](const Vec2& c) { return c.x() < split ? 2 : 1; });
}

} // namespace dwr::meshgen
