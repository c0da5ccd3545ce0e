#include "dwr/mesh.hpp"
#include "dwr/meshgen.hpp"

#include <doctest.h>

#include <fstream>
#include <random>
#include <set>
#include <sstream>

using namespace dwr;

namespace {

// Exhaustive minimal-prefix oracle for the marking rule.
std::vector<int> dorfler_oracle(const std::vector<double>& eta, double alpha) {
  std::vector<int> order(eta.size());
  for (std::size_t i = 0; i < eta.size(); ++i) order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return eta[a] > eta[b]; });
  double total = 0;
  for (double v : eta) total += v;
  for (std::size_t m = 0; m <= order.size(); ++m) {
    double s = 0;
    for (std::size_t i = 0; i < m; ++i) s += eta[order[i]];
    if (s >= alpha * total) return {order.begin(), order.begin() + m};
  }
  return order;
}

std::string write_temp_mesh(const std::string& body) {
  std::string path = "/tmp/dwr_mesh_test.txt";
  std::ofstream out(path);
  out << body;
  return path;
}

} // namespace

TEST_SUITE("mesh") {

TEST_CASE("two-cell unit square loads from text") {
  std::string path = write_temp_mesh(
      "4 2 4\n"
      "0 0\n1 0\n1 1\n0 1\n"
      "0 1 2 1\n0 2 3 1\n"
      "0 1 1\n1 2 1\n2 3 1\n3 0 1\n");
  Mesh m = load_mesh(path);
  CHECK(m.n_vertices() == 4);
  CHECK(m.n_cells() == 2);
  CHECK(m.total_area() == doctest::Approx(1.0));
  check_conforming(m);
}

TEST_CASE("clockwise cell is reoriented") {
  std::string path = write_temp_mesh(
      "3 1 3\n"
      "0 0\n1 0\n0 1\n"
      "0 2 1 7\n"
      "0 1 1\n1 2 1\n2 0 1\n");
  Mesh m = load_mesh(path);
  CHECK(m.cell_area(0) > 0);
  CHECK(m.region_tag[0] == 7);
}

TEST_CASE("parse and validation failures are distinct") {
  CHECK_THROWS_WITH_AS(load_mesh("/tmp/does_not_exist_7731.txt"),
                       doctest::Contains("cannot open"), MeshError);
  std::string garbled = write_temp_mesh("4 2\n");
  CHECK_THROWS_WITH_AS(load_mesh(garbled), doctest::Contains("parse failure"), MeshError);
  // untagged boundary edge: omit one of the four edges
  std::string untagged = write_temp_mesh(
      "4 2 3\n"
      "0 0\n1 0\n1 1\n0 1\n"
      "0 1 2 1\n0 2 3 1\n"
      "0 1 1\n1 2 1\n2 3 1\n");
  CHECK_THROWS_WITH_AS(load_mesh(untagged), doctest::Contains("untagged boundary edge"),
                       MeshError);
  // zero-area cell
  std::string degenerate = write_temp_mesh(
      "3 1 3\n"
      "0 0\n1 0\n2 0\n"
      "0 1 2 1\n"
      "0 1 1\n1 2 1\n2 0 1\n");
  CHECK_THROWS_WITH_AS(load_mesh(degenerate), doctest::Contains("inverted cell"), MeshError);
}

TEST_CASE("save/load round trip") {
  Mesh m = meshgen::artery_proxy(23, 3);
  save_mesh(m, "/tmp/dwr_roundtrip.txt");
  Mesh m2 = load_mesh("/tmp/dwr_roundtrip.txt");
  CHECK(m2.n_vertices() == m.n_vertices());
  CHECK(m2.n_cells() == m.n_cells());
  CHECK(m2.boundary_edges.size() == m.boundary_edges.size());
  CHECK(m2.total_area() == doctest::Approx(m.total_area()));
}

TEST_CASE("artery proxy has the documented cell count") {
  Mesh m = meshgen::artery_proxy();
  CHECK(m.n_cells() == 1242);
  check_conforming(m);
  std::set<int> tags(m.region_tag.begin(), m.region_tag.end());
  CHECK(tags.count(1));
  CHECK(tags.count(2));
  CHECK(tags.count(3));
  CHECK(tags.count(4));
}

TEST_CASE("dorfler_mark selects the documented prefixes") {
  MarkedSet m = dorfler_mark({4, 3, 2, 1}, 0.5);
  CHECK(m.cell_ids == std::vector<int>{0, 1});
  m = dorfler_mark({1, 1, 1}, 1.0);
  CHECK(m.cell_ids.size() == 3);
  m = dorfler_mark({5, 0, 0}, 0.3);
  CHECK(m.cell_ids == std::vector<int>{0});
}

TEST_CASE("dorfler_mark input validation") {
  CHECK_THROWS_AS(dorfler_mark({1, -2, 3}, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(dorfler_mark({1, 2}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(dorfler_mark({1, 2}, 1.5), std::invalid_argument);
}

TEST_CASE("dorfler_mark equals the exhaustive oracle on 200 random instances") {
  std::mt19937 rng(42);
  std::uniform_int_distribution<int> nd(1, 50);
  std::uniform_real_distribution<double> ed(0.0, 1.0);
  std::uniform_real_distribution<double> ad(0.05, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    int n = nd(rng);
    std::vector<double> eta(n);
    for (double& v : eta) v = ed(rng);
    if (trial % 7 == 0) eta[static_cast<std::size_t>(rng() % n)] = 0.0; // exercise ties at zero
    double alpha = ad(rng);
    MarkedSet got = dorfler_mark(eta, alpha);
    std::vector<int> want = dorfler_oracle(eta, alpha);
    REQUIRE(got.cell_ids == want);
  }
}

TEST_CASE("refine: marked empty returns the identical mesh") {
  Mesh m = meshgen::unit_square_two_cells();
  Mesh r = refine(m, {});
  CHECK(r.n_cells() == m.n_cells());
  CHECK(r.n_vertices() == m.n_vertices());
  CHECK(r.cells == m.cells);
}

TEST_CASE("refine: both cells of the square bisect into 4") {
  Mesh m = meshgen::unit_square_two_cells();
  Mesh r = refine(m, {{0, 1}});
  CHECK(r.n_cells() == 4);
  check_conforming(r);
  CHECK(r.total_area() == doctest::Approx(1.0));
}

TEST_CASE("refine: single mark stays conforming") {
  Mesh m = meshgen::unit_square_two_cells();
  Mesh r = refine(m, {{0}});
  CHECK(r.n_cells() >= 3);
  check_conforming(r);
}

TEST_CASE("uniform refine quadruples cells and preserves tags and area") {
  Mesh m = meshgen::artery_proxy();
  Mesh r = uniform_refine(m);
  CHECK(r.n_cells() == 4 * m.n_cells());
  check_conforming(r);
  CHECK(r.total_area() == doctest::Approx(m.total_area()));
  for (int c = 0; c < r.n_cells(); ++c) {
    REQUIRE(r.parent[c] >= 0);
    REQUIRE(r.region_tag[c] == m.region_tag[r.parent[c]]);
  }
  Mesh rr = uniform_refine(r);
  CHECK(rr.n_cells() == 4 * r.n_cells()); // 1242 -> 4968 -> 19872
}

TEST_CASE("children partition their parents") {
  Mesh m = meshgen::unit_square_two_cells();
  std::mt19937 rng(7);
  Mesh cur = m;
  for (int round = 0; round < 4; ++round) {
    std::vector<int> marks;
    for (int c = 0; c < cur.n_cells(); ++c)
      if (rng() % 3 == 0) marks.push_back(c);
    if (marks.empty()) marks.push_back(0);
    Mesh next = refine(cur, {marks});
    // area of children grouped by ancestor equals the ancestor's area
    std::vector<double> acc(cur.n_cells(), 0.0);
    for (int c = 0; c < next.n_cells(); ++c) acc[next.parent[c]] += next.cell_area(c);
    for (int c = 0; c < cur.n_cells(); ++c)
      REQUIRE(acc[c] == doctest::Approx(cur.cell_area(c)).epsilon(1e-12));
    cur = next;
  }
}

TEST_CASE("ten random mark/refine rounds keep conformity and the angle bound") {
  Mesh m = meshgen::artery_proxy(23, 3);
  double angle0 = m.min_angle();
  std::mt19937 rng(1234);
  Mesh cur = m;
  for (int round = 0; round < 10; ++round) {
    std::vector<double> eta(cur.n_cells());
    std::uniform_real_distribution<double> ed(0.0, 1.0);
    for (double& v : eta) v = ed(rng);
    MarkedSet marked = dorfler_mark(eta, 0.3);
    cur = refine(cur, marked);
    check_conforming(cur);
    REQUIRE(cur.min_angle() >= 0.5 * angle0 - 1e-12);
  }
  CHECK(cur.n_cells() > m.n_cells());
}

TEST_CASE("marked cells are bisected at least once") {
  Mesh m = meshgen::fsi_square(4);
  MarkedSet marked{{0, 5, 9}};
  Mesh r = refine(m, marked);
  // a marked cell may not survive: no output cell may claim it unsplit
  std::vector<int> child_count(m.n_cells(), 0);
  for (int c = 0; c < r.n_cells(); ++c) child_count[r.parent[c]]++;
  for (int c : marked.cell_ids) REQUIRE(child_count[c] >= 2);
}

} // TEST_SUITE
