#include "problems.hpp"

#include <doctest.h>

#include <random>

using namespace dwr;
using namespace testprob;

namespace {

LinearMaterial uniform_material(double E, double nu) {
  LinearMaterial m;
  m.regions[1] = {E, nu};
  return m;
}

} // namespace

TEST_SUITE("elasticity") {

TEST_CASE("zero loads and zero activation give the zero solution") {
  auto mesh = std::make_shared<const Mesh>(meshgen::rectangle({0, 0}, {1, 1}, 4, 4));
  SpacePtr space = build_space(mesh, 1, 2, fixed_boundary({1}, 2));
  Field u = solve_linear(space, uniform_material(1.0, 0.3), nullptr, {});
  CHECK(u.coeffs.lpNorm<Eigen::Infinity>() <= 1e-14);
}

TEST_CASE("uniaxial plane-strain patch test reproduces the affine solution") {
  double E = 2.0, nu = 0.3, sigma0 = 0.7;
  LinearMaterial mat = uniform_material(E, nu);
  double mu = mat.mu(1), la = mat.lambda(1);
  // sigma_xx = sigma0, sigma_yy = 0 under plane strain
  double s = sigma0 / (2.0 * (mu + la));
  double eyy = -la * s / (2.0 * mu);
  double exx = s - eyy;
  auto exact = [&](const Vec2& x) {
    Eigen::VectorXd v(2);
    v << exx * x.x(), eyy * x.y();
    return v;
  };

  for (int degree : {1, 2}) {
    auto mesh = std::make_shared<const Mesh>(meshgen::rectangle({0, 0}, {1, 1}, 3, 3));
    DirichletSpec bc;
    bc.values[4] = exact; // left
    bc.values[1] = exact; // bottom
    SpacePtr space = build_space(mesh, degree, 2, bc);
    Loads loads;
    loads.traction[2] = [&](const Vec2&) { return Vec2(sigma0, 0.0); }; // right
    Field u = solve_linear(space, mat, nullptr, loads);
    for (long n = 0; n < space->n_nodes; ++n) {
      Eigen::VectorXd want = exact(space->node_pos[n]);
      REQUIRE(u.coeffs[space->dof(static_cast<int>(n), 0)] ==
              doctest::Approx(want[0]).epsilon(1e-10));
      REQUIRE(u.coeffs[space->dof(static_cast<int>(n), 1)] ==
              doctest::Approx(want[1]).epsilon(1e-10));
    }
  }
}

TEST_CASE("artery configuration is driven by the active pre-stress alone") {
  ArterySetup s = artery_setup();
  SpacePtr space = build_space(s.mesh, 1, 2, s.dirichlet);
  Field u = solve_linear(space, s.mat, &s.fibers, s.loads);
  CHECK(u.coeffs.lpNorm<Eigen::Infinity>() > 1e-4);
  ActiveFibers off = s.fibers;
  off.beta = 0;
  Field u0 = solve_linear(space, s.mat, &off, s.loads);
  CHECK(u0.coeffs.lpNorm<Eigen::Infinity>() <= 1e-14);
}

TEST_CASE("activation enters through the product beta*T only") {
  ArterySetup s = artery_setup();
  SpacePtr space = build_space(s.mesh, 1, 2, s.dirichlet);
  Field a = solve_linear(space, s.mat, &s.fibers, s.loads);
  ActiveFibers half = s.fibers;
  half.beta = 0.5;
  half.tension = 2.0 * s.fibers.tension;
  Field b = solve_linear(space, s.mat, &half, s.loads);
  CHECK((a.coeffs - b.coeffs).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("assembled bilinear form is symmetric") {
  ArterySetup s = artery_setup(std::make_shared<const Mesh>(meshgen::artery_proxy(23, 3)));
  SpacePtr space = build_space(s.mesh, 2, 2, s.dirichlet);
  SparseSystem sys = assemble_primal(*space, s.mat, &s.fibers, s.loads);
  std::mt19937 rng(3);
  std::normal_distribution<double> nd;
  double scale = 0;
  for (int k = 0; k < sys.A.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(sys.A, k); it; ++it)
      scale = std::max(scale, std::abs(it.value()));
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::VectorXd x(sys.A.rows()), y(sys.A.rows());
    for (long i = 0; i < x.size(); ++i) {
      x[i] = nd(rng);
      y[i] = nd(rng);
    }
    double axy = y.dot(sys.A * x), ayx = x.dot(sys.A * y);
    REQUIRE(std::abs(axy - ayx) <= 1e-12 * scale * x.norm() * y.norm());
  }
}

TEST_CASE("rigid-body modes carry no energy") {
  auto mesh = std::make_shared<const Mesh>(meshgen::rectangle({0, 0}, {2, 1}, 5, 3));
  SpacePtr space = build_space(mesh, 2, 2, {});
  Eigen::SparseMatrix<double> K =
      assemble_stiffness_unconstrained(*space, uniform_material(1.0, 0.25));
  auto energy = [&](const std::function<Vec2(const Vec2&)>& mode) {
    Eigen::VectorXd u(space->n_dofs());
    for (long n = 0; n < space->n_nodes; ++n) {
      Vec2 v = mode(space->node_pos[n]);
      u[space->dof(static_cast<int>(n), 0)] = v.x();
      u[space->dof(static_cast<int>(n), 1)] = v.y();
    }
    return u.dot(K * u) / u.squaredNorm();
  };
  CHECK(energy([](const Vec2&) { return Vec2(1, 0); }) <= 1e-10);
  CHECK(energy([](const Vec2&) { return Vec2(0, 1); }) <= 1e-10);
  CHECK(energy([](const Vec2& x) { return Vec2(-x.y(), x.x()); }) <= 1e-10);
}

TEST_CASE("sigma_active: algebraic limits") {
  ArterySetup s = artery_setup(std::make_shared<const Mesh>(meshgen::artery_proxy(23, 3)));
  SpacePtr space = build_space(s.mesh, 1, 2, s.dirichlet);
  Field u = solve_linear(space, s.mat, &s.fibers, s.loads);

  ActiveFibers off = s.fibers;
  off.beta = 0;
  LinearStress with = sigma_active(u, s.mat, &s.fibers);
  LinearStress without = sigma_active(u, s.mat, &off);
  for (int c = 0; c < s.mesh->n_cells(); ++c) {
    Vec2 xr(1.0 / 3, 1.0 / 3);
    Eigen::Matrix2d d = with.eval(c, xr) - without.eval(c, xr);
    if (s.mesh->region_tag[c] == 4) {
      Vec2 e = s.fibers.cell_direction(*s.mesh, c);
      Eigen::Matrix2d want = s.fibers.tension * (e * e.transpose());
      REQUIRE((d - want).norm() <= 1e-14);
    } else {
      REQUIRE(d.norm() == 0.0);
    }
  }

  Field zero(space);
  ActiveFibers horizontal;
  horizontal.region = 4;
  horizontal.beta = 1.0;
  horizontal.tension = 0.25;
  horizontal.direction = [](const Vec2&) { return Vec2(1, 0); };
  LinearStress sz = sigma_active(zero, s.mat, &horizontal);
  for (int c = 0; c < s.mesh->n_cells(); ++c) {
    Eigen::Matrix2d sig = sz.eval(c, {0.25, 0.25});
    if (s.mesh->region_tag[c] == 4) {
      REQUIRE(sig(0, 0) == doctest::Approx(0.25));
      REQUIRE(std::abs(sig(1, 1)) <= 1e-15);
    } else {
      REQUIRE(sig.norm() == 0.0);
    }
  }
}

TEST_CASE("sigma_active divergence matches central differences on P2 fields") {
  auto mesh = std::make_shared<const Mesh>(meshgen::rectangle({0, 0}, {1, 1}, 3, 3));
  LinearMaterial mat = uniform_material(1.7, 0.28);
  SpacePtr space = build_space(mesh, 2, 2, {});
  std::mt19937 rng(11);
  std::normal_distribution<double> nd;
  Field u(space);
  for (long i = 0; i < u.coeffs.size(); ++i) u.coeffs[i] = nd(rng);
  LinearStress stress = sigma_active(u, mat, nullptr);

  const double h = 1e-5;
  for (int c = 0; c < mesh->n_cells(); c += 3) {
    CellGeometry geo = cell_geometry(*mesh, c);
    Vec2 x = geo.x0 + geo.J * Vec2(0.3, 0.3);
    auto sig_at = [&](const Vec2& p) { return stress.eval(c, Vec2(geo.Jinv * (p - geo.x0))); };
    Vec2 div_fd(0, 0);
    for (int j = 0; j < 2; ++j) {
      Vec2 dp(0, 0);
      dp[j] = h;
      Eigen::Matrix2d d = (sig_at(x + dp) - sig_at(x - dp)) / (2 * h);
      div_fd[0] += d(0, j);
      div_fd[1] += d(1, j);
    }
    Vec2 div = stress.divergence(c, {0.3, 0.3});
    REQUIRE((div - div_fd).norm() <= 1e-8 * (1.0 + div.norm()));
  }
}

TEST_CASE("dual problem: zero goal and body-force equivalence") {
  auto mesh = std::make_shared<const Mesh>(meshgen::rectangle({0, 0}, {1, 1}, 4, 4));
  LinearMaterial mat = uniform_material(1.0, 0.3);
  DirichletSpec bc = fixed_boundary({1}, 2);

  SpacePtr space = build_space(mesh, 2, 2, bc);
  Goal zero_goal = Goal::subdomain(1, {0.0, 0.0});
  SparseSystem d0 = assemble_dual(*space, mat, nullptr, zero_goal);
  CHECK(solve(d0).lpNorm<Eigen::Infinity>() <= 1e-14);

  // J(v) = int (v_x + v_y): self-adjointness makes the dual equal the primal
  // solution with unit body force (1,1)
  Goal goal = Goal::subdomain(1, {1.0, 1.0});
  SparseSystem dual = assemble_dual(*space, mat, nullptr, goal);
  Eigen::VectorXd z = solve(dual);
  Loads unit;
  unit.body = [](const Vec2&) { return Vec2(1, 1); };
  SparseSystem primal = assemble_primal(*space, mat, nullptr, unit);
  Eigen::VectorXd u = solve(primal);
  CHECK((z - u).lpNorm<Eigen::Infinity>() <= 1e-10 * (1.0 + u.lpNorm<Eigen::Infinity>()));
}

TEST_CASE("artery dual concentrates near the region of interest") {
  ArterySetup s = artery_setup();
  SpacePtr space = build_space(s.mesh, 1, 2, s.dirichlet);
  Field z = solve_dual_enriched(s, space, s.goal, 2);
  double inside = 0, outside = 0;
  long n_in = 0, n_out = 0;
  for (int c = 0; c < s.mesh->n_cells(); ++c) {
    Eigen::VectorXd zc = eval_value(z, c, {1.0 / 3, 1.0 / 3});
    if (s.mesh->region_tag[c] == 3) {
      inside += zc.norm();
      ++n_in;
    } else {
      outside += zc.norm();
      ++n_out;
    }
  }
  CHECK(inside / n_in > 3.0 * (outside / n_out));
}

TEST_CASE("Galerkin orthogonality of the solved primal") {
  ArterySetup s = artery_setup(std::make_shared<const Mesh>(meshgen::artery_proxy(23, 5)));
  SpacePtr space = build_space(s.mesh, 1, 2, s.dirichlet);
  SparseSystem sys = assemble_primal(*space, s.mat, &s.fibers, s.loads);
  Field u(space);
  u.coeffs = space->full_from_free(solve(sys));
  double lnorm = sys.b.norm();

  std::mt19937 rng(17);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 20; ++trial) {
    Field v(space);
    for (int fd : space->free_dofs) v.coeffs[fd] = nd(rng);
    double r = residual_functional(u, s.mat, &s.fibers, s.loads, v);
    REQUIRE(std::abs(r) <= 1e-9 * lnorm * (1.0 + v.coeffs.norm()));
  }
}

TEST_CASE("linear error representation against a nested fine reference") {
  auto mesh = std::make_shared<const Mesh>(meshgen::rectangle({0, 0}, {1, 1}, 4, 4));
  LinearMaterial mat = uniform_material(1.0, 0.3);
  DirichletSpec bc = fixed_boundary({1, 3}, 2);
  Loads loads;
  loads.body = [](const Vec2& x) { return Vec2(x.y() * (1 - x.y()), x.x()); };
  Goal goal = Goal::subdomain(1, {1.0, -0.5});

  SpacePtr coarse = build_space(mesh, 1, 2, bc);
  Field u_h = solve_linear(coarse, mat, nullptr, loads);

  auto fmesh = std::make_shared<const Mesh>(uniform_refine(uniform_refine(*mesh)));
  SpacePtr fine = build_space(fmesh, 1, 2, fixed_boundary({1, 3}, 2));
  Field u_ref = solve_linear(fine, mat, nullptr, loads);
  SpacePtr fine_dual = homogeneous_space_like(*fine, 1);
  SparseSystem dual = assemble_dual(*fine_dual, mat, nullptr, goal);
  Field z_ref(fine_dual);
  z_ref.coeffs = fine_dual->full_from_free(solve(dual));

  double err = evaluate(goal, u_ref) - evaluate(goal, u_h);
  auto mid = std::make_shared<const Mesh>(uniform_refine(*mesh));
  Field u_mid = transfer(u_h, build_space(mid, 1, 2, {}));
  Field u_on_fine = transfer(u_mid, build_space(fmesh, 1, 2, {}));
  double r = residual_functional(u_on_fine, mat, nullptr, loads, z_ref);
  REQUIRE(std::abs(err) > 1e-8);
  CHECK(std::abs(err - r) <= 0.05 * std::abs(err));
}

} // TEST_SUITE
