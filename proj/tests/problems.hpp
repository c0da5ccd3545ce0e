#pragma once

// Shared test fixtures: the vessel-wall and sheet benchmarks plus small
// helpers used across suites.

#include "dwr/estimator.hpp"
#include "dwr/meshgen.hpp"

#include <memory>

namespace testprob {

using namespace dwr;

struct ArterySetup {
  std::shared_ptr<const Mesh> mesh;
  LinearMaterial mat;
  ActiveFibers fibers;
  Loads loads;
  Goal goal;
  DirichletSpec dirichlet;
  int degree = 1;
};

inline ArterySetup artery_setup(std::shared_ptr<const Mesh> mesh = nullptr) {
  ArterySetup s;
  s.mesh = mesh ? mesh : std::make_shared<const Mesh>(meshgen::artery_proxy());
  s.mat.regions[1] = {0.6, 0.4};
  s.mat.regions[2] = {0.011, 0.4};
  s.mat.regions[3] = {0.6, 0.4};
  s.mat.regions[4] = {0.6, 0.4};
  s.fibers.region = 4;
  s.fibers.beta = 1.0;
  s.fibers.tension = 0.01;
  s.fibers.direction = [](const Vec2& x) { return Vec2(-x.y(), x.x()); };
  s.goal = Goal::subdomain(3, {1.0, 1.0});
  s.dirichlet = fixed_boundary({1}, 2);
  return s;
}

inline Field solve_linear(SpacePtr space, const LinearMaterial& mat, const ActiveFibers* fibers,
                          const Loads& loads) {
  SparseSystem sys = assemble_primal(*space, mat, fibers, loads);
  Field u(space);
  u.coeffs = space->full_from_free(solve(sys));
  return u;
}

inline Field solve_dual_enriched(const ArterySetup& s, SpacePtr primal_space, const Goal& goal,
                                 int enrich_to) {
  SpacePtr enriched = homogeneous_space_like(*primal_space, enrich_to);
  SparseSystem dual = assemble_dual(*enriched, s.mat, &s.fibers, goal);
  Field z(enriched);
  z.coeffs = enriched->full_from_free(solve(dual));
  return z;
}

} // namespace testprob
