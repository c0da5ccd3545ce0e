#include "dwr/driver.hpp"

#include "dwr/meshgen.hpp"
#include "dwr/vtk.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace dwr {

AdaptConfig parse_adapt_config(const Config& cfg) {
  AdaptConfig a;
  a.raw = cfg;
  a.alpha = cfg.get_double_or("adapt", "alpha", 0.5);
  if (!(a.alpha > 0 && a.alpha <= 1))
    throw std::runtime_error("config: [adapt] alpha must be in (0,1]");
  a.epsilon = cfg.get_double_or("adapt", "epsilon", 1e-8);
  if (!(a.epsilon > 0)) throw std::runtime_error("config: [adapt] epsilon must be positive");
  a.max_iterations = cfg.get_int_or("adapt", "max_iterations", 10);
  std::string dual = cfg.get_or("adapt", "dual", "enriched");
  if (dual == "enriched") a.dual_strategy = AdaptConfig::DualStrategy::EnrichedSolve;
  else if (dual == "extrapolate") a.dual_strategy = AdaptConfig::DualStrategy::Extrapolate;
  else throw std::runtime_error("config: [adapt] dual must be enriched or extrapolate");
  a.compute_reference = cfg.get_bool_or("adapt", "reference", false);
  return a;
}

Mesh load_problem_mesh(const AdaptConfig& cfg) {
  std::string spec = cfg.raw.get("problem", "mesh");
  if (spec.rfind("builtin:", 0) == 0) {
    std::string name = spec.substr(8);
    if (name == "square2") return meshgen::unit_square_two_cells();
    if (name == "artery") return meshgen::artery_proxy();
    if (name == "silicone") return meshgen::silicone_proxy();
    if (name.rfind("fsi_square:", 0) == 0)
      return meshgen::fsi_square(std::stoi(name.substr(11)));
    throw std::runtime_error("unknown builtin mesh: " + name);
  }
  std::filesystem::path p(spec);
  if (p.is_relative() && !cfg.base_dir.empty()) p = std::filesystem::path(cfg.base_dir) / p;
  return load_mesh(p.string());
}

namespace {

struct StepOutput {
  double J = 0;
  double eta_global = 0;
  Eigen::VectorXd eta_local, eta_signed;
  long dofs = 0;
  std::shared_ptr<Field> u_out, zhat_out;
};

class ProblemDriver {
public:
  virtual ~ProblemDriver() = default;
  virtual StepOutput step(std::shared_ptr<const Mesh> mesh,
                          AdaptConfig::DualStrategy strategy) = 0;
  virtual double reference_J(std::shared_ptr<const Mesh> final_mesh) = 0;
};

DirichletSpec parse_dirichlet(const Config& cfg, int components) {
  DirichletSpec spec;
  for (const std::string& key : cfg.keys("dirichlet")) {
    if (key.rfind("tag.", 0) != 0) continue;
    int tag = std::stoi(key.substr(4));
    Eigen::Vector2d v = cfg.get_vec2("dirichlet", key);
    spec.values[tag] = [v, components](const Vec2&) {
      Eigen::VectorXd out(components);
      for (int c = 0; c < components; ++c) out[c] = v[c];
      return out;
    };
  }
  return spec;
}

Loads parse_loads(const Config& cfg) {
  Loads loads;
  if (cfg.has("loads", "body")) {
    Eigen::Vector2d b = cfg.get_vec2("loads", "body");
    loads.body = [b](const Vec2&) { return Vec2(b); };
  }
  for (const std::string& key : cfg.keys("loads")) {
    if (key.rfind("traction.", 0) != 0) continue;
    int tag = std::stoi(key.substr(9));
    Eigen::Vector2d t = cfg.get_vec2("loads", key);
    loads.traction[tag] = [t](const Vec2&) { return Vec2(t); };
  }
  return loads;
}

Goal parse_goal(const Config& cfg, const std::string& section) {
  std::string kind = cfg.get(section, "kind");
  Goal g;
  if (kind == "subdomain_integral") {
    g = Goal::subdomain(cfg.get_int(section, "region"), cfg.get_vec2(section, "weights"));
  } else if (kind == "boundary_flux") {
    g = Goal::boundary_flux(cfg.get_int(section, "tag"), cfg.get_double_or(section, "scale", 1.0));
    if (cfg.has(section, "direction")) {
      g.flux_along_normal = false;
      g.flux_direction = cfg.get_vec2(section, "direction");
    }
  } else if (kind == "point_value") {
    Eigen::Vector2d p = cfg.get_vec2(section, "point");
    g = Goal::point_value(p, cfg.get_int_or(section, "component", 0));
  } else if (kind == "combined") {
    int count = cfg.get_int(section, "count");
    std::vector<Goal> parts;
    std::vector<double> omegas;
    for (int i = 1; i <= count; ++i) {
      std::string sub = section + "." + std::to_string(i);
      parts.push_back(parse_goal(cfg, sub));
      omegas.push_back(cfg.get_double_or(sub, "omega", 1.0));
    }
    g = Goal::combined(std::move(parts), std::move(omegas));
  } else {
    throw std::runtime_error("config: unknown goal kind " + kind);
  }
  g.scale = cfg.get_double_or(section, "scale", g.scale);
  return g;
}

std::function<Vec2(const Vec2&)> parse_fiber_direction(const Config& cfg) {
  std::string kind = cfg.get_or("fibers", "direction", "circumferential");
  if (kind == "circumferential") {
    Eigen::Vector2d c = cfg.has("fibers", "center") ? cfg.get_vec2("fibers", "center")
                                                    : Eigen::Vector2d(0, 0);
    return [c](const Vec2& x) { return Vec2(-(x.y() - c.y()), x.x() - c.x()); };
  }
  if (kind == "constant") {
    Eigen::Vector2d d = cfg.get_vec2("fibers", "vector");
    return [d](const Vec2&) { return Vec2(d); };
  }
  throw std::runtime_error("config: unknown fiber direction " + kind);
}

// ---------------------------------------------------------------------------

class LinearElasticityDriver : public ProblemDriver {
public:
  explicit LinearElasticityDriver(const Config& cfg) : cfg_(cfg) {
    degree_ = cfg.get_int_or("problem", "degree", 1);
    for (const std::string& key : cfg.keys("material")) {
      // region.<tag>.E / region.<tag>.nu
      if (key.rfind("region.", 0) != 0) continue;
      auto rest = key.substr(7);
      auto dot = rest.find('.');
      int tag = std::stoi(rest.substr(0, dot));
      std::string what = rest.substr(dot + 1);
      if (what == "E") mat_.regions[tag].E = cfg.get_double("material", key);
      else if (what == "nu") mat_.regions[tag].nu = cfg.get_double("material", key);
      else throw std::runtime_error("config: unknown material key " + key);
    }
    if (cfg.has("fibers", "region")) {
      fibers_ = ActiveFibers{};
      fibers_->region = cfg.get_int("fibers", "region");
      fibers_->beta = cfg.get_double_or("fibers", "beta", 1.0);
      fibers_->tension = cfg.get_double("fibers", "T");
      fibers_->direction = parse_fiber_direction(cfg);
    }
    loads_ = parse_loads(cfg);
    goal_ = parse_goal(cfg, "goal");
    dirichlet_ = parse_dirichlet(cfg, 2);
  }

  StepOutput step(std::shared_ptr<const Mesh> mesh, AdaptConfig::DualStrategy strategy) override {
    SpacePtr space = build_space(mesh, degree_, 2, dirichlet_);
    SparseSystem sys = assemble_primal(*space, mat_, fibers() , loads_);
    Field u(space);
    u.coeffs = space->full_from_free(solve(sys));

    GoalContext ctx;
    ctx.lin_mat = &mat_;
    ctx.fibers = fibers();

    Goal goal = goal_;
    if (goal.kind == Goal::Kind::Combined) resolve_combined(goal, u, space, strategy, ctx);

    // dual on the enriched space
    SpacePtr enriched = homogeneous_space_like(*space, degree_ + 1);
    Field z_hat(enriched);
    if (strategy == AdaptConfig::DualStrategy::EnrichedSolve) {
      SparseSystem dual = assemble_dual(*enriched, mat_, fibers(), goal);
      z_hat.coeffs = enriched->full_from_free(solve(dual));
    } else {
      SpacePtr coarse_dual = homogeneous_space_like(*space, degree_);
      SparseSystem dual = assemble_dual(*coarse_dual, mat_, fibers(), goal);
      Field z(coarse_dual);
      z.coeffs = coarse_dual->full_from_free(solve(dual));
      z_hat = extrapolate(z, enriched);
    }

    StepOutput out;
    out.J = evaluate(goal, u, ctx);
    out.eta_global = std::abs(residual_functional(u, mat_, fibers(), loads_, z_hat));
    out.eta_local = local_estimators(u, z_hat, mat_, fibers(), loads_, &out.eta_signed);
    out.dofs = space->n_dofs();
    out.u_out = std::make_shared<Field>(std::move(u));
    out.zhat_out = std::make_shared<Field>(std::move(z_hat));
    return out;
  }

  double reference_J(std::shared_ptr<const Mesh> final_mesh) override {
    auto m1 = std::make_shared<const Mesh>(uniform_refine(*final_mesh));
    auto m2 = std::make_shared<const Mesh>(uniform_refine(*m1));
    SpacePtr space = build_space(m2, degree_, 2, dirichlet_);
    SparseSystem sys = assemble_primal(*space, mat_, fibers(), loads_);
    Field u(space);
    u.coeffs = space->full_from_free(solve(sys));
    GoalContext ctx;
    ctx.lin_mat = &mat_;
    ctx.fibers = fibers();
    Goal goal = goal_;
    if (goal.kind == Goal::Kind::Combined) {
      // reuse the last resolved weights for the reference evaluation
      goal.resolved_w = last_resolved_;
      if (goal.resolved_w.empty())
        throw std::runtime_error("combined goal: reference requested before any adaptive step");
    }
    return evaluate(goal, u, ctx);
  }

private:
  const ActiveFibers* fibers() const { return fibers_ ? &*fibers_ : nullptr; }

  void resolve_combined(Goal& goal, const Field& u, const SpacePtr& space,
                        AdaptConfig::DualStrategy strategy, const GoalContext& ctx) {
    const std::vector<Goal>& parts = goal.parts;
    const std::vector<double>& omegas = goal.omegas;
    Field u2;
    if (strategy == AdaptConfig::DualStrategy::EnrichedSolve) {
      SpacePtr enriched = build_space(space->mesh, degree_ + 1, 2, dirichlet_);
      SparseSystem sys = assemble_primal(*enriched, mat_, fibers(), loads_);
      u2 = Field(enriched);
      u2.coeffs = enriched->full_from_free(solve(sys));
    } else {
      SpacePtr enriched = build_space(space->mesh, degree_ + 1, 2, dirichlet_);
      u2 = extrapolate(u, enriched);
    }
    goal.resolved_w = resolve_signs(parts, omegas, u, u2, ctx, ctx, &std::cerr);
    last_resolved_ = goal.resolved_w;
  }

  Config cfg_;
  int degree_ = 1;
  LinearMaterial mat_;
  std::optional<ActiveFibers> fibers_;
  Loads loads_;
  Goal goal_;
  DirichletSpec dirichlet_;
  std::vector<double> last_resolved_;
};

// ---------------------------------------------------------------------------

class HyperelasticDriver : public ProblemDriver {
public:
  explicit HyperelasticDriver(const Config& cfg) : cfg_(cfg) {
    std::string law = cfg.get("material", "law");
    if (law == "st_venant_kirchhoff") {
      mat_.law = HyperMaterial::Law::StVenantKirchhoff;
      mat_.mu = cfg.get_double("material", "mu");
      mat_.lambda = cfg.get_double("material", "lambda");
    } else if (law == "mooney") {
      mat_.law = HyperMaterial::Law::Mooney;
      mat_.C10 = cfg.get_double("material", "C10");
      mat_.C01 = cfg.get_double("material", "C01");
    } else if (law == "gent") {
      mat_.law = HyperMaterial::Law::Gent;
      mat_.E = cfg.get_double("material", "E");
      mat_.Jm = cfg.get_double("material", "Jm");
    } else if (law == "haines_wilson") {
      mat_.law = HyperMaterial::Law::HainesWilson;
      mat_.C10 = cfg.get_double("material", "C10");
      mat_.C01 = cfg.get_double("material", "C01");
      mat_.C20 = cfg.get_double("material", "C20");
      mat_.C02 = cfg.get_double("material", "C02");
      mat_.C30 = cfg.get_double("material", "C30");
      mat_.C11 = cfg.get_double("material", "C11");
    } else {
      throw std::runtime_error("config: unknown hyperelastic law " + law);
    }
    std::string reduction = cfg.get_or("problem", "reduction", "plane_strain");
    if (reduction == "membrane") mat_.plane_stress = true;
    else if (reduction != "plane_strain")
      throw std::runtime_error("config: reduction must be plane_strain or membrane");
    mat_.incompressible = cfg.get_bool_or("problem", "incompressible", false);
    if (mat_.incompressible && mat_.plane_stress)
      throw std::runtime_error("config: membrane reduction is already incompressible");
    if (cfg.has("fibers", "beta")) {
      HyperMaterial::Active act;
      act.beta = cfg.get_double("fibers", "beta");
      act.tension = cfg.get_double("fibers", "T");
      act.f0 = cfg.get_vec2("fibers", "vector").normalized();
      mat_.active = act;
    }
    degree_ = cfg.get_int_or("problem", "degree", 2);
    loads_ = parse_loads(cfg);
    goal_ = parse_goal(cfg, "goal");
    dirichlet_ = parse_dirichlet(cfg, 2);
    newton_.abs_tol = cfg.get_double_or("newton", "abs_tol", 1e-9);
    newton_.rel_tol = cfg.get_double_or("newton", "rel_tol", 1e-12);
    newton_.max_iter = cfg.get_int_or("newton", "max_iter", 30);
    newton_.load_steps = cfg.get_int_or("newton", "load_steps", 20);
    newton_.backtracking = cfg.get_int_or("newton", "backtracking", 8);
  }

  StepOutput step(std::shared_ptr<const Mesh> mesh, AdaptConfig::DualStrategy strategy) override {
    HyperProblem prob = make_problem(mesh);
    HyperSolution sol = solve_with_warm_start(prob);

    GoalContext ctx;
    ctx.hyper_mat = &mat_;
    ctx.pressure = sol.has_pressure ? &sol.p : nullptr;

    SpacePtr dual_u, dual_p;
    Field z_hat, w_hat;
    if (strategy == AdaptConfig::DualStrategy::EnrichedSolve) {
      dual_u = homogeneous_space_like(*prob.uspace, degree_ + 1);
      dual_p = mat_.incompressible
                   ? homogeneous_space_like(*prob.pspace, prob.pspace->degree + 1)
                   : nullptr;
      HyperAdjoint adj = adjoint_solve(prob, sol.u, sol.has_pressure ? &sol.p : nullptr, goal_,
                                       dual_u, dual_p);
      z_hat = std::move(adj.z);
      if (adj.has_pressure) w_hat = std::move(adj.w);
    } else {
      SpacePtr du = homogeneous_space_like(*prob.uspace, degree_);
      SpacePtr dp = mat_.incompressible
                        ? homogeneous_space_like(*prob.pspace, prob.pspace->degree)
                        : nullptr;
      HyperAdjoint adj =
          adjoint_solve(prob, sol.u, sol.has_pressure ? &sol.p : nullptr, goal_, du, dp);
      dual_u = homogeneous_space_like(*prob.uspace, degree_ + 1);
      z_hat = extrapolate(adj.z, dual_u);
      if (adj.has_pressure) {
        dual_p = homogeneous_space_like(*prob.pspace, prob.pspace->degree + 1);
        w_hat = extrapolate(adj.w, dual_p);
      }
    }

    StepOutput out;
    out.J = evaluate(goal_, sol.u, ctx);
    Field wz = dwr_weight(z_hat, prob.uspace);
    std::optional<Field> wq;
    if (mat_.incompressible) wq = dwr_weight(w_hat, prob.pspace);
    out.eta_global = std::abs(residual_functional(prob, sol.u, sol.has_pressure ? &sol.p : nullptr,
                                                  wz, wq ? &*wq : nullptr));
    out.eta_local =
        local_estimators(prob, sol.u, sol.has_pressure ? &sol.p : nullptr, z_hat,
                         mat_.incompressible ? &w_hat : nullptr, &out.eta_signed);
    out.dofs = prob.uspace->n_dofs() + (mat_.incompressible ? prob.pspace->n_dofs() : 0);
    out.u_out = std::make_shared<Field>(sol.u);
    out.zhat_out = std::make_shared<Field>(z_hat);
    last_ = std::make_shared<HyperSolution>(std::move(sol));
    return out;
  }

  double reference_J(std::shared_ptr<const Mesh> final_mesh) override {
    auto m1 = std::make_shared<const Mesh>(uniform_refine(*final_mesh));
    auto m2 = std::make_shared<const Mesh>(uniform_refine(*m1));
    HyperProblem p1 = make_problem(m1), p2 = make_problem(m2);
    // push the last solution through the two nested meshes as initial guess
    HyperSolution ref;
    if (last_) {
      Field u1 = transfer(last_->u, p1.uspace);
      Field u2 = transfer(u1, p2.uspace);
      Field pw1, pw2;
      if (last_->has_pressure) {
        pw1 = transfer(last_->p, p1.pspace);
        pw2 = transfer(pw1, p2.pspace);
      }
      NewtonConfig warm = newton_;
      warm.load_steps = 1;
      try {
        ref = newton_solve(p2, warm, &u2, last_->has_pressure ? &pw2 : nullptr);
      } catch (const NewtonError&) {
        ref = newton_solve(p2, newton_);
      }
    } else {
      ref = newton_solve(p2, newton_);
    }
    GoalContext ctx;
    ctx.hyper_mat = &mat_;
    ctx.pressure = ref.has_pressure ? &ref.p : nullptr;
    return evaluate(goal_, ref.u, ctx);
  }

private:
  HyperProblem make_problem(std::shared_ptr<const Mesh> mesh) const {
    HyperProblem prob;
    prob.uspace = build_space(mesh, degree_, 2, dirichlet_);
    if (mat_.incompressible) prob.pspace = build_space(mesh, degree_ - 1, 1, {});
    prob.mat = mat_;
    prob.loads = loads_;
    return prob;
  }

  HyperSolution solve_with_warm_start(const HyperProblem& prob) {
    if (last_) {
      Field u0 = transfer(last_->u, prob.uspace);
      Field p0;
      if (last_->has_pressure) p0 = transfer(last_->p, prob.pspace);
      NewtonConfig warm = newton_;
      warm.load_steps = 1;
      try {
        return newton_solve(prob, warm, &u0, last_->has_pressure ? &p0 : nullptr);
      } catch (const NewtonError&) {
        // fall through to the full ramp
      }
    }
    return newton_solve(prob, newton_);
  }

  Config cfg_;
  HyperMaterial mat_;
  int degree_ = 2;
  Loads loads_;
  Goal goal_;
  DirichletSpec dirichlet_;
  NewtonConfig newton_;
  std::shared_ptr<HyperSolution> last_;
};

// ---------------------------------------------------------------------------

class FsiToyDriver : public ProblemDriver {
public:
  explicit FsiToyDriver(const Config& cfg) : cfg_(cfg) {
    degree_ = cfg.get_int_or("problem", "degree", 1);
    fluid_ = cfg.get_int_or("problem", "fluid_region", 1);
    solid_ = cfg.get_int_or("problem", "solid_region", 2);
    if (cfg.has("loads", "bump_rect")) {
      std::istringstream ss(cfg.get("loads", "bump_rect"));
      ss >> rect_[0] >> rect_[1] >> rect_[2] >> rect_[3];
      amp_ = cfg.get_double_or("loads", "bump_amplitude", 1.0);
      Eigen::Vector2d dir = cfg.has("loads", "bump_direction")
                                ? cfg.get_vec2("loads", "bump_direction")
                                : Eigen::Vector2d(1, 1);
      double x0 = rect_[0], y0 = rect_[1], x1 = rect_[2], y1 = rect_[3];
      double norm = std::pow(0.5 * (x1 - x0), 2) * std::pow(0.5 * (y1 - y0), 2);
      double amp = amp_;
      load_.f = [=](const Vec2& x) {
        if (x.x() < x0 || x.x() > x1 || x.y() < y0 || x.y() > y1) return Vec2(0, 0);
        double b = (x.x() - x0) * (x1 - x.x()) * (x.y() - y0) * (y1 - x.y()) / norm;
        return Vec2(amp * b * dir.x(), amp * b * dir.y());
      };
    }
    std::string kind = cfg.get_or("goal", "kind", "interface_flux");
    if (kind == "interface_flux") {
      goal_.kind = FsiGoal::Kind::InterfaceFluxU;
      goal_.direction = cfg.has("goal", "direction") ? cfg.get_vec2("goal", "direction")
                                                     : Eigen::Vector2d(1, 0);
    } else if (kind == "subdomain_v") {
      goal_.kind = FsiGoal::Kind::SubdomainV;
      goal_.region_tag = cfg.get_int("goal", "region");
      goal_.weights = cfg.has("goal", "weights") ? cfg.get_vec2("goal", "weights")
                                                 : Eigen::Vector2d(1, 1);
    } else {
      throw std::runtime_error("config: unknown fsi goal kind " + kind);
    }
    newton_.abs_tol = cfg.get_double_or("newton", "abs_tol", 1e-11);
    newton_.max_iter = cfg.get_int_or("newton", "max_iter", 30);
  }

  StepOutput step(std::shared_ptr<const Mesh> mesh, AdaptConfig::DualStrategy) override {
    FsiDomain dom = make_fsi_domain(mesh, fluid_, solid_, degree_);
    FsiState st = fsi_newton(dom, load_, newton_);
    FsiDomain rich = make_fsi_domain(mesh, fluid_, solid_, degree_ + 1);
    FsiAdjoint adj = fsi_adjoint(rich, st.v, st.u, goal_);

    StepOutput out;
    out.J = fsi_goal_value(dom, goal_, st.v, st.u);
    Field wz = dwr_weight(adj.z, dom.uspace);
    Field wf = dwr_weight(adj.wf, dom.vspace);
    out.eta_global = std::abs(fsi_residual_functional(dom, st.v, st.u, load_, wz, wf));
    out.eta_local = fsi_local_estimators(dom, st.v, st.u, load_, adj.z, adj.wf, &out.eta_signed);
    out.dofs = dom.n_unknowns();
    out.u_out = std::make_shared<Field>(st.u);
    out.zhat_out = std::make_shared<Field>(adj.z);
    return out;
  }

  double reference_J(std::shared_ptr<const Mesh> final_mesh) override {
    auto m1 = std::make_shared<const Mesh>(uniform_refine(*final_mesh));
    auto m2 = std::make_shared<const Mesh>(uniform_refine(*m1));
    FsiDomain dom = make_fsi_domain(m2, fluid_, solid_, degree_);
    FsiState st = fsi_newton(dom, load_, newton_);
    return fsi_goal_value(dom, goal_, st.v, st.u);
  }

private:
  Config cfg_;
  int degree_ = 1, fluid_ = 1, solid_ = 2;
  double rect_[4] = {0, 0, 0, 0};
  double amp_ = 0;
  FsiLoad load_;
  FsiGoal goal_;
  NewtonConfig newton_;
};

std::unique_ptr<ProblemDriver> make_problem_driver(const Config& cfg) {
  std::string type = cfg.get("problem", "type");
  if (type == "linear_elasticity") return std::make_unique<LinearElasticityDriver>(cfg);
  if (type == "hyperelastic") return std::make_unique<HyperelasticDriver>(cfg);
  if (type == "fsi_toy") return std::make_unique<FsiToyDriver>(cfg);
  throw std::runtime_error("config: unknown problem type " + type);
}

void backfill_reference(RunResult& result, double J_ref) {
  result.J_reference = J_ref;
  for (std::size_t i = 0; i < result.rows.size(); ++i) {
    ConvergenceRow& row = result.rows[i];
    double err = std::abs(J_ref - row.J_value);
    row.reference_error = err;
    if (J_ref != 0) row.relative_error = err / std::abs(J_ref);
    if (err > 0) {
      row.effectivity_global = row.eta_global / err;
      row.effectivity_sum = row.sum_local / err;
      effectivity(result.reports[i], err);
    }
  }
}

RunResult run_loop(const AdaptConfig& cfg, const Mesh& mesh0, bool adaptive, int levels) {
  auto driver = make_problem_driver(cfg.raw);
  RunResult result;
  auto mesh = std::make_shared<const Mesh>(mesh0);
  const int n_iter = adaptive ? cfg.max_iterations : levels + 1;

  for (int it = 0; it < n_iter; ++it) {
    StepOutput out = driver->step(mesh, cfg.dual_strategy);

    ConvergenceRow row;
    row.iteration = it;
    row.cells = mesh->n_cells();
    row.dofs = out.dofs;
    row.J_value = out.J;
    row.eta_global = out.eta_global;
    row.sum_local = out.eta_local.sum();
    result.rows.push_back(row);
    result.reports.push_back(make_report(it, row.cells, row.dofs, out.J, out.eta_global,
                                         out.eta_local, out.eta_signed));
    result.artifacts.push_back({mesh, out.u_out, out.zhat_out, out.eta_local});

    if (adaptive && out.eta_global <= cfg.epsilon) {
      result.converged = true;
      break;
    }
    if (it == n_iter - 1) {
      result.hit_max_iterations = adaptive;
      break;
    }
    if (adaptive) {
      std::vector<double> ind(out.eta_local.data(), out.eta_local.data() + out.eta_local.size());
      MarkedSet marked = dorfler_mark(ind, cfg.alpha);
      mesh = std::make_shared<const Mesh>(refine(*mesh, marked));
    } else {
      mesh = std::make_shared<const Mesh>(uniform_refine(*mesh));
    }
  }

  if (cfg.compute_reference)
    backfill_reference(result, driver->reference_J(result.artifacts.back().mesh));
  return result;
}

} // namespace

RunResult adaptive_loop(const AdaptConfig& cfg, const Mesh& mesh0) {
  return run_loop(cfg, mesh0, true, 0);
}

RunResult run_uniform(const AdaptConfig& cfg, const Mesh& mesh0, int levels) {
  return run_loop(cfg, mesh0, false, levels);
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

} // namespace

void write_outputs(const RunResult& result, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::ofstream csv(out_dir + "/convergence.csv");
  if (!csv) throw std::runtime_error("cannot write " + out_dir + "/convergence.csv");
  csv << "iteration,cells,dofs,J,eta_global,sum_local,reference_error,relative_error,"
         "effectivity_global,effectivity_sum\n";
  for (const ConvergenceRow& r : result.rows) {
    csv << r.iteration << "," << r.cells << "," << r.dofs << "," << fmt(r.J_value) << ","
        << fmt(r.eta_global) << "," << fmt(r.sum_local) << "," << fmt_opt(r.reference_error)
        << "," << fmt_opt(r.relative_error) << "," << fmt_opt(r.effectivity_global) << ","
        << fmt_opt(r.effectivity_sum) << "\n";
  }
  csv.close();

  for (std::size_t i = 0; i < result.artifacts.size(); ++i) {
    const IterationArtifacts& art = result.artifacts[i];
    char name[64];
    std::snprintf(name, sizeof name, "/mesh_%03zu.vtk", i);
    std::vector<std::pair<std::string, const Field*>> pf;
    if (art.u) pf.push_back({"u", art.u.get()});
    std::shared_ptr<Field> z_vertex;
    if (art.z_hat) {
      // the enriched dual lives on its own space over the same mesh
      pf.push_back({"z_hat", art.z_hat.get()});
    }
    std::vector<std::pair<std::string, const Eigen::VectorXd*>> cf;
    cf.push_back({"eta_K", &art.eta_local});
    write_vtk(out_dir + name, *art.mesh, pf, cf);
  }
}

} // namespace dwr
