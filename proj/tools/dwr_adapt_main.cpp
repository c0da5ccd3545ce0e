#include "dwr/driver.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>

namespace {

void apply_env_overrides(dwr::AdaptConfig& cfg) {
  // DWR_ALPHA and DWR_EPSILON override the config for quick sweeps
  if (const char* a = std::getenv("DWR_ALPHA")) cfg.alpha = std::atof(a);
  if (const char* e = std::getenv("DWR_EPSILON")) cfg.epsilon = std::atof(e);
}

void print_rows(const dwr::RunResult& result) {
  std::cout << "iter     cells      dofs             J        eta_h     sum_eta_K";
  if (result.J_reference) std::cout << "      rel_err";
  std::cout << "\n";
  for (const auto& r : result.rows) {
    std::printf("%4d %9ld %9ld %13.6g %12.5g %12.5g", r.iteration, r.cells, r.dofs, r.J_value,
                r.eta_global, r.sum_local);
    if (r.relative_error) std::printf(" %12.5g", *r.relative_error);
    std::printf("\n");
  }
  if (result.J_reference) std::printf("reference J = %.10g\n", *result.J_reference);
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Goal-oriented adaptive FEM driver"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  int levels = 3;

  CLI::App* run = app.add_subcommand("run", "Adaptive refinement loop");
  run->add_option("config", config_path, "problem configuration file")->required();
  run->add_option("--out", out_dir, "output directory")->required();

  CLI::App* uni = app.add_subcommand("uniform", "Uniform refinement series");
  uni->add_option("config", config_path, "problem configuration file")->required();
  uni->add_option("--levels", levels, "number of uniform refinements");
  uni->add_option("--out", out_dir, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    dwr::Config raw = dwr::Config::parse_file(config_path);
    dwr::AdaptConfig cfg = dwr::parse_adapt_config(raw);
    cfg.base_dir = std::filesystem::path(config_path).parent_path().string();
    apply_env_overrides(cfg);
    dwr::Mesh mesh0 = dwr::load_problem_mesh(cfg);

    dwr::RunResult result;
    if (app.got_subcommand(run)) {
      result = dwr::adaptive_loop(cfg, mesh0);
    } else {
      result = dwr::run_uniform(cfg, mesh0, levels);
    }
    dwr::write_outputs(result, out_dir);
    print_rows(result);

    if (app.got_subcommand(run) && result.hit_max_iterations && !result.converged) return 2;
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
