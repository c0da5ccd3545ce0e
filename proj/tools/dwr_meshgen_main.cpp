#include "dwr/meshgen.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Writes the bundled example meshes in the mesh text format"};
  std::string which, out;
  int n = 16;
  app.add_option("name", which, "square2 | artery | silicone | fsi_square")->required();
  app.add_option("--out", out, "output file")->required();
  app.add_option("-n", n, "grid size for fsi_square");
  CLI11_PARSE(app, argc, argv);

  try {
    dwr::Mesh mesh;
    if (which == "square2") mesh = dwr::meshgen::unit_square_two_cells();
    else if (which == "artery") mesh = dwr::meshgen::artery_proxy();
    else if (which == "silicone") mesh = dwr::meshgen::silicone_proxy();
    else if (which == "fsi_square") mesh = dwr::meshgen::fsi_square(n);
    else {
      std::cerr << "unknown mesh name: " << which << "\n";
      return 1;
    }
    dwr::save_mesh(mesh, out);
    std::cout << out << ": " << mesh.n_vertices() << " vertices, " << mesh.n_cells()
              << " cells, " << mesh.boundary_edges.size() << " boundary edges\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
