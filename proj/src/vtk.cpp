#include "dwr/vtk.hpp"

#include <fstream>
#include <stdexcept>

namespace dwr {

void write_vtk(const std::string& path, const Mesh& mesh,
               const std::vector<std::pair<std::string, const Field*>>& point_fields,
               const std::vector<std::pair<std::string, const Eigen::VectorXd*>>& cell_fields) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write VTK file: " + path);
  out.precision(9);

  out << "# vtk DataFile Version 3.0\n";
  out << "dwrlab output\n";
  out << "ASCII\n";
  out << "DATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << mesh.n_vertices() << " float\n";
  for (const Vec2& v : mesh.vertices) out << v.x() << " " << v.y() << " 0\n";
  out << "CELLS " << mesh.n_cells() << " " << 4 * mesh.n_cells() << "\n";
  for (const auto& c : mesh.cells) out << "3 " << c[0] << " " << c[1] << " " << c[2] << "\n";
  out << "CELL_TYPES " << mesh.n_cells() << "\n";
  for (int c = 0; c < mesh.n_cells(); ++c) out << "5\n";

  if (!point_fields.empty()) {
    out << "POINT_DATA " << mesh.n_vertices() << "\n";
    for (const auto& [name, field] : point_fields) {
      const Space& s = *field->space;
      if (s.mesh.get() != &mesh)
        throw std::runtime_error("write_vtk: field '" + name + "' lives on a different mesh");
      // vertex nodes are numbered first in the space
      if (s.components == 2) {
        out << "VECTORS " << name << " float\n";
        for (int v = 0; v < mesh.n_vertices(); ++v)
          out << field->coeffs[s.dof(v, 0)] << " " << field->coeffs[s.dof(v, 1)] << " 0\n";
      } else {
        out << "SCALARS " << name << " float 1\nLOOKUP_TABLE default\n";
        for (int v = 0; v < mesh.n_vertices(); ++v) out << field->coeffs[s.dof(v, 0)] << "\n";
      }
    }
  }
  if (!cell_fields.empty()) {
    out << "CELL_DATA " << mesh.n_cells() << "\n";
    for (const auto& [name, data] : cell_fields) {
      if (data->size() != mesh.n_cells())
        throw std::runtime_error("write_vtk: cell array '" + name + "' has wrong length");
      out << "SCALARS " << name << " float 1\nLOOKUP_TABLE default\n";
      for (long c = 0; c < data->size(); ++c) out << (*data)[c] << "\n";
    }
  }
}

} // namespace dwr
