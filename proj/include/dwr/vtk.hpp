#pragma once

#include "dwr/space.hpp"

#include <string>
#include <utility>
#include <vector>

namespace dwr {

/// Legacy-ASCII VTK unstructured grid. Fields are written at mesh vertices
/// (VECTORS for 2-component fields, SCALARS otherwise); cell arrays become
/// CELL_DATA scalars.
void write_vtk(const std::string& path, const Mesh& mesh,
               const std::vector<std::pair<std::string, const Field*>>& point_fields,
               const std::vector<std::pair<std::string, const Eigen::VectorXd*>>& cell_fields);

} // namespace dwr
