#pragma once

#include "netform/fespace.hpp"
#include "netform/mesh.hpp"
#include "netform/types.hpp"

#include <string>

namespace netform {

// Legacy ASCII unstructured grid: points, cells, CELL_DATA (tensor
// components, Frobenius norm, smallest eigenvalue), POINT_DATA (pressure).
void write_vtk(const StateVector& state, const MeshTopology& mesh,
               const std::string& path);

// Cells with |C|_F > threshold: one line per cell with index, centroid and
// norm. Supports the 3D network extraction output.
void write_threshold_cells(const StateVector& state, const MeshTopology& mesh,
                           Scalar threshold, const std::string& path);

} // namespace netform
