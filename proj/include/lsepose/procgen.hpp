#pragma once

#include "lsepose/mesh.hpp"

namespace lsepose {

// Procedural CAD-style solids used by the synthetic benchmark, demos and
// tests. All meshes have consistent outward winding and averaged vertex
// normals; dimensions are in model units.

// Extrudes a simple CCW polygon along z (centered, thickness `height`).
SurfaceMesh make_prism(const std::vector<Vec2>& profile, double height);

SurfaceMesh make_box(double sx, double sy, double sz);

// Asymmetric L-shaped prism (no rotational symmetry).
SurfaceMesh make_lblock(double scale = 1.0);

// Asymmetric pentagonal wedge prism.
SurfaceMesh make_wedge(double scale = 1.0);

// Plus-shaped prism with exact 4-fold rotational symmetry about z.
SurfaceMesh make_cross_prism(double scale = 1.0);

SurfaceMesh make_cylinder(double radius, double height, int segments);

SurfaceMesh make_uv_sphere(double radius, int rings, int segments);

// One 4-to-1 loop split per triangle; geometry is unchanged.
SurfaceMesh subdivide(const SurfaceMesh& mesh);

}  // namespace lsepose
