#pragma once

#include "dwr/mesh.hpp"

#include <functional>

namespace dwr::meshgen {

/// Unit square split along the diagonal into 2 triangles; boundary tag 1.
Mesh unit_square_two_cells();

/// Structured rectangle. Boundary tags: bottom 1, right 2, top 3, left 4.
/// Optional per-cell region tag from the centroid. Alternating diagonals by
/// default; uniform diagonals give the classic 6-triangle vertex patches.
Mesh rectangle(const Vec2& lo, const Vec2& hi, int nx, int ny,
               const std::function<int(const Vec2&)>& region = {},
               bool alternate_diagonals = true);

/// Geometry knobs of the vessel-wall proxy (lengths in mm, angles in rad).
struct ArteryGeometry {
  double outer_r = 2.5;     // fibrosis diameter 5 mm
  Vec2 lumen_c{0.8, 0.0};
  double lumen_r = 0.7;
  // thin fibrous cap (the region of interest) on the lumen side, with the
  // soft necrotic core as a crescent right behind it
  double cap_dir = 0.0;      // direction the cap faces, about the lumen center
  double cap_thickness = 0.12;
  double cap_angle = 0.9;    // half-opening of the cap about the lumen center
  double core_thickness = 0.7;
  double core_angle = 1.1;
  double media_r = 2.12;    // fibers outside this radius
  double clamp_from = -2.2, clamp_to = -1.3; // clamped outer arc (atan2 range)
};

/// Vessel-wall cross section: annulus-like wall between an offset lumen
/// circle and the outer fibrosis circle (diameter 5 mm). Region tags:
/// 1 fibrosis bulk, 2 necrotic core, 3 region of interest, 4 media ring
/// (muscle fibers). Boundary tags: 1 clamped outer arc, 2 traction-free rest.
Mesh artery_proxy(int n_theta = 69, int n_rad = 9, const ArteryGeometry& geo = {});

/// Dumbbell silicone sheet [-62,0] x [-82.5,0] with five circular holes of
/// diameter 20 mm and a slit between the C1 and C3 holes, approximated on a
/// structured grid. Boundary tags: 1 bottom (clamped), 3 top (pulled),
/// 2 everything else. Region tag 1.
Mesh silicone_proxy(int nx = 27, int ny = 36);

/// Unit square split into solid (x < split, tag 2) and fluid (tag 1) halves.
Mesh fsi_square(int n, double split = 0.5);

} // namespace dwr::meshgen
