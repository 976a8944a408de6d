#pragma once

// Run configuration: model files, vectors, grids.
//
// Model files are line-oriented "key = value" text; '#' starts a comment.
//     kappa      = 0.6                    constant background field
//     rho_bump   = 0.05, 0.3, 1.2, 2.0    amplitude, centre x, centre y, hyperbolic radius
//     kappa_bump = 0.3, -0.2, 0.9, 2.0    same, added to the field
//     period     = 2.0                    replicate bumps under z -> e^period z
// rho_bump and kappa_bump may repeat.

#include <filesystem>
#include <string>
#include <vector>

#include "magflow/geometry.hpp"

namespace magflow::cli {

SurfaceModel parseModel(const std::string& text);
SurfaceModel loadModel(const std::filesystem::path& path);

// "x,y,angle".
UnitVector parseVector(const std::string& text);
// "a,b,c,d" coefficients of z -> (a z + b) / (c z + d).
Mobius parseMobius(const std::string& text);

struct GridSpec {
  double x0 = 0.0, x1 = 0.0, y0 = 1.0, y1 = 1.0;
  int nx = 1, ny = 1;
  // Row-major in y, then x.
  std::vector<Point> points() const;
};

// "x0:x1:nx,y0:y1:ny".
GridSpec parseGrid(const std::string& text);

}  // namespace magflow::cli
