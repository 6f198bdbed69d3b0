#pragma once

#include <Eigen/Dense>

namespace stbp {

struct Rect {
  double x0 = -1.0, x1 = 1.0;
  double y0 = -1.0, y1 = 1.0;
};

// Regular pixel grid; sites are cell centers, flattened row-major (y outer, x inner).
struct SpatialGrid {
  int nx = 0, ny = 0;
  Rect domain;

  int size() const { return nx * ny; }
  double dx() const { return (domain.x1 - domain.x0) / nx; }
  double dy() const { return (domain.y1 - domain.y0) / ny; }
  double x(int ix) const { return domain.x0 + (ix + 0.5) * dx(); }
  double y(int iy) const { return domain.y0 + (iy + 0.5) * dy(); }
  int flat(int ix, int iy) const { return iy * nx + ix; }
};

SpatialGrid build_grid(int nx, int ny, Rect domain);

// Flat field vector <-> nx-by-ny image matrix (image(ix, iy) = u[flat(ix, iy)]).
Eigen::MatrixXd to_image(const SpatialGrid& grid, const Eigen::VectorXd& u);
Eigen::VectorXd to_field(const SpatialGrid& grid, const Eigen::MatrixXd& image);

}  // namespace stbp
