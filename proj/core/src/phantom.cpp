#include "stbp/phantom.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace stbp {

SpaceTimeField phantom_annulus(const SpatialGrid& grid, const Eigen::VectorXd& t_grid) {
  if (t_grid.size() == 0) throw std::invalid_argument("phantom_annulus: empty time grid");
  SpaceTimeField field;
  field.grid = grid;
  field.t_grid = t_grid;
  field.values = Eigen::MatrixXd::Zero(grid.size(), t_grid.size());
  for (Eigen::Index j = 0; j < t_grid.size(); ++j) {
    const double t = t_grid[j];
    for (int iy = 0; iy < grid.ny; ++iy)
      for (int ix = 0; ix < grid.nx; ++ix) {
        const double r = std::hypot(grid.x(ix), grid.y(iy));
        if (std::sin(std::numbers::pi * r) >= t) field.values(grid.flat(ix, iy), j) = t;
      }
  }
  return field;
}

SpaceTimeField phantom_dynamic_ct(const SpatialGrid& grid, const Eigen::VectorXd& t_grid,
                                  const std::vector<MovingShape>& shapes) {
  if (t_grid.size() == 0) throw std::invalid_argument("phantom_dynamic_ct: empty time grid");
  if (shapes.empty()) throw std::invalid_argument("phantom_dynamic_ct: no shapes");
  SpaceTimeField field;
  field.grid = grid;
  field.t_grid = t_grid;
  field.values = Eigen::MatrixXd::Zero(grid.size(), t_grid.size());
  for (Eigen::Index j = 0; j < t_grid.size(); ++j) {
    const double t = t_grid[j];
    for (const auto& shape : shapes) {
      const double cx = shape.cx + shape.vx * t;
      const double cy = shape.cy + shape.vy * t;
      for (int iy = 0; iy < grid.ny; ++iy)
        for (int ix = 0; ix < grid.nx; ++ix) {
          const double dx = grid.x(ix) - cx, dy = grid.y(iy) - cy;
          const bool inside = (shape.kind == MovingShape::Kind::disk)
                                  ? (dx * dx + dy * dy <= shape.radius * shape.radius)
                                  : (std::abs(dx) <= shape.hx && std::abs(dy) <= shape.hy);
          if (inside) {
            double& v = field.values(grid.flat(ix, iy), j);
            v = std::max(v, shape.value);
          }
        }
    }
  }
  return field;
}

std::vector<MovingShape> default_ct_shapes() {
  MovingShape disk;
  disk.kind = MovingShape::Kind::disk;
  disk.cx = -0.35; disk.cy = 0.15;
  disk.vx = 0.55;  disk.vy = -0.25;
  disk.radius = 0.22;
  disk.value = 1.0;

  MovingShape block;
  block.kind = MovingShape::Kind::rect;
  block.cx = 0.25; block.cy = -0.45;
  block.vx = -0.15; block.vy = 0.55;
  block.hx = 0.18; block.hy = 0.12;
  block.value = 0.7;

  return {disk, block};
}

}  // namespace stbp
