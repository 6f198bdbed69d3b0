#pragma once

#include <Eigen/Dense>
#include <vector>

#include "stbp/prior.hpp"

namespace stbp {

// Shrinking-annulus truth: u(x, t) = t on {x : sin(pi ||x||) >= t}, zero
// elsewhere.  As t grows the active set tightens toward the ||x|| = 1/2 ring.
SpaceTimeField phantom_annulus(const SpatialGrid& grid, const Eigen::VectorXd& t_grid);

// Piecewise-constant scene of rigidly moving shapes over a zero background;
// overlaps take the larger value.
struct MovingShape {
  enum class Kind { disk, rect };
  Kind kind = Kind::disk;
  double cx = 0.0, cy = 0.0;   // center at t = 0
  double vx = 0.0, vy = 0.0;   // velocity
  double radius = 0.25;        // disk
  double hx = 0.2, hy = 0.2;   // rect half extents
  double value = 1.0;
};

SpaceTimeField phantom_dynamic_ct(const SpatialGrid& grid, const Eigen::VectorXd& t_grid,
                                  const std::vector<MovingShape>& shapes);

// Default two-body scene used by the dynamic tomography experiment.
std::vector<MovingShape> default_ct_shapes();

}  // namespace stbp
