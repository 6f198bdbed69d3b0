#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "stbp/grid.hpp"

namespace stbp {

// Parallel-beam geometry: rays rotate about the domain center, the detector
// array spans the image diagonal.  Angles are in radians.
struct RadonGeometry {
  SpatialGrid grid;
  Eigen::VectorXd angles;
  int n_det = 0;

  double det_spacing() const;
  double det_offset(int m) const;  // signed offset of detector m from center
  Eigen::Index rays() const { return angles.size() * n_det; }
};

RadonGeometry make_radon_geometry(const SpatialGrid& grid, Eigen::VectorXd angles, int n_det);

// Joseph-style line integrals: march along the driving axis, two-point
// interpolation across it, weights scaled by the per-slab path length.
// Row = detector index, column = angle index.
Eigen::MatrixXd radon_project(const RadonGeometry& geom, const Eigen::VectorXd& field);
Eigen::VectorXd radon_backproject(const RadonGeometry& geom, const Eigen::MatrixXd& sinogram);

// Convenience overload on an nx-by-ny image with unit pixel spacing.
Eigen::MatrixXd radon_project(const Eigen::MatrixXd& image, const Eigen::VectorXd& angles,
                              int n_det);

// The same weights assembled as a sparse matrix acting on flattened fields;
// rows ordered angle-major (angle k, then detector m).
Eigen::SparseMatrix<double> radon_matrix(const RadonGeometry& geom);

}  // namespace stbp
