#include "stbp/radon.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace stbp {

double RadonGeometry::det_spacing() const {
  const double span = std::hypot(grid.nx * grid.dx(), grid.ny * grid.dy());
  return n_det > 1 ? span / (n_det - 1) : span;
}

double RadonGeometry::det_offset(int m) const {
  return (m - 0.5 * (n_det - 1)) * det_spacing();
}

RadonGeometry make_radon_geometry(const SpatialGrid& grid, Eigen::VectorXd angles, int n_det) {
  if (grid.nx < 1 || grid.ny < 1) throw std::invalid_argument("radon: empty grid");
  if (angles.size() == 0) throw std::invalid_argument("radon: need at least one angle");
  if (n_det < 2) throw std::invalid_argument("radon: need at least two detectors");
  return RadonGeometry{grid, std::move(angles), n_det};
}

namespace {

// Enumerate (flat pixel, weight) pairs of one ray.  The ray at angle theta and
// detector offset s passes through center + s*(cos, sin) with direction
// (-sin, cos).  Weights sum to the path length across the pixel support.
template <class F>
void for_each_ray_weight(const SpatialGrid& g, double theta, double s, F&& f) {
  const double ct = std::cos(theta), st = std::sin(theta);
  const double cx = 0.5 * (g.domain.x0 + g.domain.x1);
  const double cy = 0.5 * (g.domain.y0 + g.domain.y1);
  if (std::abs(st) >= std::abs(ct)) {
    // x is the driving axis: one sample per pixel column
    const double wt = g.dx() / std::abs(st);
    for (int ix = 0; ix < g.nx; ++ix) {
      const double x = g.x(ix) - cx;
      const double t = (s * ct - x) / st;
      const double y = s * st + t * ct + cy;
      const double py = (y - g.domain.y0) / g.dy() - 0.5;
      const int iy0 = static_cast<int>(std::floor(py));
      const double w = py - iy0;
      if (iy0 >= 0 && iy0 < g.ny && w != 1.0) f(g.flat(ix, iy0), (1.0 - w) * wt);
      if (iy0 + 1 >= 0 && iy0 + 1 < g.ny && w != 0.0) f(g.flat(ix, iy0 + 1), w * wt);
    }
  } else {
    const double wt = g.dy() / std::abs(ct);
    for (int iy = 0; iy < g.ny; ++iy) {
      const double y = g.y(iy) - cy;
      const double t = (y - s * st) / ct;
      const double x = s * ct - t * st + cx;
      const double px = (x - g.domain.x0) / g.dx() - 0.5;
      const int ix0 = static_cast<int>(std::floor(px));
      const double w = px - ix0;
      if (ix0 >= 0 && ix0 < g.nx && w != 1.0) f(g.flat(ix0, iy), (1.0 - w) * wt);
      if (ix0 + 1 >= 0 && ix0 + 1 < g.nx && w != 0.0) f(g.flat(ix0 + 1, iy), w * wt);
    }
  }
}

}  // namespace

Eigen::MatrixXd radon_project(const RadonGeometry& geom, const Eigen::VectorXd& field) {
  if (field.size() != geom.grid.size()) throw std::invalid_argument("radon_project: size mismatch");
  Eigen::MatrixXd sino = Eigen::MatrixXd::Zero(geom.n_det, geom.angles.size());
  for (Eigen::Index k = 0; k < geom.angles.size(); ++k)
    for (int m = 0; m < geom.n_det; ++m) {
      double acc = 0.0;
      for_each_ray_weight(geom.grid, geom.angles[k], geom.det_offset(m),
                          [&](int pix, double w) { acc += w * field[pix]; });
      sino(m, k) = acc;
    }
  return sino;
}

Eigen::VectorXd radon_backproject(const RadonGeometry& geom, const Eigen::MatrixXd& sinogram) {
  if (sinogram.rows() != geom.n_det || sinogram.cols() != geom.angles.size())
    throw std::invalid_argument("radon_backproject: sinogram shape mismatch");
  Eigen::VectorXd field = Eigen::VectorXd::Zero(geom.grid.size());
  for (Eigen::Index k = 0; k < geom.angles.size(); ++k)
    for (int m = 0; m < geom.n_det; ++m) {
      const double v = sinogram(m, k);
      for_each_ray_weight(geom.grid, geom.angles[k], geom.det_offset(m),
                          [&](int pix, double w) { field[pix] += w * v; });
    }
  return field;
}

Eigen::MatrixXd radon_project(const Eigen::MatrixXd& image, const Eigen::VectorXd& angles,
                              int n_det) {
  const int nx = static_cast<int>(image.rows()), ny = static_cast<int>(image.cols());
  const SpatialGrid grid = build_grid(
      nx, ny, Rect{0.0, static_cast<double>(nx), 0.0, static_cast<double>(ny)});
  const RadonGeometry geom = make_radon_geometry(grid, angles, n_det);
  return radon_project(geom, to_field(grid, image));
}

Eigen::SparseMatrix<double> radon_matrix(const RadonGeometry& geom) {
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(static_cast<std::size_t>(geom.rays()) * 2 *
                  std::max(geom.grid.nx, geom.grid.ny));
  for (Eigen::Index k = 0; k < geom.angles.size(); ++k)
    for (int m = 0; m < geom.n_det; ++m) {
      const int row = static_cast<int>(k) * geom.n_det + m;
      for_each_ray_weight(geom.grid, geom.angles[k], geom.det_offset(m),
                          [&](int pix, double w) { entries.emplace_back(row, pix, w); });
    }
  Eigen::SparseMatrix<double> A(geom.rays(), geom.grid.size());
  A.setFromTriplets(entries.begin(), entries.end());
  A.makeCompressed();
  return A;
}

}  // namespace stbp
