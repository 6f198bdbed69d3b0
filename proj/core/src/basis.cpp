#include "stbp/basis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "stbp/errors.hpp"

namespace stbp {

SpatialGrid build_grid(int nx, int ny, Rect domain) {
  if (nx < 1 || ny < 1) throw std::invalid_argument("build_grid: nx, ny must be >= 1");
  if (!(domain.x1 > domain.x0) || !(domain.y1 > domain.y0))
    throw std::invalid_argument("build_grid: empty domain rectangle");
  return SpatialGrid{nx, ny, domain};
}

Eigen::MatrixXd to_image(const SpatialGrid& grid, const Eigen::VectorXd& u) {
  if (u.size() != grid.size()) throw std::invalid_argument("to_image: size mismatch");
  Eigen::MatrixXd img(grid.nx, grid.ny);
  for (int iy = 0; iy < grid.ny; ++iy)
    for (int ix = 0; ix < grid.nx; ++ix) img(ix, iy) = u[grid.flat(ix, iy)];
  return img;
}

Eigen::VectorXd to_field(const SpatialGrid& grid, const Eigen::MatrixXd& image) {
  if (image.rows() != grid.nx || image.cols() != grid.ny)
    throw std::invalid_argument("to_field: shape mismatch");
  Eigen::VectorXd u(grid.size());
  for (int iy = 0; iy < grid.ny; ++iy)
    for (int ix = 0; ix < grid.nx; ++ix) u[grid.flat(ix, iy)] = image(ix, iy);
  return u;
}

namespace {

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

// 1-D cosine basis (DCT-II shape), exactly orthonormal on n equispaced sites.
double cosine_1d(int k, int i, int n) {
  const double c = (k == 0) ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
  return c * std::cos(std::numbers::pi * k * (i + 0.5) / n);
}

// 1-D Haar basis on n = 2^m sites, level-major indexing: k = 0 is the
// constant, k = 2^j + p (p < 2^j) is the step wavelet on block p of level j.
double haar_1d(int k, int i, int n) {
  if (k == 0) return std::sqrt(1.0 / n);
  int level = 0;
  while ((2 << level) <= k) ++level;
  const int p = k - (1 << level);
  const int block = n >> level;         // support length
  const int start = p * block;
  if (i < start || i >= start + block) return 0.0;
  const double a = std::sqrt(static_cast<double>(1 << level) / n);
  return (i < start + block / 2) ? a : -a;
}

std::vector<std::array<int, 2>> ordered_pairs(int nx, int ny, int L) {
  std::vector<std::array<int, 2>> pairs;
  pairs.reserve(static_cast<std::size_t>(nx) * ny);
  for (int ky = 0; ky < ny; ++ky)
    for (int kx = 0; kx < nx; ++kx) pairs.push_back({kx, ky});
  std::sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) {
    const int ma = std::max(a[0], a[1]), mb = std::max(b[0], b[1]);
    if (ma != mb) return ma < mb;
    const int sa = a[0] + a[1], sb = b[0] + b[1];
    if (sa != sb) return sa < sb;
    return a < b;
  });
  pairs.resize(L);
  return pairs;
}

}  // namespace

BasisMatrix eval_basis(const SpatialGrid& grid, int L, BasisKind kind) {
  const int I = grid.size();
  if (L < 1 || L > I) throw std::invalid_argument("eval_basis: need 1 <= L <= nx*ny");
  if (kind == BasisKind::haar_wavelet && !(is_power_of_two(grid.nx) && is_power_of_two(grid.ny)))
    throw std::invalid_argument("eval_basis: haar basis needs power-of-two grid sides");

  BasisMatrix basis;
  basis.kind = kind;
  basis.index_pairs = ordered_pairs(grid.nx, grid.ny, L);
  basis.phi.resize(I, L);

  auto f1 = (kind == BasisKind::fourier_cosine) ? cosine_1d : haar_1d;
  for (int l = 0; l < L; ++l) {
    const auto [kx, ky] = basis.index_pairs[l];
    for (int iy = 0; iy < grid.ny; ++iy) {
      const double fy = f1(ky, iy, grid.ny);
      for (int ix = 0; ix < grid.nx; ++ix)
        basis.phi(grid.flat(ix, iy), l) = f1(kx, ix, grid.nx) * fy;
    }
  }
  return basis;
}

}  // namespace stbp
