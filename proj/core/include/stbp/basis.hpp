#pragma once

#include <Eigen/Dense>
#include <array>
#include <vector>

#include "stbp/grid.hpp"

namespace stbp {

enum class BasisKind { fourier_cosine, haar_wavelet };

// Column-orthonormal spatial basis evaluated on the grid sites.
// Columns are ordered by nondecreasing frequency: key (max(kx,ky), kx+ky),
// ties broken lexicographically on (kx,ky).
struct BasisMatrix {
  Eigen::MatrixXd phi;                         // I x L, unit l2 columns
  std::vector<std::array<int, 2>> index_pairs; // per-column (kx, ky)
  BasisKind kind = BasisKind::fourier_cosine;

  Eigen::Index size() const { return phi.rows(); }
  Eigen::Index truncation() const { return phi.cols(); }
};

BasisMatrix eval_basis(const SpatialGrid& grid, int L, BasisKind kind);

}  // namespace stbp
