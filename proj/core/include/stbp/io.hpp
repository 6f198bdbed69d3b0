#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace stbp {

// Simple n-d array container backing the .stba format: magic "STBA", one
// version byte, one dimension-count byte, little-endian uint64 extents, then
// the float64 payload in C (row-major) order.
struct Array {
  std::vector<std::uint64_t> dims;
  std::vector<double> data;

  std::size_t size() const;
};

void write_stba(const std::filesystem::path& path, const Array& array);
Array read_stba(const std::filesystem::path& path);

// Matrix helpers with (row, col) laid out in C order.
void write_stba(const std::filesystem::path& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_stba_matrix(const std::filesystem::path& path);

// 8-bit binary PGM; values scale linearly min -> 0, max -> 255, a constant
// image maps to mid-gray 128.  Raster rows follow the matrix columns (iy).
void write_pgm(const std::filesystem::path& path, const Eigen::MatrixXd& image);

}  // namespace stbp
