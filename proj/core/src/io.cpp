#include "stbp/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace stbp {

static_assert(std::endian::native == std::endian::little,
              "stba io assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'S', 'T', 'B', 'A'};
constexpr std::uint8_t kVersion = 1;

[[noreturn]] void fail(const std::filesystem::path& path, const char* what) {
  throw std::runtime_error("stba: " + std::string(what) + ": " + path.string());
}

}  // namespace

std::size_t Array::size() const {
  std::size_t n = 1;
  for (auto d : dims) n *= static_cast<std::size_t>(d);
  return dims.empty() ? 0 : n;
}

void write_stba(const std::filesystem::path& path, const Array& array) {
  if (array.dims.empty() || array.dims.size() > 255)
    throw std::invalid_argument("stba: need between 1 and 255 dimensions");
  if (array.data.size() != array.size())
    throw std::invalid_argument("stba: payload size does not match extents");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(path, "cannot open for writing");
  out.write(kMagic, 4);
  out.put(static_cast<char>(kVersion));
  out.put(static_cast<char>(array.dims.size()));
  out.write(reinterpret_cast<const char*>(array.dims.data()),
            static_cast<std::streamsize>(array.dims.size() * sizeof(std::uint64_t)));
  out.write(reinterpret_cast<const char*>(array.data.data()),
            static_cast<std::streamsize>(array.data.size() * sizeof(double)));
  if (!out) fail(path, "write failed");
}

Array read_stba(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open");
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) fail(path, "bad magic");
  const int version = in.get();
  if (version != kVersion) fail(path, "unsupported version");
  const int ndim = in.get();
  if (ndim < 1) fail(path, "bad dimension count");
  Array array;
  array.dims.resize(ndim);
  in.read(reinterpret_cast<char*>(array.dims.data()),
          static_cast<std::streamsize>(ndim * sizeof(std::uint64_t)));
  if (!in) fail(path, "truncated header");
  array.data.resize(array.size());
  in.read(reinterpret_cast<char*>(array.data.data()),
          static_cast<std::streamsize>(array.data.size() * sizeof(double)));
  if (!in) fail(path, "truncated payload");
  return array;
}

void write_stba(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
  Array array;
  array.dims = {static_cast<std::uint64_t>(m.rows()), static_cast<std::uint64_t>(m.cols())};
  array.data.resize(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      array.data[static_cast<std::size_t>(r) * m.cols() + c] = m(r, c);
  write_stba(path, array);
}

Eigen::MatrixXd read_stba_matrix(const std::filesystem::path& path) {
  const Array array = read_stba(path);
  if (array.dims.size() != 2) fail(path, "expected a 2-d array");
  Eigen::MatrixXd m(array.dims[0], array.dims[1]);
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      m(r, c) = array.data[static_cast<std::size_t>(r) * m.cols() + c];
  return m;
}

void write_pgm(const std::filesystem::path& path, const Eigen::MatrixXd& image) {
  if (image.size() == 0) throw std::invalid_argument("pgm: empty image");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(path, "cannot open for writing");
  out << "P5\n" << image.rows() << " " << image.cols() << "\n255\n";
  const double lo = image.minCoeff(), hi = image.maxCoeff();
  for (Eigen::Index iy = 0; iy < image.cols(); ++iy)
    for (Eigen::Index ix = 0; ix < image.rows(); ++ix) {
      int v = 128;
      if (hi > lo) v = static_cast<int>(std::lround((image(ix, iy) - lo) / (hi - lo) * 255.0));
      out.put(static_cast<char>(std::clamp(v, 0, 255)));
    }
  if (!out) fail(path, "write failed");
}

}  // namespace stbp
