#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace afflabel::npy {

enum class DType { kFloat32, kFloat64 };

// A 2-D C-order array as stored on disk. Values are widened to double; the
// float32 -> double -> float32 trip is exact.
struct Array2D {
  std::size_t rows = 0;
  std::size_t cols = 0;
  DType dtype = DType::kFloat32;
  std::vector<double> values;  // row-major, rows * cols
};

// Reads NPY v1.0/v2.0 little-endian "<f4" or "<f8", C order, 2-D shape.
Array2D read(const std::filesystem::path& path);

// Writes NPY v1.0. float32 output rounds each value to nearest.
void write(const std::filesystem::path& path, const Array2D& array);

// Header string for the given shape/dtype, padded so the data offset is a
// multiple of 64 bytes. Exposed for format tests.
std::string make_header(std::size_t rows, std::size_t cols, DType dtype);

}  // namespace afflabel::npy
