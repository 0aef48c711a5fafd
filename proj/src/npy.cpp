#include "afflabel/npy.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <regex>
#include <sstream>

#include "afflabel/errors.hpp"

namespace afflabel::npy {

namespace {

constexpr char kMagic[] = "\x93NUMPY";
constexpr std::size_t kMagicLen = 6;

static_assert(std::endian::native == std::endian::little,
              "NPY I/O assumes a little-endian host");

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& what) {
  throw DataError("npy " + path.string() + ": " + what);
}

}  // namespace

std::string make_header(std::size_t rows, std::size_t cols, DType dtype) {
  std::ostringstream dict;
  dict << "{'descr': '" << (dtype == DType::kFloat32 ? "<f4" : "<f8")
       << "', 'fortran_order': False, 'shape': (" << rows << ", " << cols << "), }";
  std::string header = dict.str();
  // magic(6) + version(2) + length(2) + header + '\n' is a multiple of 64.
  const std::size_t unpadded = kMagicLen + 4 + header.size() + 1;
  header.append((64 - unpadded % 64) % 64, ' ');
  header.push_back('\n');
  return header;
}

Array2D read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open");

  char magic[kMagicLen];
  if (!in.read(magic, kMagicLen) || std::memcmp(magic, kMagic, kMagicLen) != 0) {
    fail(path, "malformed header (bad magic)");
  }
  unsigned char version[2];
  if (!in.read(reinterpret_cast<char*>(version), 2)) fail(path, "malformed header (truncated)");

  std::uint32_t header_len = 0;
  if (version[0] == 1) {
    unsigned char len[2];
    if (!in.read(reinterpret_cast<char*>(len), 2)) fail(path, "malformed header (truncated)");
    header_len = len[0] | (len[1] << 8);
  } else if (version[0] == 2 || version[0] == 3) {
    unsigned char len[4];
    if (!in.read(reinterpret_cast<char*>(len), 4)) fail(path, "malformed header (truncated)");
    header_len = len[0] | (len[1] << 8) | (len[2] << 16) | (static_cast<std::uint32_t>(len[3]) << 24);
  } else {
    fail(path, "unsupported format version " + std::to_string(version[0]));
  }

  std::string header(header_len, '\0');
  if (!in.read(header.data(), header_len)) fail(path, "malformed header (truncated dict)");

  static const std::regex descr_re(R"('descr'\s*:\s*'([^']*)')");
  static const std::regex order_re(R"('fortran_order'\s*:\s*(True|False))");
  static const std::regex shape_re(R"('shape'\s*:\s*\(\s*([0-9]+)\s*,\s*([0-9]+)\s*,?\s*\))");
  std::smatch m;

  Array2D out;
  if (!std::regex_search(header, m, descr_re)) fail(path, "malformed header (no descr)");
  const std::string descr = m[1];
  std::size_t item_size = 0;
  if (descr == "<f4") {
    out.dtype = DType::kFloat32;
    item_size = 4;
  } else if (descr == "<f8") {
    out.dtype = DType::kFloat64;
    item_size = 8;
  } else {
    fail(path, "unsupported dtype '" + descr + "' (expected <f4 or <f8)");
  }
  if (!std::regex_search(header, m, order_re)) fail(path, "malformed header (no fortran_order)");
  const bool fortran = m[1] == "True";
  if (!std::regex_search(header, m, shape_re)) {
    fail(path, "malformed header (shape must be 2-D)");
  }
  out.rows = std::stoull(m[1]);
  out.cols = std::stoull(m[2]);

  const std::size_t count = out.rows * out.cols;
  std::vector<char> raw(count * item_size);
  if (!raw.empty() && !in.read(raw.data(), static_cast<std::streamsize>(raw.size()))) {
    fail(path, "data shorter than shape " + std::to_string(out.rows) + "x" +
                   std::to_string(out.cols));
  }
  if (in.peek() != std::char_traits<char>::eof()) fail(path, "trailing bytes after data");

  out.values.resize(count);
  for (std::size_t r = 0; r < out.rows; ++r) {
    for (std::size_t c = 0; c < out.cols; ++c) {
      const std::size_t src = fortran ? c * out.rows + r : r * out.cols + c;
      double v;
      if (item_size == 4) {
        float f;
        std::memcpy(&f, raw.data() + src * 4, 4);
        v = f;
      } else {
        std::memcpy(&v, raw.data() + src * 8, 8);
      }
      out.values[r * out.cols + c] = v;
    }
  }
  return out;
}

void write(const std::filesystem::path& path, const Array2D& array) {
  if (array.values.size() != array.rows * array.cols) {
    throw DataError("npy write: value count does not match shape");
  }
  const std::string header = make_header(array.rows, array.cols, array.dtype);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(path, "cannot open for writing");
  out.write(kMagic, kMagicLen);
  const char version[2] = {1, 0};
  out.write(version, 2);
  const auto len = static_cast<std::uint16_t>(header.size());
  const char len_bytes[2] = {static_cast<char>(len & 0xff), static_cast<char>(len >> 8)};
  out.write(len_bytes, 2);
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  if (array.dtype == DType::kFloat32) {
    std::vector<float> buf(array.values.begin(), array.values.end());
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
  } else {
    out.write(reinterpret_cast<const char*>(array.values.data()),
              static_cast<std::streamsize>(array.values.size() * sizeof(double)));
  }
  if (!out) fail(path, "write failed");
}

}  // namespace afflabel::npy
