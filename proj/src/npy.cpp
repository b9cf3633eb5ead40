#include "skipshift/npy.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <regex>
#include <string>

#include "skipshift/fs_util.hpp"

namespace skipshift {

namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little, ".npy I/O assumes a little-endian host");

namespace {

constexpr char kMagic[] = "\x93NUMPY";

}  // namespace

void write_npy(const fs::path& path, const FeatureMatrix& features) {
  std::string header = "{'descr': '<f4', 'fortran_order': False, 'shape': (" +
                       std::to_string(features.rows()) + ", " + std::to_string(features.dims) + "), }";
  // magic(6) + version(2) + header_len(2) + header, padded to 64 bytes with '\n' last.
  const std::size_t unpadded = 10 + header.size() + 1;
  header.append((64 - unpadded % 64) % 64, ' ');
  header.push_back('\n');

  std::string blob(kMagic, 6);
  blob.push_back('\x01');
  blob.push_back('\x00');
  const auto len = static_cast<std::uint16_t>(header.size());
  blob.push_back(static_cast<char>(len & 0xFF));
  blob.push_back(static_cast<char>(len >> 8));
  blob += header;
  blob.append(reinterpret_cast<const char*>(features.values.data()), features.values.size() * sizeof(float));
  write_text_atomic(path, blob);
}

FeatureMatrix read_npy(const fs::path& path) {
  const std::string blob = read_text(path);
  if (blob.size() < 10 || blob.compare(0, 6, kMagic, 6) != 0) {
    throw IoError("not a .npy file: " + path.string());
  }
  const int major = static_cast<unsigned char>(blob[6]);
  std::size_t header_len = 0;
  std::size_t offset = 0;
  if (major == 1) {
    header_len = static_cast<unsigned char>(blob[8]) | (static_cast<unsigned char>(blob[9]) << 8);
    offset = 10;
  } else if (major == 2 || major == 3) {
    if (blob.size() < 12) throw IoError("truncated .npy header: " + path.string());
    for (int i = 3; i >= 0; --i) header_len = (header_len << 8) | static_cast<unsigned char>(blob[8 + i]);
    offset = 12;
  } else {
    throw IoError("unsupported .npy version in " + path.string());
  }
  if (blob.size() < offset + header_len) throw IoError("truncated .npy header: " + path.string());
  const std::string header = blob.substr(offset, header_len);
  offset += header_len;

  std::smatch m;
  if (!std::regex_search(header, m, std::regex(R"('descr'\s*:\s*'([<>|=]?[a-z]\d+)')"))) {
    throw IoError("missing dtype in " + path.string());
  }
  const std::string descr = m[1];
  if (std::regex_search(header, std::regex(R"('fortran_order'\s*:\s*True)"))) {
    throw IoError("Fortran-ordered arrays are not supported: " + path.string());
  }
  if (!std::regex_search(header, m, std::regex(R"('shape'\s*:\s*\(\s*(\d+)\s*,\s*(\d+)\s*,?\s*\))"))) {
    throw IoError("expected a 2-D array in " + path.string());
  }
  const std::size_t rows = std::stoull(m[1]);
  const std::size_t dims = std::stoull(m[2]);

  FeatureMatrix out;
  out.dims = static_cast<int>(dims);
  out.values.resize(rows * dims);
  if (descr == "<f4" || descr == "f4") {
    if (blob.size() - offset < rows * dims * 4) throw IoError("truncated .npy data: " + path.string());
    std::memcpy(out.values.data(), blob.data() + offset, rows * dims * 4);
  } else if (descr == "<f8" || descr == "f8") {
    if (blob.size() - offset < rows * dims * 8) throw IoError("truncated .npy data: " + path.string());
    for (std::size_t i = 0; i < rows * dims; ++i) {
      double v = 0.0;
      std::memcpy(&v, blob.data() + offset + 8 * i, 8);
      out.values[i] = static_cast<float>(v);
    }
  } else {
    throw IoError("unsupported dtype '" + descr + "' in " + path.string());
  }
  return out;
}

}  // namespace skipshift
