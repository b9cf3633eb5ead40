#include <gtest/gtest.h>

#include <cstring>
#include <fstream>

#include "skipshift/fs_util.hpp"
#include "skipshift/npy.hpp"
#include "support.hpp"

namespace skipshift {
namespace {

using testing::TempDir;

// Hand-built version 1.0 file: magic, header padded so data starts at 64.
void write_raw_npy(const std::filesystem::path& path, const std::string& dict, const std::string& payload) {
  std::string header = dict;
  while ((10 + header.size() + 1) % 64 != 0) header += ' ';
  header += '\n';
  std::string blob("\x93NUMPY\x01\x00", 8);
  blob += static_cast<char>(header.size() & 0xff);
  blob += static_cast<char>(header.size() >> 8);
  blob += header + payload;
  std::ofstream(path, std::ios::binary) << blob;
}

TEST(Npy, Float32RoundTripAndHeaderLayout) {
  TempDir dir("npy");
  FeatureMatrix m;
  m.dims = 3;
  m.values = {1.0f, -2.5f, 3.25f, 0.0f, 1e-7f, 65504.0f};
  const auto path = dir.path() / "x.npy";
  write_npy(path, m);
  const std::string blob = read_text(path);
  ASSERT_EQ(blob.substr(0, 6), "\x93NUMPY");
  EXPECT_NE(blob.find("'descr': '<f4'"), std::string::npos);
  EXPECT_NE(blob.find("'shape': (2, 3)"), std::string::npos);
  EXPECT_EQ((blob.size() - 6 * 4) % 64, 0u);
  const auto back = read_npy(path);
  EXPECT_EQ(back.dims, 3);
  EXPECT_EQ(back.values, m.values);
}

TEST(Npy, ReadsFloat64ByNarrowing) {
  TempDir dir("npy64");
  const double vals[4] = {0.5, -1.25, 3.0, 1e10};
  std::string payload(reinterpret_cast<const char*>(vals), sizeof(vals));
  write_raw_npy(dir.path() / "d.npy", "{'descr': '<f8', 'fortran_order': False, 'shape': (4, 1), }", payload);
  const auto m = read_npy(dir.path() / "d.npy");
  ASSERT_EQ(m.dims, 1);
  ASSERT_EQ(m.rows(), 4u);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(m.values[i], static_cast<float>(vals[i]));
}

TEST(Npy, RejectsUnsupportedFiles) {
  TempDir dir("npybad");
  const std::string four(16, '\0');
  write_raw_npy(dir.path() / "f.npy", "{'descr': '<f4', 'fortran_order': True, 'shape': (2, 2), }", four);
  EXPECT_THROW(read_npy(dir.path() / "f.npy"), IoError);
  write_raw_npy(dir.path() / "i.npy", "{'descr': '<i4', 'fortran_order': False, 'shape': (2, 2), }", four);
  EXPECT_THROW(read_npy(dir.path() / "i.npy"), IoError);
  write_raw_npy(dir.path() / "s.npy", "{'descr': '<f4', 'fortran_order': False, 'shape': (4,), }", four);
  EXPECT_THROW(read_npy(dir.path() / "s.npy"), IoError);
  write_raw_npy(dir.path() / "t.npy", "{'descr': '<f4', 'fortran_order': False, 'shape': (3, 2), }", four);
  EXPECT_THROW(read_npy(dir.path() / "t.npy"), IoError);
  std::ofstream(dir.path() / "junk.npy") << "hello";
  EXPECT_THROW(read_npy(dir.path() / "junk.npy"), IoError);
}

}  // namespace
}  // namespace skipshift
