#include "skipshift/png_io.hpp"

#include <png.h>

#include <cstring>

#include "skipshift/fs_util.hpp"

namespace skipshift {

namespace fs = std::filesystem;

namespace {

struct PngReader {
  png_image image;

  explicit PngReader(const fs::path& path) {
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.c_str())) {
      throw IoError("cannot read PNG " + path.string() + ": " + image.message);
    }
  }
  ~PngReader() { png_image_free(&image); }
  PngReader(const PngReader&) = delete;
  PngReader& operator=(const PngReader&) = delete;

  void finish(const fs::path& path, png_uint_32 format, void* buffer) {
    image.format = format;
    if (!png_image_finish_read(&image, nullptr, buffer, 0, nullptr)) {
      throw IoError("cannot decode PNG " + path.string() + ": " + image.message);
    }
  }
};

void write_raw(const fs::path& path, int width, int height, png_uint_32 format, const void* data) {
  commit_atomically(path, [&](const fs::path& tmp) {
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(width);
    image.height = static_cast<png_uint_32>(height);
    image.format = format;
    if (!png_image_write_to_file(&image, tmp.c_str(), 0, data, 0, nullptr)) {
      const std::string msg = image.message;
      png_image_free(&image);
      throw IoError("cannot write PNG " + path.string() + ": " + msg);
    }
  });
}

}  // namespace

RgbImage read_png_rgb(const fs::path& path) {
  PngReader reader(path);
  RgbImage out(static_cast<int>(reader.image.width), static_cast<int>(reader.image.height));
  reader.finish(path, PNG_FORMAT_RGB, out.bytes().data());
  return out;
}

GrayImage read_png_gray(const fs::path& path, bool binarize) {
  PngReader reader(path);
  if ((reader.image.format & PNG_FORMAT_FLAG_COLOR) != 0) {
    throw IoError("expected a single-channel PNG: " + path.string());
  }
  GrayImage out(static_cast<int>(reader.image.width), static_cast<int>(reader.image.height));
  reader.finish(path, PNG_FORMAT_GRAY, out.bytes().data());
  if (binarize) {
    for (auto& v : out.bytes()) v = v != 0 ? 1 : 0;
  }
  return out;
}

void write_png(const fs::path& path, const RgbImage& image) {
  write_raw(path, image.width(), image.height(), PNG_FORMAT_RGB, image.bytes().data());
}

void write_png(const fs::path& path, const GrayImage& image, bool mask_scale) {
  if (!mask_scale) {
    write_raw(path, image.width(), image.height(), PNG_FORMAT_GRAY, image.bytes().data());
    return;
  }
  GrayImage scaled = image;
  for (auto& v : scaled.bytes()) v = v != 0 ? 255 : 0;
  write_raw(path, image.width(), image.height(), PNG_FORMAT_GRAY, scaled.bytes().data());
}

}  // namespace skipshift
