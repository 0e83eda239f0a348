// SPDX-License-Identifier: Apache-2.0
// Apache-2.0, Copyright 2026 The meltcheck Authors

#include "common/png_codec.hpp"

#include <png.h>

#include <cstring>
#include <string>

#include "common/error.hpp"

namespace meltcheck {
namespace {

template <typename Raster>
Raster decode(std::span<const std::uint8_t> bytes, png_uint_32 format,
              std::vector<std::uint8_t> Raster::*buffer) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw Error(ErrorCode::io, std::string("png decode: ") + image.message);
  }
  image.format = format;
  Raster out;
  out.width = static_cast<int>(image.width);
  out.height = static_cast<int>(image.height);
  (out.*buffer).resize(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, (out.*buffer).data(), 0,
                             nullptr)) {
    std::string message = image.message;
    png_image_free(&image);
    throw Error(ErrorCode::io, "png decode: " + message);
  }
  return out;
}

std::vector<std::uint8_t> encode(int width, int height, png_uint_32 format,
                                 const std::vector<std::uint8_t>& pixels) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = format;
  if (pixels.size() != PNG_IMAGE_SIZE(image)) {
    throw Error(ErrorCode::invalid_argument,
                "png encode: buffer size does not match dimensions");
  }
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, pixels.data(), 0,
                                 nullptr)) {
    throw Error(ErrorCode::io, std::string("png encode: ") + image.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, pixels.data(),
                                 0, nullptr)) {
    throw Error(ErrorCode::io, std::string("png encode: ") + image.message);
  }
  out.resize(size);
  return out;
}

}  // namespace

Image decode_png_rgb(std::span<const std::uint8_t> bytes) {
  return decode<Image>(bytes, PNG_FORMAT_RGB, &Image::rgb);
}

GrayImage decode_png_gray(std::span<const std::uint8_t> bytes) {
  return decode<GrayImage>(bytes, PNG_FORMAT_GRAY, &GrayImage::pixels);
}

std::vector<std::uint8_t> encode_png(const Image& image) {
  return encode(image.width, image.height, PNG_FORMAT_RGB, image.rgb);
}

std::vector<std::uint8_t> encode_png(const GrayImage& image) {
  return encode(image.width, image.height, PNG_FORMAT_GRAY, image.pixels);
}

}  // namespace meltcheck
