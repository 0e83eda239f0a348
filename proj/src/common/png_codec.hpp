// SPDX-License-Identifier: Apache-2.0
// Apache-2.0, Copyright 2026 The meltcheck Authors

#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace meltcheck {

/// 8-bit RGB raster, row-major, no padding.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }
  friend bool operator==(const Image&, const Image&) = default;
};

/// 8-bit single-channel raster. Masks use 255 = fill, 0 = keep.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }
  friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

// Any PNG colour type is accepted; alpha is composited away by libpng.
Image decode_png_rgb(std::span<const std::uint8_t> bytes);
GrayImage decode_png_gray(std::span<const std::uint8_t> bytes);

// Encoding is deterministic for a given libpng build.
std::vector<std::uint8_t> encode_png(const Image& image);
std::vector<std::uint8_t> encode_png(const GrayImage& image);

}  // namespace meltcheck
