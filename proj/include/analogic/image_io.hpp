// Copyright (c) 2026 The analogic authors
// SPDX-License-Identifier: Apache-2.0

#ifndef ANALOGIC_IMAGE_IO_HPP
#define ANALOGIC_IMAGE_IO_HPP

#include <cstdint>
#include <filesystem>
#include <vector>

#include "analogic/gist.hpp"

namespace analogic {

struct DepthQuantization {
  double near = 0.1;
  double far = 10.0;
  int bits = 16;

  std::uint16_t encode(double d) const;
  double decode(std::uint16_t q) const;
};

//! Rounds to the 8-bit grid after clamping to [0, 1].
Image quantize8(const Image& img);
DepthMap quantize_depth(const DepthMap& depth, const DepthQuantization& q);

//! 8-bit RGB. Values are clamped to [0, 1] on export.
void write_png_rgb(const std::filesystem::path& path, const Image& img);
Image read_png_rgb(const std::filesystem::path& path);

//! 16-bit greyscale depth, linearly quantised over [near, far].
void write_png_depth(const std::filesystem::path& path, const DepthMap& depth,
                     const DepthQuantization& q);
DepthMap read_png_depth(const std::filesystem::path& path, const DepthQuantization& q);

//! Images placed side by side with a one-pixel gap (contact sheets and
//! interpolation filmstrips).
Image hconcat(const std::vector<Image>& images);

}  // namespace analogic

#endif  // ANALOGIC_IMAGE_IO_HPP
