#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "cylin/tensor.hpp"

namespace cylin {

/// 8-bit interleaved RGB raster.
struct Image8 {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> rgb;

  bool operator==(const Image8&) const = default;
};

/// Binary P6 with maxval 255.
Image8 read_ppm(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const Image8& image);

/// Binary P5 greyscale.
void write_pgm(const std::filesystem::path& path, std::size_t width, std::size_t height,
               const std::vector<std::uint8_t>& grey);

/// v / 127.5 - 1, as a [1, 3, H, W] tensor.
TensorF image_to_tensor(const Image8& image);
/// Inverse mapping with round-half-up and clamping to [0, 255]. Uses batch 0.
Image8 tensor_to_image(const TensorF& tensor);

std::uint8_t to_byte(double value);

/// Linear map of [lo, hi] onto [0, 255] for one [H, W] plane.
std::vector<std::uint8_t> plane_to_grey(std::span<const double> plane, double lo, double hi);

}  // namespace cylin
