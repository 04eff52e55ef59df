#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <vector>

#include "lmlt/tensor.hpp"

namespace lmlt {

/// 8-bit raster, row-major, channels interleaved (RGB or single luma).
struct PlanarImage {
  std::int64_t width = 0;
  std::int64_t height = 0;
  std::int64_t channels = 3;
  std::vector<std::uint8_t> data;

  PlanarImage() = default;
  PlanarImage(std::int64_t w, std::int64_t h, std::int64_t c);
  PlanarImage(std::int64_t w, std::int64_t h, std::int64_t c, std::vector<std::uint8_t> samples);

  std::uint8_t& at(std::int64_t x, std::int64_t y, std::int64_t c) { return data[(y * width + x) * channels + c]; }
  std::uint8_t at(std::int64_t x, std::int64_t y, std::int64_t c) const {
    return data[(y * width + x) * channels + c];
  }
  friend bool operator==(const PlanarImage&, const PlanarImage&) = default;
};

/// Returned by psnr_y for identical inputs.
inline constexpr double kPsnrIdentical = std::numeric_limits<double>::infinity();

/// 16 + 65.481 R + 128.553 G + 24.966 B with R, G, B in [0, 1].
double luma(double r, double g, double b);

/// Y plane (values in [16, 235]) of an RGB image; a 1-channel image is taken
/// as Y directly. Throws FormatError for other channel counts.
std::vector<double> rgb_to_y(const PlanarImage& img);

/// PSNR over Y after removing a `shave`-pixel border; +inf when identical.
double psnr_y(const PlanarImage& a, const PlanarImage& b, std::int64_t shave);

/// Single-scale SSIM on Y: 11x11 Gaussian window (sigma 1.5), K1 0.01,
/// K2 0.03, L 255, averaged over valid window positions.
double ssim_y(const PlanarImage& a, const PlanarImage& b, std::int64_t shave);

/// Cubic convolution kernel with a = -0.5.
double cubic_kernel(double x);

/// Resamples planar float data (c planes of h x w) to out_h x out_w: half-pixel
/// centers, kernel widened by 1/scale when shrinking, normalized weights,
/// clamped edges.
std::vector<double> bicubic_resample(const std::vector<double>& planes, std::int64_t c, std::int64_t h, std::int64_t w,
                                     std::int64_t out_h, std::int64_t out_w);

/// Output size ceil(w * factor) x ceil(h * factor).
PlanarImage bicubic_resize(const PlanarImage& img, double factor);
PlanarImage bicubic_resize_to(const PlanarImage& img, std::int64_t out_w, std::int64_t out_h);

/// (1, c, h, w) tensor with samples / 255.
TensorF image_to_tensor(const PlanarImage& img);
/// Clamps to [0, 1], scales by 255 and rounds. Uses batch entry 0.
PlanarImage tensor_to_image(const TensorF& t);

/// 8-bit RGB / RGBA / gray PNG. Alpha is dropped, palettes expanded, gray
/// stays 1-channel. Throws UnsupportedDepthError for 16-bit data and IoError
/// for unreadable or malformed files.
PlanarImage png_load(const std::filesystem::path& path);
void png_save(const PlanarImage& img, const std::filesystem::path& path);

}  // namespace lmlt
