#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "lmlt/instrument.hpp"
#include "lmlt/tensor.hpp"

namespace lmlt {

/// Reflect index for a coordinate outside [0, n): mirrors about the edge
/// pixels without repeating them, with period 2(n-1). n == 1 maps to 0.
std::int64_t reflect_index(std::int64_t i, std::int64_t n);

struct ConvSpec {
  std::int64_t in_ch = 0;
  std::int64_t out_ch = 0;
  std::int64_t kernel = 1;
  std::int64_t groups = 1;
  bool bias = true;

  void validate() const;
  std::int64_t weight_numel() const { return out_ch * (in_ch / groups) * kernel * kernel; }
  std::int64_t macs_per_pixel() const { return kernel * kernel * (in_ch / groups) * out_ch; }
};

/// Stride-1 cross-correlation with reflect same-padding. `b` may be undefined.
template <class T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b, const ConvSpec& spec,
                 const Probe& probe = {});

/// Per-position normalization across channels, then per-channel affine.
template <class T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, double eps = 1e-6);

/// Exact GELU, x * Phi(x).
template <class T>
Tensor<T> gelu(const Tensor<T>& x);

enum class PoolMode { Avg, Max };
enum class UpsampleMode { Nearest, Bilinear };

template <class T>
Tensor<T> pool_half(const Tensor<T>& x, PoolMode mode = PoolMode::Avg);

/// Bilinear uses half-pixel centers (align_corners = false) with edge clamp.
template <class T>
Tensor<T> upsample2x(const Tensor<T>& x, UpsampleMode mode = UpsampleMode::Nearest);

template <class T>
Tensor<T> pixel_shuffle(const Tensor<T>& x, std::int64_t r);
template <class T>
Tensor<T> pixel_unshuffle(const Tensor<T>& x, std::int64_t r);

struct WindowGrid {
  std::int64_t window = 1;
  std::int64_t rows = 0;
  std::int64_t cols = 0;
  std::int64_t pad_h = 0;
  std::int64_t pad_w = 0;

  std::int64_t count() const { return rows * cols; }
};

/// Pads bottom/right with reflection.
template <class T>
Tensor<T> pad_reflect(const Tensor<T>& x, std::int64_t pad_h, std::int64_t pad_w);

/// Pads so h and w are multiples of M * 2^(levels-1).
template <class T>
std::pair<Tensor<T>, WindowGrid> pad_to_grid(const Tensor<T>& x, std::int64_t M, std::int64_t levels);

/// Top-left h x w region.
template <class T>
Tensor<T> crop(const Tensor<T>& x, std::int64_t h, std::int64_t w);

/// (n, c, h, w) -> (n*N, 1, M*M, c), windows and tokens row-major.
template <class T>
Tensor<T> window_partition(const Tensor<T>& x, std::int64_t M);

/// Inverse of window_partition for a (n, c, h, w) layout.
template <class T>
Tensor<T> window_reverse(const Tensor<T>& windows, std::int64_t M, std::int64_t n, std::int64_t h, std::int64_t w);

template <class T>
Tensor<T> slice_channels(const Tensor<T>& x, std::int64_t start, std::int64_t count);

template <class T>
Tensor<T> concat_channels(const std::vector<Tensor<T>>& parts);

}  // namespace lmlt
