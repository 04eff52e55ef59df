#include "lmlt/nn.hpp"

#include <cmath>
#include <numbers>

#include "lmlt/kernels.hpp"
#include "lmlt/tape.hpp"

namespace lmlt {

std::int64_t reflect_index(std::int64_t i, std::int64_t n) {
  if (n <= 1) return 0;
  const std::int64_t period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

void ConvSpec::validate() const {
  if (kernel < 1 || kernel % 2 == 0) throw ShapeError("conv kernel must be odd, got " + std::to_string(kernel));
  if (in_ch < 1 || out_ch < 1) throw ShapeError("conv channel counts must be positive");
  if (groups != 1 && groups != in_ch) throw ShapeError("conv groups must be 1 or in_ch");
  if (groups == in_ch && groups != 1 && in_ch != out_ch) throw ShapeError("depthwise conv needs in_ch == out_ch");
}

namespace {

// out[i] = x[src[i]]; the adjoint scatters back.
template <class T>
Tensor<T> gather(const char* op, const Tensor<T>& x, Shape out_shape, std::vector<std::int64_t> src) {
  std::vector<T> out(src.size());
  auto xd = x.data();
  for (std::size_t i = 0; i < src.size(); ++i) out[i] = xd[src[i]];
  Tensor<T> result(out_shape, std::move(out));
  record_if_tracked<T>(op, {x}, result, [&] {
    return [src = std::move(src)](std::span<const T> g, std::span<const std::span<T>> gin) {
      for (std::size_t i = 0; i < src.size(); ++i) gin[0][src[i]] += g[i];
    };
  });
  return result;
}

std::int64_t flat(const Shape& s, std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w) {
  return ((n * s.c + c) * s.h + h) * s.w + w;
}

// Source indices of a reflect-padded copy with the given offsets on each side.
std::vector<std::int64_t> pad_indices(const Shape& s, std::int64_t top, std::int64_t bottom, std::int64_t left,
                                      std::int64_t right) {
  const std::int64_t hp = s.h + top + bottom;
  const std::int64_t wp = s.w + left + right;
  std::vector<std::int64_t> src(static_cast<std::size_t>(s.n * s.c * hp * wp));
  std::size_t i = 0;
  for (std::int64_t n = 0; n < s.n; ++n) {
    for (std::int64_t c = 0; c < s.c; ++c) {
      for (std::int64_t y = 0; y < hp; ++y) {
        const std::int64_t sy = reflect_index(y - top, s.h);
        for (std::int64_t x = 0; x < wp; ++x) src[i++] = flat(s, n, c, sy, reflect_index(x - left, s.w));
      }
    }
  }
  return src;
}

double gelu_cdf(double x) { return 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2)); }

}  // namespace

template <class T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b, const ConvSpec& spec,
                 const Probe& probe) {
  spec.validate();
  const Shape& s = x.shape();
  if (s.c != spec.in_ch) {
    throw ShapeError("conv2d: input has " + std::to_string(s.c) + " channels, spec expects " +
                     std::to_string(spec.in_ch));
  }
  const Shape wshape{spec.out_ch, spec.in_ch / spec.groups, spec.kernel, spec.kernel};
  if (w.shape() != wshape) throw ShapeError("conv2d: weight " + w.shape().str() + ", expected " + wshape.str());
  if (b.defined() && b.numel() != spec.out_ch) {
    throw ShapeError("conv2d: bias " + b.shape().str() + " for " + std::to_string(spec.out_ch) + " outputs");
  }
  if (spec.bias && !b.defined()) throw ShapeError("conv2d: spec requires a bias");

  const std::int64_t p = spec.kernel / 2;
  const kernels::ConvGeometry g{s.n, spec.in_ch, spec.out_ch, s.h, s.w, spec.kernel, spec.groups};
  std::vector<std::int64_t> pad_src;
  std::vector<T> xpad;
  if (p == 0) {
    xpad.assign(x.data().begin(), x.data().end());
  } else {
    pad_src = pad_indices(s, p, p, p, p);
    xpad.resize(pad_src.size());
    auto xd = x.data();
    for (std::size_t i = 0; i < pad_src.size(); ++i) xpad[i] = xd[pad_src[i]];
  }

  Shape out_shape{s.n, spec.out_ch, s.h, s.w};
  std::vector<T> out(checked_numel(out_shape));
  kernels::conv2d_forward<T>(exec_mode(), g, xpad, w.data(), b.defined() ? b.data() : std::span<const T>{}, out);
  probe.add(s.n * s.h * s.w * spec.macs_per_pixel(), out_shape.numel());

  Tensor<T> result(out_shape, std::move(out));
  record_if_tracked<T>("conv2d", {x, w, b}, result, [&] {
    return [g, w, xpad = std::move(xpad), pad_src = std::move(pad_src)](std::span<const T> gy,
                                                                        std::span<const std::span<T>> gin) {
      const ExecMode mode = exec_mode();
      if (!gin[0].empty()) {
        if (pad_src.empty()) {
          kernels::conv2d_backward_input<T>(mode, g, w.data(), gy, gin[0]);
        } else {
          std::vector<T> gxpad(xpad.size(), T(0));
          kernels::conv2d_backward_input<T>(mode, g, w.data(), gy, gxpad);
          for (std::size_t i = 0; i < pad_src.size(); ++i) gin[0][pad_src[i]] += gxpad[i];
        }
      }
      if (!gin[1].empty() || !gin[2].empty()) {
        std::vector<T> gw_scratch;
        std::span<T> gw = gin[1];
        if (gw.empty()) {
          gw_scratch.assign(static_cast<std::size_t>(w.numel()), T(0));
          gw = gw_scratch;
        }
        kernels::conv2d_backward_weight<T>(mode, g, xpad, gy, gw, gin[2]);
      }
    };
  });
  return result;
}

template <class T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, double eps) {
  const Shape& s = x.shape();
  if (gamma.numel() != s.c || beta.numel() != s.c) {
    throw ShapeError("layer_norm: affine params " + gamma.shape().str() + "/" + beta.shape().str() + " for " +
                     std::to_string(s.c) + " channels");
  }
  const std::int64_t hw = s.h * s.w;
  std::vector<T> out(static_cast<std::size_t>(s.numel()));
  std::vector<double> xhat(out.size());
  std::vector<double> rstd(static_cast<std::size_t>(s.n * hw));
  auto xd = x.data();
  auto gd = gamma.data();
  auto bd = beta.data();
  for (std::int64_t n = 0; n < s.n; ++n) {
    for (std::int64_t p = 0; p < hw; ++p) {
      const std::int64_t base = n * s.c * hw + p;
      double mean = 0.0;
      for (std::int64_t c = 0; c < s.c; ++c) mean += xd[base + c * hw];
      mean /= static_cast<double>(s.c);
      double var = 0.0;
      for (std::int64_t c = 0; c < s.c; ++c) {
        const double d = xd[base + c * hw] - mean;
        var += d * d;
      }
      var /= static_cast<double>(s.c);
      const double r = 1.0 / std::sqrt(var + eps);
      rstd[n * hw + p] = r;
      for (std::int64_t c = 0; c < s.c; ++c) {
        const std::int64_t i = base + c * hw;
        xhat[i] = (xd[i] - mean) * r;
        out[i] = static_cast<T>(xhat[i] * gd[c] + bd[c]);
      }
    }
  }
  Tensor<T> result(s, std::move(out));
  record_if_tracked<T>("layer_norm", {x, gamma, beta}, result, [&] {
    return [s, gamma, xhat = std::move(xhat), rstd = std::move(rstd)](std::span<const T> g,
                                                                      std::span<const std::span<T>> gin) {
      const std::int64_t hw = s.h * s.w;
      auto gd = gamma.data();
      for (std::int64_t n = 0; n < s.n; ++n) {
        for (std::int64_t p = 0; p < hw; ++p) {
          const std::int64_t base = n * s.c * hw + p;
          double mean_gh = 0.0;
          double mean_ghx = 0.0;
          for (std::int64_t c = 0; c < s.c; ++c) {
            const std::int64_t i = base + c * hw;
            const double gh = static_cast<double>(g[i]) * gd[c];
            mean_gh += gh;
            mean_ghx += gh * xhat[i];
            if (!gin[1].empty()) gin[1][c] += static_cast<T>(g[i] * xhat[i]);
            if (!gin[2].empty()) gin[2][c] += g[i];
          }
          if (gin[0].empty()) continue;
          mean_gh /= static_cast<double>(s.c);
          mean_ghx /= static_cast<double>(s.c);
          const double r = rstd[n * hw + p];
          for (std::int64_t c = 0; c < s.c; ++c) {
            const std::int64_t i = base + c * hw;
            const double gh = static_cast<double>(g[i]) * gd[c];
            gin[0][i] += static_cast<T>(r * (gh - mean_gh - xhat[i] * mean_ghx));
          }
        }
      }
    };
  });
  return result;
}

template <class T>
Tensor<T> gelu(const Tensor<T>& x) {
  std::vector<T> out(x.data().begin(), x.data().end());
  for (T& v : out) v = static_cast<T>(v * gelu_cdf(v));
  Tensor<T> result(x.shape(), std::move(out));
  record_if_tracked<T>("gelu", {x}, result, [&] {
    return [x](std::span<const T> g, std::span<const std::span<T>> gin) {
      auto xd = x.data();
      const double inv_sqrt_2pi = 0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2;
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double v = xd[i];
        const double d = gelu_cdf(v) + v * inv_sqrt_2pi * std::exp(-0.5 * v * v);
        gin[0][i] += static_cast<T>(g[i] * d);
      }
    };
  });
  return result;
}

template <class T>
Tensor<T> pool_half(const Tensor<T>& x, PoolMode mode) {
  const Shape& s = x.shape();
  if (s.h % 2 != 0 || s.w % 2 != 0) throw ShapeError("pool_half needs even spatial dims, got " + s.str());
  const Shape os{s.n, s.c, s.h / 2, s.w / 2};
  std::vector<T> out(static_cast<std::size_t>(os.numel()));
  std::vector<std::int64_t> arg;
  if (mode == PoolMode::Max) arg.resize(out.size());
  auto xd = x.data();
  std::size_t o = 0;
  for (std::int64_t nc = 0; nc < s.n * s.c; ++nc) {
    for (std::int64_t y = 0; y < os.h; ++y) {
      for (std::int64_t xx = 0; xx < os.w; ++xx, ++o) {
        const std::int64_t i00 = (nc * s.h + 2 * y) * s.w + 2 * xx;
        const std::int64_t idx[4] = {i00, i00 + 1, i00 + s.w, i00 + s.w + 1};
        if (mode == PoolMode::Avg) {
          out[o] = static_cast<T>((xd[idx[0]] + xd[idx[1]] + xd[idx[2]] + xd[idx[3]]) * T(0.25));
        } else {
          std::int64_t best = idx[0];
          for (int k = 1; k < 4; ++k) {
            if (xd[idx[k]] > xd[best]) best = idx[k];
          }
          arg[o] = best;
          out[o] = xd[best];
        }
      }
    }
  }
  Tensor<T> result(os, std::move(out));
  record_if_tracked<T>("pool_half", {x}, result, [&] {
    return [s, os, arg = std::move(arg)](std::span<const T> g, std::span<const std::span<T>> gin) {
      if (!arg.empty()) {
        for (std::size_t o = 0; o < arg.size(); ++o) gin[0][arg[o]] += g[o];
        return;
      }
      std::size_t o = 0;
      for (std::int64_t nc = 0; nc < s.n * s.c; ++nc) {
        for (std::int64_t y = 0; y < os.h; ++y) {
          for (std::int64_t xx = 0; xx < os.w; ++xx, ++o) {
            const std::int64_t i00 = (nc * s.h + 2 * y) * s.w + 2 * xx;
            const T q = g[o] * T(0.25);
            gin[0][i00] += q;
            gin[0][i00 + 1] += q;
            gin[0][i00 + s.w] += q;
            gin[0][i00 + s.w + 1] += q;
          }
        }
      }
    };
  });
  return result;
}

namespace {

struct Tap {
  std::int64_t i0, i1;
  double w0, w1;
};

// Half-pixel-center linear taps for doubling an axis of length n.
std::vector<Tap> linear_taps(std::int64_t n) {
  std::vector<Tap> taps(static_cast<std::size_t>(2 * n));
  for (std::int64_t o = 0; o < 2 * n; ++o) {
    double src = (o + 0.5) / 2.0 - 0.5;
    if (src < 0) src = 0;
    auto i0 = static_cast<std::int64_t>(std::floor(src));
    if (i0 > n - 1) i0 = n - 1;
    const std::int64_t i1 = std::min(i0 + 1, n - 1);
    const double f = src - static_cast<double>(i0);
    taps[o] = {i0, i1, 1.0 - f, f};
  }
  return taps;
}

}  // namespace

template <class T>
Tensor<T> upsample2x(const Tensor<T>& x, UpsampleMode mode) {
  const Shape& s = x.shape();
  const Shape os{s.n, s.c, 2 * s.h, 2 * s.w};
  if (mode == UpsampleMode::Nearest) {
    std::vector<std::int64_t> src(checked_numel(os));
    std::size_t i = 0;
    for (std::int64_t nc = 0; nc < s.n * s.c; ++nc) {
      for (std::int64_t y = 0; y < os.h; ++y) {
        for (std::int64_t xx = 0; xx < os.w; ++xx) src[i++] = (nc * s.h + y / 2) * s.w + xx / 2;
      }
    }
    return gather("upsample_nearest", x, os, std::move(src));
  }
  const auto ty = linear_taps(s.h);
  const auto tx = linear_taps(s.w);
  std::vector<T> out(checked_numel(os));
  auto xd = x.data();
  std::size_t i = 0;
  for (std::int64_t nc = 0; nc < s.n * s.c; ++nc) {
    const T* plane = xd.data() + nc * s.h * s.w;
    for (std::int64_t y = 0; y < os.h; ++y) {
      const Tap& a = ty[y];
      for (std::int64_t xx = 0; xx < os.w; ++xx) {
        const Tap& b = tx[xx];
        const double v = a.w0 * (b.w0 * plane[a.i0 * s.w + b.i0] + b.w1 * plane[a.i0 * s.w + b.i1]) +
                         a.w1 * (b.w0 * plane[a.i1 * s.w + b.i0] + b.w1 * plane[a.i1 * s.w + b.i1]);
        out[i++] = static_cast<T>(v);
      }
    }
  }
  Tensor<T> result(os, std::move(out));
  record_if_tracked<T>("upsample_bilinear", {x}, result, [&] {
    return [s, os, ty, tx](std::span<const T> g, std::span<const std::span<T>> gin) {
      std::size_t i = 0;
      for (std::int64_t nc = 0; nc < s.n * s.c; ++nc) {
        T* plane = gin[0].data() + nc * s.h * s.w;
        for (std::int64_t y = 0; y < os.h; ++y) {
          const Tap& a = ty[y];
          for (std::int64_t xx = 0; xx < os.w; ++xx) {
            const Tap& b = tx[xx];
            const double gv = g[i++];
            plane[a.i0 * s.w + b.i0] += static_cast<T>(gv * a.w0 * b.w0);
            plane[a.i0 * s.w + b.i1] += static_cast<T>(gv * a.w0 * b.w1);
            plane[a.i1 * s.w + b.i0] += static_cast<T>(gv * a.w1 * b.w0);
            plane[a.i1 * s.w + b.i1] += static_cast<T>(gv * a.w1 * b.w1);
          }
        }
      }
    };
  });
  return result;
}

template <class T>
Tensor<T> pixel_shuffle(const Tensor<T>& x, std::int64_t r) {
  const Shape& s = x.shape();
  if (r < 1 || s.c % (r * r) != 0) {
    throw ShapeError("pixel_shuffle: " + std::to_string(s.c) + " channels not divisible by r^2 = " +
                     std::to_string(r * r));
  }
  const Shape os{s.n, s.c / (r * r), s.h * r, s.w * r};
  std::vector<std::int64_t> src(checked_numel(os));
  std::size_t i = 0;
  for (std::int64_t n = 0; n < os.n; ++n) {
    for (std::int64_t k = 0; k < os.c; ++k) {
      for (std::int64_t y = 0; y < os.h; ++y) {
        for (std::int64_t xx = 0; xx < os.w; ++xx) {
          const std::int64_t c = k * r * r + (y % r) * r + (xx % r);
          src[i++] = flat(s, n, c, y / r, xx / r);
        }
      }
    }
  }
  return gather("pixel_shuffle", x, os, std::move(src));
}

template <class T>
Tensor<T> pixel_unshuffle(const Tensor<T>& x, std::int64_t r) {
  const Shape& s = x.shape();
  if (r < 1 || s.h % r != 0 || s.w % r != 0) {
    throw ShapeError("pixel_unshuffle: spatial dims of " + s.str() + " not divisible by " + std::to_string(r));
  }
  const Shape os{s.n, s.c * r * r, s.h / r, s.w / r};
  std::vector<std::int64_t> src(checked_numel(os));
  std::size_t i = 0;
  for (std::int64_t n = 0; n < os.n; ++n) {
    for (std::int64_t c = 0; c < os.c; ++c) {
      const std::int64_t k = c / (r * r);
      const std::int64_t dy = (c % (r * r)) / r;
      const std::int64_t dx = c % r;
      for (std::int64_t y = 0; y < os.h; ++y) {
        for (std::int64_t xx = 0; xx < os.w; ++xx) src[i++] = flat(s, n, k, y * r + dy, xx * r + dx);
      }
    }
  }
  return gather("pixel_unshuffle", x, os, std::move(src));
}

template <class T>
Tensor<T> pad_reflect(const Tensor<T>& x, std::int64_t pad_h, std::int64_t pad_w) {
  const Shape& s = x.shape();
  if (s.h < 1 || s.w < 1) throw ShapeError("pad_reflect: empty spatial extent " + s.str());
  if (pad_h < 0 || pad_w < 0) throw ShapeError("pad_reflect: negative padding");
  if (pad_h == 0 && pad_w == 0) return x;
  return gather("pad_reflect", x, Shape{s.n, s.c, s.h + pad_h, s.w + pad_w}, pad_indices(s, 0, pad_h, 0, pad_w));
}

template <class T>
std::pair<Tensor<T>, WindowGrid> pad_to_grid(const Tensor<T>& x, std::int64_t M, std::int64_t levels) {
  if (M < 1 || levels < 1) throw ShapeError("pad_to_grid: M and levels must be >= 1");
  const Shape& s = x.shape();
  if (s.h < 1 || s.w < 1) throw ShapeError("pad_to_grid: input smaller than 1 px " + s.str());
  const std::int64_t mult = M << (levels - 1);
  const std::int64_t hp = (s.h + mult - 1) / mult * mult;
  const std::int64_t wp = (s.w + mult - 1) / mult * mult;
  WindowGrid grid{M, hp / M, wp / M, hp - s.h, wp - s.w};
  return {pad_reflect(x, grid.pad_h, grid.pad_w), grid};
}

template <class T>
Tensor<T> crop(const Tensor<T>& x, std::int64_t h, std::int64_t w) {
  const Shape& s = x.shape();
  if (h < 0 || w < 0 || h > s.h || w > s.w) {
    throw ShapeError("crop to " + std::to_string(h) + "x" + std::to_string(w) + " from " + s.str());
  }
  if (h == s.h && w == s.w) return x;
  const Shape os{s.n, s.c, h, w};
  std::vector<std::int64_t> src(checked_numel(os));
  std::size_t i = 0;
  for (std::int64_t nc = 0; nc < s.n * s.c; ++nc) {
    for (std::int64_t y = 0; y < h; ++y) {
      for (std::int64_t xx = 0; xx < w; ++xx) src[i++] = (nc * s.h + y) * s.w + xx;
    }
  }
  return gather("crop", x, os, std::move(src));
}

template <class T>
Tensor<T> window_partition(const Tensor<T>& x, std::int64_t M) {
  const Shape& s = x.shape();
  if (M < 1 || s.h % M != 0 || s.w % M != 0) {
    throw ShapeError("window_partition: " + s.str() + " not divisible by window " + std::to_string(M));
  }
  const std::int64_t rows = s.h / M;
  const std::int64_t cols = s.w / M;
  const Shape os{s.n * rows * cols, 1, M * M, s.c};
  std::vector<std::int64_t> src(checked_numel(os));
  std::size_t i = 0;
  for (std::int64_t n = 0; n < s.n; ++n) {
    for (std::int64_t wr = 0; wr < rows; ++wr) {
      for (std::int64_t wc = 0; wc < cols; ++wc) {
        for (std::int64_t t = 0; t < M * M; ++t) {
          const std::int64_t y = wr * M + t / M;
          const std::int64_t xx = wc * M + t % M;
          for (std::int64_t c = 0; c < s.c; ++c) src[i++] = flat(s, n, c, y, xx);
        }
      }
    }
  }
  return gather("window_partition", x, os, std::move(src));
}

template <class T>
Tensor<T> window_reverse(const Tensor<T>& windows, std::int64_t M, std::int64_t n, std::int64_t h, std::int64_t w) {
  const Shape& ws = windows.shape();
  if (M < 1 || h % M != 0 || w % M != 0) throw ShapeError("window_reverse: target not divisible by window");
  const std::int64_t rows = h / M;
  const std::int64_t cols = w / M;
  if (ws.n != n * rows * cols || ws.c != 1 || ws.h != M * M) {
    throw ShapeError("window_reverse: " + ws.str() + " is not a window stack for " + std::to_string(h) + "x" +
                     std::to_string(w));
  }
  const std::int64_t c = ws.w;
  const Shape os{n, c, h, w};
  std::vector<std::int64_t> src(checked_numel(os));
  std::size_t i = 0;
  for (std::int64_t b = 0; b < n; ++b) {
    for (std::int64_t ch = 0; ch < c; ++ch) {
      for (std::int64_t y = 0; y < h; ++y) {
        for (std::int64_t xx = 0; xx < w; ++xx) {
          const std::int64_t win = (b * rows + y / M) * cols + xx / M;
          const std::int64_t tok = (y % M) * M + xx % M;
          src[i++] = (win * M * M + tok) * c + ch;
        }
      }
    }
  }
  return gather("window_reverse", windows, os, std::move(src));
}

template <class T>
Tensor<T> slice_channels(const Tensor<T>& x, std::int64_t start, std::int64_t count) {
  const Shape& s = x.shape();
  if (start < 0 || count < 0 || start + count > s.c) {
    throw ShapeError("slice_channels [" + std::to_string(start) + ", +" + std::to_string(count) + ") of " + s.str());
  }
  const Shape os{s.n, count, s.h, s.w};
  std::vector<std::int64_t> src(checked_numel(os));
  std::size_t i = 0;
  const std::int64_t hw = s.h * s.w;
  for (std::int64_t n = 0; n < s.n; ++n) {
    for (std::int64_t c = 0; c < count; ++c) {
      for (std::int64_t p = 0; p < hw; ++p) src[i++] = (n * s.c + start + c) * hw + p;
    }
  }
  return gather("slice_channels", x, os, std::move(src));
}

template <class T>
Tensor<T> concat_channels(const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) throw ShapeError("concat_channels of nothing");
  const Shape& s0 = parts.front().shape();
  std::int64_t total = 0;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    if (s.n != s0.n || s.h != s0.h || s.w != s0.w) {
      throw ShapeError("concat_channels: " + s.str() + " does not match " + s0.str());
    }
    total += s.c;
  }
  const Shape os{s0.n, total, s0.h, s0.w};
  const std::int64_t hw = s0.h * s0.w;
  std::vector<T> out(checked_numel(os));
  std::int64_t offset = 0;
  for (const auto& p : parts) {
    auto pd = p.data();
    const std::int64_t c = p.shape().c;
    for (std::int64_t n = 0; n < s0.n; ++n) {
      std::copy(pd.begin() + n * c * hw, pd.begin() + (n + 1) * c * hw, out.begin() + (n * total + offset) * hw);
    }
    offset += c;
  }
  Tensor<T> result(os, std::move(out));
  std::vector<std::int64_t> widths;
  for (const auto& p : parts) widths.push_back(p.shape().c);
  record_if_tracked<T>("concat_channels", parts, result, [&] {
    return [widths, total, hw, batch = s0.n](std::span<const T> g, std::span<const std::span<T>> gin) {
      std::int64_t offset = 0;
      for (std::size_t k = 0; k < widths.size(); ++k) {
        const std::int64_t c = widths[k];
        if (!gin[k].empty()) {
          for (std::int64_t n = 0; n < batch; ++n) {
            const T* src = g.data() + (n * total + offset) * hw;
            T* dst = gin[k].data() + n * c * hw;
            for (std::int64_t i = 0; i < c * hw; ++i) dst[i] += src[i];
          }
        }
        offset += c;
      }
    };
  });
  return result;
}

#define LMLT_INSTANTIATE_NN(T)                                                                                  \
  template Tensor<T> conv2d<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, const ConvSpec&,          \
                               const Probe&);                                                                   \
  template Tensor<T> layer_norm<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, double);              \
  template Tensor<T> gelu<T>(const Tensor<T>&);                                                                 \
  template Tensor<T> pool_half<T>(const Tensor<T>&, PoolMode);                                                  \
  template Tensor<T> upsample2x<T>(const Tensor<T>&, UpsampleMode);                                             \
  template Tensor<T> pixel_shuffle<T>(const Tensor<T>&, std::int64_t);                                          \
  template Tensor<T> pixel_unshuffle<T>(const Tensor<T>&, std::int64_t);                                        \
  template Tensor<T> pad_reflect<T>(const Tensor<T>&, std::int64_t, std::int64_t);                              \
  template std::pair<Tensor<T>, WindowGrid> pad_to_grid<T>(const Tensor<T>&, std::int64_t, std::int64_t);       \
  template Tensor<T> crop<T>(const Tensor<T>&, std::int64_t, std::int64_t);                                     \
  template Tensor<T> window_partition<T>(const Tensor<T>&, std::int64_t);                                       \
  template Tensor<T> window_reverse<T>(const Tensor<T>&, std::int64_t, std::int64_t, std::int64_t, std::int64_t); \
  template Tensor<T> slice_channels<T>(const Tensor<T>&, std::int64_t, std::int64_t);                           \
  template Tensor<T> concat_channels<T>(const std::vector<Tensor<T>>&);

LMLT_INSTANTIATE_NN(float)
LMLT_INSTANTIATE_NN(double)
#undef LMLT_INSTANTIATE_NN

}  // namespace lmlt
