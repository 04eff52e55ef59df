#include <algorithm>
#include <atomic>
#include <vector>

#include "lmlt/kernels.hpp"

namespace lmlt {

namespace {
std::atomic<ExecMode> global_mode{ExecMode::Parallel};
}

void set_exec_mode(ExecMode mode) { global_mode.store(mode); }
ExecMode exec_mode() { return global_mode.load(); }

namespace kernels {
namespace {

// One output plane (batch n, output channel o).
template <class T>
void conv_forward_plane(const ConvGeometry& g, std::int64_t n, std::int64_t o, const T* xpad, const T* weight,
                        const T* bias, T* y) {
  const std::int64_t hp = g.padded_h();
  const std::int64_t wp = g.padded_w();
  const std::int64_t cpg = g.in_per_group();
  const std::int64_t group = o / g.out_per_group();
  T* out = y + (n * g.out_ch + o) * g.h * g.w;
  std::fill(out, out + g.h * g.w, bias ? bias[o] : T(0));
  for (std::int64_t cl = 0; cl < cpg; ++cl) {
    const std::int64_t c = group * cpg + cl;
    const T* plane = xpad + (n * g.in_ch + c) * hp * wp;
    const T* kern = weight + (o * cpg + cl) * g.k * g.k;
    for (std::int64_t ky = 0; ky < g.k; ++ky) {
      for (std::int64_t kx = 0; kx < g.k; ++kx) {
        const T wv = kern[ky * g.k + kx];
        for (std::int64_t yy = 0; yy < g.h; ++yy) {
          const T* src = plane + (yy + ky) * wp + kx;
          T* dst = out + yy * g.w;
          for (std::int64_t xx = 0; xx < g.w; ++xx) dst[xx] += wv * src[xx];
        }
      }
    }
  }
}

// d/d(xpad) for one padded input plane (batch n, input channel c).
template <class T>
void conv_backward_input_plane(const ConvGeometry& g, std::int64_t n, std::int64_t c, const T* weight, const T* gy,
                               T* gxpad) {
  const std::int64_t wp = g.padded_w();
  const std::int64_t cpg = g.in_per_group();
  const std::int64_t opg = g.out_per_group();
  const std::int64_t group = c / cpg;
  const std::int64_t cl = c % cpg;
  T* plane = gxpad + (n * g.in_ch + c) * g.padded_h() * wp;
  for (std::int64_t ol = 0; ol < opg; ++ol) {
    const std::int64_t o = group * opg + ol;
    const T* go = gy + (n * g.out_ch + o) * g.h * g.w;
    const T* kern = weight + (o * cpg + cl) * g.k * g.k;
    for (std::int64_t ky = 0; ky < g.k; ++ky) {
      for (std::int64_t kx = 0; kx < g.k; ++kx) {
        const T wv = kern[ky * g.k + kx];
        for (std::int64_t yy = 0; yy < g.h; ++yy) {
          T* dst = plane + (yy + ky) * wp + kx;
          const T* src = go + yy * g.w;
          for (std::int64_t xx = 0; xx < g.w; ++xx) dst[xx] += wv * src[xx];
        }
      }
    }
  }
}

// d/d(weight) for every kernel tap of output channel o, summed over the batch
// in ascending order.
template <class T>
void conv_backward_weight_channel(const ConvGeometry& g, std::int64_t o, const T* xpad, const T* gy, T* gw, T* gb) {
  const std::int64_t hp = g.padded_h();
  const std::int64_t wp = g.padded_w();
  const std::int64_t cpg = g.in_per_group();
  const std::int64_t group = o / g.out_per_group();
  for (std::int64_t cl = 0; cl < cpg; ++cl) {
    const std::int64_t c = group * cpg + cl;
    for (std::int64_t ky = 0; ky < g.k; ++ky) {
      for (std::int64_t kx = 0; kx < g.k; ++kx) {
        double acc = 0.0;
        for (std::int64_t n = 0; n < g.batch; ++n) {
          const T* plane = xpad + (n * g.in_ch + c) * hp * wp;
          const T* go = gy + (n * g.out_ch + o) * g.h * g.w;
          for (std::int64_t yy = 0; yy < g.h; ++yy) {
            const T* src = plane + (yy + ky) * wp + kx;
            const T* gr = go + yy * g.w;
            for (std::int64_t xx = 0; xx < g.w; ++xx) acc += static_cast<double>(gr[xx]) * src[xx];
          }
        }
        gw[((o * cpg + cl) * g.k + ky) * g.k + kx] += static_cast<T>(acc);
      }
    }
  }
  if (gb) {
    double acc = 0.0;
    for (std::int64_t n = 0; n < g.batch; ++n) {
      const T* go = gy + (n * g.out_ch + o) * g.h * g.w;
      for (std::int64_t i = 0; i < g.h * g.w; ++i) acc += go[i];
    }
    gb[o] += static_cast<T>(acc);
  }
}

}  // namespace

template <class T>
void conv2d_forward(ExecMode mode, const ConvGeometry& g, std::span<const T> xpad, std::span<const T> weight,
                    std::span<const T> bias, std::span<T> y) {
  const T* b = bias.empty() ? nullptr : bias.data();
  const std::int64_t jobs = g.batch * g.out_ch;
  if (mode == ExecMode::Parallel) {
#pragma omp parallel for schedule(static)
    for (std::int64_t j = 0; j < jobs; ++j) {
      conv_forward_plane(g, j / g.out_ch, j % g.out_ch, xpad.data(), weight.data(), b, y.data());
    }
  } else {
    for (std::int64_t j = 0; j < jobs; ++j) {
      conv_forward_plane(g, j / g.out_ch, j % g.out_ch, xpad.data(), weight.data(), b, y.data());
    }
  }
}

template <class T>
void conv2d_backward_input(ExecMode mode, const ConvGeometry& g, std::span<const T> weight, std::span<const T> gy,
                           std::span<T> gxpad) {
  const std::int64_t jobs = g.batch * g.in_ch;
  if (mode == ExecMode::Parallel) {
#pragma omp parallel for schedule(static)
    for (std::int64_t j = 0; j < jobs; ++j) {
      conv_backward_input_plane(g, j / g.in_ch, j % g.in_ch, weight.data(), gy.data(), gxpad.data());
    }
  } else {
    for (std::int64_t j = 0; j < jobs; ++j) {
      conv_backward_input_plane(g, j / g.in_ch, j % g.in_ch, weight.data(), gy.data(), gxpad.data());
    }
  }
}

template <class T>
void conv2d_backward_weight(ExecMode mode, const ConvGeometry& g, std::span<const T> xpad, std::span<const T> gy,
                            std::span<T> gw, std::span<T> gb) {
  T* bptr = gb.empty() ? nullptr : gb.data();
  if (mode == ExecMode::Parallel) {
#pragma omp parallel for schedule(static)
    for (std::int64_t o = 0; o < g.out_ch; ++o) {
      conv_backward_weight_channel(g, o, xpad.data(), gy.data(), gw.data(), bptr);
    }
  } else {
    for (std::int64_t o = 0; o < g.out_ch; ++o) {
      conv_backward_weight_channel(g, o, xpad.data(), gy.data(), gw.data(), bptr);
    }
  }
}

#define LMLT_INSTANTIATE_CONV(T)                                                                              \
  template void conv2d_forward<T>(ExecMode, const ConvGeometry&, std::span<const T>, std::span<const T>,    \
                                  std::span<const T>, std::span<T>);                                          \
  template void conv2d_backward_input<T>(ExecMode, const ConvGeometry&, std::span<const T>, std::span<const T>, \
                                         std::span<T>);                                                       \
  template void conv2d_backward_weight<T>(ExecMode, const ConvGeometry&, std::span<const T>, std::span<const T>, \
                                          std::span<T>, std::span<T>);

LMLT_INSTANTIATE_CONV(float)
LMLT_INSTANTIATE_CONV(double)
#undef LMLT_INSTANTIATE_CONV

}  // namespace kernels
}  // namespace lmlt
