#pragma once

#include <cstdint>
#include <span>

namespace lmlt {

/// Serial runs every kernel loop on the calling thread; Parallel splits the
/// outermost independent loop across OpenMP threads. Both variants run the
/// same per-output body in the same accumulation order, so results are
/// bit-identical.
enum class ExecMode { Serial, Parallel };

void set_exec_mode(ExecMode mode);
ExecMode exec_mode();

/// RAII override of the process-wide execution mode.
class ExecModeScope {
 public:
  explicit ExecModeScope(ExecMode mode) : previous_(exec_mode()) { set_exec_mode(mode); }
  ~ExecModeScope() { set_exec_mode(previous_); }
  ExecModeScope(const ExecModeScope&) = delete;
  ExecModeScope& operator=(const ExecModeScope&) = delete;

 private:
  ExecMode previous_;
};

namespace kernels {

// Stride-1 convolution over an input that has already been padded by k-1
// pixels in each spatial dimension (k/2 on every side), so the output has the
// unpadded extent (h, w).
struct ConvGeometry {
  std::int64_t batch;
  std::int64_t in_ch;
  std::int64_t out_ch;
  std::int64_t h;  // output height
  std::int64_t w;  // output width
  std::int64_t k;
  std::int64_t groups;

  std::int64_t padded_h() const { return h + k - 1; }
  std::int64_t padded_w() const { return w + k - 1; }
  std::int64_t in_per_group() const { return in_ch / groups; }
  std::int64_t out_per_group() const { return out_ch / groups; }
};

/// y[n,o] = bias[o] + sum_c sum_ky,kx w[o,c,ky,kx] * xpad[n,c,y+ky,x+kx]
template <class T>
void conv2d_forward(ExecMode mode, const ConvGeometry& g, std::span<const T> xpad, std::span<const T> weight,
                    std::span<const T> bias, std::span<T> y);

/// Accumulates d(loss)/d(xpad) into gxpad.
template <class T>
void conv2d_backward_input(ExecMode mode, const ConvGeometry& g, std::span<const T> weight, std::span<const T> gy,
                           std::span<T> gxpad);

/// Accumulates d(loss)/d(weight) into gw and, when non-empty, d(loss)/d(bias) into gb.
template <class T>
void conv2d_backward_weight(ExecMode mode, const ConvGeometry& g, std::span<const T> xpad, std::span<const T> gy,
                            std::span<T> gw, std::span<T> gb);

// Batched matrix product out[b] (+)= op(a[b]) * op(b[b]) where op transposes
// when requested. Row-major storage: a is (rows x inner) or, transposed,
// (inner x rows); b is (inner x cols) or (cols x inner). Accumulates in double.
struct BmmGeometry {
  std::int64_t batch;
  std::int64_t rows;
  std::int64_t inner;
  std::int64_t cols;
  bool trans_a = false;
  bool trans_b = false;
};

template <class T>
void bmm(ExecMode mode, const BmmGeometry& g, std::span<const T> a, std::span<const T> b, std::span<T> out,
         bool accumulate);

}  // namespace kernels
}  // namespace lmlt
