#pragma once

#include <cstdint>
#include <vector>

#include "lmlt/config.hpp"
#include "lmlt/instrument.hpp"
#include "lmlt/nn.hpp"
#include "lmlt/tensor.hpp"

namespace lmlt {

/// Head i (0 = uppermost) sees the feature pooled pool_levels[i] times.
struct HeadPlan {
  std::int64_t heads = 1;
  std::int64_t head_dim = 0;
  std::int64_t depth = 1;
  std::vector<std::int64_t> pool_levels;

  static HeadPlan make(std::int64_t channels, std::int64_t heads, std::int64_t depth, bool pooling);
  static HeadPlan from_config(const ModelConfig& cfg);
};

/// One windowed attention layer of one head. Projection weights are
/// (d, d, 1, 1) with (d, 1, 1, 1) biases; biases may be undefined.
template <class T>
struct AttnParams {
  Tensor<T> wq, bq, wk, bk, wv, bv, wo, bo;
  Tensor<T> lepe_w;  // (d, 1, 3, 3) depthwise
  Tensor<T> lepe_b;  // (d, 1, 1, 1)
  Tensor<T> rpe_table;  // (1, 1, 2M-1, 2M-1)
};

struct AttnOptions {
  std::int64_t window = 8;
  PeMode pe = PeMode::Lepe;
  bool scale_logits = true;
};

/// (1, 1, M*M, M*M) bias with entry [i][j] = table[dy + M-1][dx + M-1],
/// (dy, dx) the offset of token i from token j.
template <class T>
Tensor<T> rpe_bias(const Tensor<T>& table, std::int64_t M);

template <class T>
Tensor<T> window_self_attention(const Tensor<T>& x, const AttnParams<T>& p, const AttnOptions& opt,
                                const Probe& probe = {});

template <class T>
struct LmltTrace {
  std::vector<Tensor<T>> head_inputs;  // after the low-to-high addition
  std::vector<Tensor<T>> head_outputs;  // before restoring to full size
};

/// params[i][l] is layer l of head i. merge_w is (D, D, 1, 1), merge_b (D, 1, 1, 1).
template <class T>
Tensor<T> lmlt_forward(const Tensor<T>& x, const HeadPlan& plan, const std::vector<std::vector<AttnParams<T>>>& params,
                       const Tensor<T>& merge_w, const Tensor<T>& merge_b, const AblationFlags& flags,
                       std::int64_t window, LmltTrace<T>* trace = nullptr, const Probe& probe = {});

/// 4 hw/4^i (D/head)^2 + 2 M^2 hw/4^i (D/head), evaluated on the grid pooled
/// i times (ceil halving), which is exact whenever 2^i divides h and w.
std::int64_t flops_lmlt_head(std::int64_t h, std::int64_t w, std::int64_t D, std::int64_t head, std::int64_t M,
                             std::int64_t i);

/// 4 hw D^2 + 2 M^2 hw D
std::int64_t flops_wsa(std::int64_t h, std::int64_t w, std::int64_t D, std::int64_t M);

}  // namespace lmlt
