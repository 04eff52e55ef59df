#pragma once

#include <string>
#include <vector>

#include "lmlt/attention.hpp"
#include "lmlt/config.hpp"
#include "lmlt/gradcheck.hpp"
#include "lmlt/instrument.hpp"
#include "lmlt/weights.hpp"

namespace lmlt {

template <class T>
struct BlockParams {
  Tensor<T> ln1_w, ln1_b;
  std::vector<std::vector<AttnParams<T>>> heads;  // [head][layer]
  Tensor<T> merge_w, merge_b;  // undefined without aggregation
  Tensor<T> ln2_w, ln2_b;
  Tensor<T> ccm1_w, ccm1_b, ccm2_w, ccm2_b;
};

/// Pulls block b's tensors out of the store (shared handles, no copies).
template <class T>
BlockParams<T> block_params(const WeightStore<T>& ws, const ModelConfig& cfg, std::int64_t b);

/// conv3x3 (D -> gD) -> GELU -> conv1x1 (gD -> D)
template <class T>
Tensor<T> ccm_forward(const Tensor<T>& x, const Tensor<T>& w1, const Tensor<T>& b1, const Tensor<T>& w2,
                      const Tensor<T>& b2, const Probe& probe = {});

/// y = x + LMLT(LN(x)); z = y + CCM(LN(y))
template <class T>
Tensor<T> lhs_block_forward(const Tensor<T>& x, const BlockParams<T>& p, const ModelConfig& cfg,
                            const Probe& probe = {});

/// (n, 3, h, w) in [0, 1] -> (n, 3, s h, s w). Pads to the grid internally and
/// crops the result; no clamping.
template <class T>
Tensor<T> model_forward(const Tensor<T>& img, const WeightStore<T>& ws, const ModelConfig& cfg,
                        MacCounter* counter = nullptr);

struct ModelGradcheckOptions {
  std::int64_t height = 16;
  std::int64_t width = 16;
  std::uint64_t seed = 1;
  GradcheckOptions fd{1e-4, 1e-3, {}};
};

/// Central-difference check of every parameter of a 64-bit model built by
/// init_weights(cfg, seed) against loss = mean(model(x) * r), with x uniform
/// in [0, 1] and r uniform in [-1, 1].
CheckReport gradcheck_model(const ModelConfig& cfg, const ModelGradcheckOptions& opts = {});

}  // namespace lmlt
