#include "lmlt/attention.hpp"

#include <cmath>

#include "lmlt/ops.hpp"
#include "lmlt/tape.hpp"

namespace lmlt {

HeadPlan HeadPlan::make(std::int64_t channels, std::int64_t heads, std::int64_t depth, bool pooling) {
  if (heads < 1) throw ConfigError("head count must be >= 1");
  if (channels % heads != 0) {
    throw ConfigError("channels (" + std::to_string(channels) + ") not divisible by heads (" + std::to_string(heads) +
                      ")");
  }
  if (depth < 1 || depth > 3) throw ConfigError("depth must be 1, 2 or 3");
  HeadPlan plan{heads, channels / heads, depth, {}};
  for (std::int64_t i = 0; i < heads; ++i) plan.pool_levels.push_back(pooling ? i : 0);
  return plan;
}

HeadPlan HeadPlan::from_config(const ModelConfig& cfg) {
  return make(cfg.channels, cfg.heads, cfg.flags.depth, cfg.flags.pooling);
}

template <class T>
Tensor<T> rpe_bias(const Tensor<T>& table, std::int64_t M) {
  const std::int64_t side = 2 * M - 1;
  if (table.shape() != Shape{1, 1, side, side}) {
    throw ShapeError("rpe table " + table.shape().str() + " for window " + std::to_string(M));
  }
  const std::int64_t tokens = M * M;
  std::vector<std::int64_t> src(static_cast<std::size_t>(tokens * tokens));
  for (std::int64_t i = 0; i < tokens; ++i) {
    for (std::int64_t j = 0; j < tokens; ++j) {
      const std::int64_t dy = i / M - j / M + M - 1;
      const std::int64_t dx = i % M - j % M + M - 1;
      src[i * tokens + j] = dy * side + dx;
    }
  }
  std::vector<T> out(src.size());
  auto td = table.data();
  for (std::size_t k = 0; k < src.size(); ++k) out[k] = td[src[k]];
  Tensor<T> result({1, 1, tokens, tokens}, std::move(out));
  record_if_tracked<T>("rpe_bias", {table}, result, [&] {
    return [src = std::move(src)](std::span<const T> g, std::span<const std::span<T>> gin) {
      for (std::size_t k = 0; k < src.size(); ++k) gin[0][src[k]] += g[k];
    };
  });
  return result;
}

namespace {

template <class T>
Tensor<T> project(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b, const Probe& probe) {
  const std::int64_t d = x.shape().c;
  return conv2d(x, w, b, ConvSpec{d, w.shape().n, 1, 1, b.defined()}, probe);
}

}  // namespace

template <class T>
Tensor<T> window_self_attention(const Tensor<T>& x, const AttnParams<T>& p, const AttnOptions& opt,
                                const Probe& probe) {
  const Shape& s = x.shape();
  const std::int64_t M = opt.window;
  if (M < 1 || s.h % M != 0 || s.w % M != 0) {
    throw ShapeError("window attention: " + s.str() + " not divisible by window " + std::to_string(M));
  }
  const std::int64_t d = s.c;
  Tensor<T> q = project(x, p.wq, p.bq, probe.sub("wq"));
  Tensor<T> k = project(x, p.wk, p.bk, probe.sub("wk"));
  Tensor<T> v = project(x, p.wv, p.bv, probe.sub("wv"));

  Tensor<T> qw = window_partition(q, M);
  Tensor<T> kw = window_partition(k, M);
  Tensor<T> vw = window_partition(v, M);
  Tensor<T> scores = bmm(qw, kw, false, true, probe.sub("qk"));
  if (opt.pe == PeMode::Rpe) {
    if (!p.rpe_table.defined()) throw ConfigError("rpe mode without an rpe table");
    scores = add(scores, rpe_bias(p.rpe_table, M));
  }
  const T factor = opt.scale_logits ? static_cast<T>(1.0 / std::sqrt(static_cast<double>(d))) : T(1);
  Tensor<T> attn = softmax_rows(scores, factor);
  Tensor<T> mixed = window_reverse(bmm(attn, vw, false, false, probe.sub("av")), M, s.n, s.h, s.w);
  if (opt.pe == PeMode::Lepe) {
    if (!p.lepe_w.defined()) throw ConfigError("lepe mode without a lepe kernel");
    mixed = add(mixed, conv2d(v, p.lepe_w, p.lepe_b, ConvSpec{d, d, 3, d, p.lepe_b.defined()}, probe.sub("lepe")));
  }
  return project(mixed, p.wo, p.bo, probe.sub("wo"));
}

template <class T>
Tensor<T> lmlt_forward(const Tensor<T>& x, const HeadPlan& plan, const std::vector<std::vector<AttnParams<T>>>& params,
                       const Tensor<T>& merge_w, const Tensor<T>& merge_b, const AblationFlags& flags,
                       std::int64_t window, LmltTrace<T>* trace, const Probe& probe) {
  const Shape& s = x.shape();
  const std::int64_t H = plan.heads;
  if (s.c != plan.heads * plan.head_dim) {
    throw ConfigError("lmlt: input has " + std::to_string(s.c) + " channels, plan expects " +
                      std::to_string(plan.heads * plan.head_dim));
  }
  if (static_cast<std::int64_t>(params.size()) != H) throw ConfigError("lmlt: parameter list does not match heads");
  std::int64_t deepest = 0;
  for (std::int64_t lv : plan.pool_levels) deepest = std::max(deepest, lv);
  const std::int64_t mult = window << deepest;
  if (s.h % mult != 0 || s.w % mult != 0) {
    throw ShapeError("lmlt: input " + s.str() + " not aligned to " + std::to_string(mult));
  }

  const AttnOptions opt{window, flags.pe, flags.scale_logits};
  std::vector<Tensor<T>> outputs(static_cast<std::size_t>(H));
  if (trace) {
    trace->head_inputs.assign(static_cast<std::size_t>(H), {});
    trace->head_outputs.assign(static_cast<std::size_t>(H), {});
  }
  for (std::int64_t i = H - 1; i >= 0; --i) {
    Tensor<T> feat = slice_channels(x, i * plan.head_dim, plan.head_dim);
    for (std::int64_t l = 0; l < plan.pool_levels[i]; ++l) feat = pool_half(feat, flags.pool);
    if (flags.low_to_high && i < H - 1) {
      Tensor<T> lower = outputs[i + 1];
      for (std::int64_t l = plan.pool_levels[i]; l < plan.pool_levels[i + 1]; ++l) {
        lower = upsample2x(lower, flags.upsample);
      }
      feat = add(feat, lower);
    }
    if (trace) trace->head_inputs[i] = feat;
    if (static_cast<std::int64_t>(params[i].size()) != plan.depth) {
      throw ConfigError("lmlt: head " + std::to_string(i) + " has the wrong number of layers");
    }
    const Probe head_probe = probe.sub("head" + std::to_string(i));
    for (std::int64_t l = 0; l < plan.depth; ++l) {
      feat = window_self_attention(feat, params[i][l], opt, head_probe.sub("layer" + std::to_string(l)));
    }
    outputs[i] = feat;
    if (trace) trace->head_outputs[i] = feat;
  }

  std::vector<Tensor<T>> restored;
  for (std::int64_t i = 0; i < H; ++i) {
    Tensor<T> up = outputs[i];
    for (std::int64_t l = 0; l < plan.pool_levels[i]; ++l) up = upsample2x(up, flags.upsample);
    restored.push_back(up);
  }
  Tensor<T> out = H == 1 ? restored.front() : concat_channels(restored);
  if (flags.aggregation) {
    out = conv2d(out, merge_w, merge_b, ConvSpec{s.c, s.c, 1, 1, merge_b.defined()}, probe.sub("merge"));
  }
  if (flags.gelu) out = gelu(out);
  if (flags.modulate) out = mul(out, x);
  return out;
}

std::int64_t flops_lmlt_head(std::int64_t h, std::int64_t w, std::int64_t D, std::int64_t head, std::int64_t M,
                             std::int64_t i) {
  if (head < 1 || D % head != 0) throw ConfigError("flops_lmlt_head: D must be divisible by head");
  if (i < 0) throw ConfigError("flops_lmlt_head: negative head index");
  std::int64_t hi = h, wi = w;
  for (std::int64_t l = 0; l < i; ++l) {
    hi = (hi + 1) / 2;
    wi = (wi + 1) / 2;
  }
  const std::int64_t d = D / head;
  return 4 * hi * wi * d * d + 2 * M * M * hi * wi * d;
}

std::int64_t flops_wsa(std::int64_t h, std::int64_t w, std::int64_t D, std::int64_t M) {
  return 4 * h * w * D * D + 2 * M * M * h * w * D;
}

#define LMLT_INSTANTIATE_ATTN(T)                                                                                   \
  template Tensor<T> rpe_bias<T>(const Tensor<T>&, std::int64_t);                                                  \
  template Tensor<T> window_self_attention<T>(const Tensor<T>&, const AttnParams<T>&, const AttnOptions&,          \
                                              const Probe&);                                                       \
  template Tensor<T> lmlt_forward<T>(const Tensor<T>&, const HeadPlan&, const std::vector<std::vector<AttnParams<T>>>&, \
                                     const Tensor<T>&, const Tensor<T>&, const AblationFlags&, std::int64_t,       \
                                     LmltTrace<T>*, const Probe&);

LMLT_INSTANTIATE_ATTN(float)
LMLT_INSTANTIATE_ATTN(double)
#undef LMLT_INSTANTIATE_ATTN

}  // namespace lmlt
