#include "lmlt/model.hpp"

#include "lmlt/ops.hpp"
#include "lmlt/rng.hpp"

namespace lmlt {

template <class T>
BlockParams<T> block_params(const WeightStore<T>& ws, const ModelConfig& cfg, std::int64_t b) {
  const std::string blk = "block" + std::to_string(b);
  BlockParams<T> p;
  p.ln1_w = ws.get(blk + ".ln1.weight");
  p.ln1_b = ws.get(blk + ".ln1.bias");
  p.ln2_w = ws.get(blk + ".ln2.weight");
  p.ln2_b = ws.get(blk + ".ln2.bias");
  for (std::int64_t i = 0; i < cfg.heads; ++i) {
    std::vector<AttnParams<T>> layers;
    for (std::int64_t l = 0; l < cfg.flags.depth; ++l) {
      const std::string pre = blk + ".lmlt.head" + std::to_string(i) + ".layer" + std::to_string(l);
      AttnParams<T> a;
      a.wq = ws.get(pre + ".wq.weight");
      a.wk = ws.get(pre + ".wk.weight");
      a.wv = ws.get(pre + ".wv.weight");
      a.wo = ws.get(pre + ".wo.weight");
      if (cfg.flags.attn_bias) {
        a.bq = ws.get(pre + ".wq.bias");
        a.bk = ws.get(pre + ".wk.bias");
        a.bv = ws.get(pre + ".wv.bias");
        a.bo = ws.get(pre + ".wo.bias");
      }
      if (cfg.flags.pe == PeMode::Lepe) {
        a.lepe_w = ws.get(pre + ".lepe.weight");
        a.lepe_b = ws.get(pre + ".lepe.bias");
      } else if (cfg.flags.pe == PeMode::Rpe) {
        a.rpe_table = ws.get(pre + ".rpe.table");
      }
      layers.push_back(std::move(a));
    }
    p.heads.push_back(std::move(layers));
  }
  if (cfg.flags.aggregation) {
    p.merge_w = ws.get(blk + ".lmlt.merge.weight");
    p.merge_b = ws.get(blk + ".lmlt.merge.bias");
  }
  p.ccm1_w = ws.get(blk + ".ccm.conv1.weight");
  p.ccm1_b = ws.get(blk + ".ccm.conv1.bias");
  p.ccm2_w = ws.get(blk + ".ccm.conv2.weight");
  p.ccm2_b = ws.get(blk + ".ccm.conv2.bias");
  return p;
}

template <class T>
Tensor<T> ccm_forward(const Tensor<T>& x, const Tensor<T>& w1, const Tensor<T>& b1, const Tensor<T>& w2,
                      const Tensor<T>& b2, const Probe& probe) {
  const std::int64_t D = x.shape().c;
  const std::int64_t G = w1.shape().n;
  if (w1.shape() != Shape{G, D, 3, 3} || w2.shape() != Shape{D, G, 1, 1}) {
    throw ShapeError("ccm: weights " + w1.shape().str() + " / " + w2.shape().str() + " for " + std::to_string(D) +
                     " channels");
  }
  Tensor<T> h = gelu(conv2d(x, w1, b1, ConvSpec{D, G, 3, 1, b1.defined()}, probe.sub("conv1")));
  return conv2d(h, w2, b2, ConvSpec{G, D, 1, 1, b2.defined()}, probe.sub("conv2"));
}

template <class T>
Tensor<T> lhs_block_forward(const Tensor<T>& x, const BlockParams<T>& p, const ModelConfig& cfg, const Probe& probe) {
  const HeadPlan plan = HeadPlan::from_config(cfg);
  Tensor<T> attn = lmlt_forward(layer_norm(x, p.ln1_w, p.ln1_b), plan, p.heads, p.merge_w, p.merge_b, cfg.flags,
                                cfg.window, static_cast<LmltTrace<T>*>(nullptr), probe.sub("lmlt"));
  Tensor<T> y = add(x, attn);
  Tensor<T> mixed = ccm_forward(layer_norm(y, p.ln2_w, p.ln2_b), p.ccm1_w, p.ccm1_b, p.ccm2_w, p.ccm2_b,
                                probe.sub("ccm"));
  return add(y, mixed);
}

template <class T>
Tensor<T> model_forward(const Tensor<T>& img, const WeightStore<T>& ws, const ModelConfig& cfg, MacCounter* counter) {
  cfg.validate();
  const Shape& s = img.shape();
  if (s.c != 3) throw ShapeError("model input must have 3 channels, got " + s.str());
  const std::int64_t D = cfg.channels;
  const Probe root{counter, ""};
  auto [padded, grid] = pad_to_grid(img, cfg.window, cfg.heads);

  const Tensor<T>& hw = ws.get("head_conv.weight");
  const Tensor<T>& tw = ws.get("tail_conv.weight");
  const std::int64_t out_ch = 3 * cfg.scale * cfg.scale;
  if (hw.shape() != Shape{D, 3, 3, 3} || tw.shape() != Shape{out_ch, D, 3, 3}) {
    throw ConfigError("weights do not match config (channels " + std::to_string(D) + ", scale " +
                      std::to_string(cfg.scale) + ")");
  }
  Tensor<T> shallow = conv2d(padded, hw, ws.get("head_conv.bias"), ConvSpec{3, D, 3, 1, true}, root.sub("head_conv"));
  Tensor<T> feat = shallow;
  for (std::int64_t b = 0; b < cfg.blocks; ++b) {
    feat = lhs_block_forward(feat, block_params(ws, cfg, b), cfg, root.sub("block" + std::to_string(b)));
  }
  if (cfg.long_skip) feat = add(feat, shallow);
  Tensor<T> out = conv2d(feat, tw, ws.get("tail_conv.bias"), ConvSpec{D, out_ch, 3, 1, true}, root.sub("tail_conv"));
  out = pixel_shuffle(out, cfg.scale);
  return crop(out, s.h * cfg.scale, s.w * cfg.scale);
}

#define LMLT_INSTANTIATE_MODEL(T)                                                                              \
  template BlockParams<T> block_params<T>(const WeightStore<T>&, const ModelConfig&, std::int64_t);            \
  template Tensor<T> ccm_forward<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,    \
                                    const Tensor<T>&, const Probe&);                                            \
  template Tensor<T> lhs_block_forward<T>(const Tensor<T>&, const BlockParams<T>&, const ModelConfig&,        \
                                          const Probe&);                                                        \
  template Tensor<T> model_forward<T>(const Tensor<T>&, const WeightStore<T>&, const ModelConfig&, MacCounter*);

LMLT_INSTANTIATE_MODEL(float)
LMLT_INSTANTIATE_MODEL(double)
#undef LMLT_INSTANTIATE_MODEL

CheckReport gradcheck_model(const ModelConfig& cfg, const ModelGradcheckOptions& opts) {
  cfg.validate();
  const WeightStoreD ws = init_weights<double>(cfg, opts.seed);
  Rng rng(opts.seed + 1);
  const TensorD x = tensor_new<double>({1, 3, opts.height, opts.width}, fill::Uniform{&rng, 0.0, 1.0});
  const TensorD r = tensor_new<double>({1, 3, cfg.scale * opts.height, cfg.scale * opts.width},
                                       fill::Uniform{&rng, -1.0, 1.0});
  std::vector<NamedParam> params;
  params.reserve(ws.size());
  for (const auto& [name, t] : ws.tensors()) params.push_back({name, t});
  const double inv = 1.0 / static_cast<double>(r.numel());
  return fd_gradcheck_params([&] { return scale(sum(mul(model_forward(x, ws, cfg), r)), inv); }, params, opts.fd);
}

}  // namespace lmlt
