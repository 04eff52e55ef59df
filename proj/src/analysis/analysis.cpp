#include "lmlt/analysis.hpp"

#include <cmath>
#include <sstream>

#include "lmlt/attention.hpp"
#include "lmlt/error.hpp"
#include "lmlt/model.hpp"
#include "lmlt/rng.hpp"

namespace lmlt {

std::int64_t CostReport::total_params() const {
  std::int64_t t = 0;
  for (const auto& r : rows) t += r.params;
  return t;
}
std::int64_t CostReport::total_macs() const {
  std::int64_t t = 0;
  for (const auto& r : rows) t += r.macs;
  return t;
}
std::int64_t CostReport::total_acts() const {
  std::int64_t t = 0;
  for (const auto& r : rows) t += r.acts;
  return t;
}

std::string CostReport::csv() const {
  std::ostringstream os;
  os << "layer,params,macs,acts\n";
  for (const auto& r : rows) os << r.layer << ',' << r.params << ',' << r.macs << ',' << r.acts << '\n';
  os << "total," << total_params() << ',' << total_macs() << ',' << total_acts() << '\n';
  return os.str();
}

namespace {

std::int64_t pe_params(const ModelConfig& cfg) {
  const std::int64_t d = cfg.head_dim();
  switch (cfg.flags.pe) {
    case PeMode::Lepe: return 9 * d + d;
    case PeMode::Rpe: return (2 * cfg.window - 1) * (2 * cfg.window - 1);
    case PeMode::None: return 0;
  }
  return 0;
}

}  // namespace

std::int64_t param_count(const ModelConfig& cfg) {
  cfg.validate();
  const std::int64_t D = cfg.channels;
  const std::int64_t d = cfg.head_dim();
  const std::int64_t G = cfg.ccm_growth * D;
  const std::int64_t out = 3 * cfg.scale * cfg.scale;
  const std::int64_t proj = 4 * (d * d + (cfg.flags.attn_bias ? d : 0));
  const std::int64_t per_layer = proj + pe_params(cfg);
  const std::int64_t block = 4 * D + cfg.heads * cfg.flags.depth * per_layer +
                             (cfg.flags.aggregation ? D * D + D : 0) + (9 * D * G + G) + (G * D + D);
  return (27 * D + D) + cfg.blocks * block + (9 * D * out + out);
}

CostReport cost_report(const ModelConfig& cfg, std::int64_t in_h, std::int64_t in_w) {
  cfg.validate();
  if (in_h < 1 || in_w < 1) throw ShapeError("cost_report: empty input resolution");
  CostReport rep;
  rep.config = cfg;
  rep.in_h = in_h;
  rep.in_w = in_w;
  const std::int64_t mult = cfg.grid_multiple();
  rep.grid_h = (in_h + mult - 1) / mult * mult;
  rep.grid_w = (in_w + mult - 1) / mult * mult;
  const std::int64_t P = rep.grid_h * rep.grid_w;
  const std::int64_t D = cfg.channels;
  const std::int64_t d = cfg.head_dim();
  const std::int64_t G = cfg.ccm_growth * D;
  const std::int64_t M = cfg.window;
  const std::int64_t out = 3 * cfg.scale * cfg.scale;
  const std::int64_t pb = cfg.flags.attn_bias ? d : 0;
  auto row = [&](std::string name, std::int64_t params, std::int64_t macs, std::int64_t acts) {
    rep.rows.push_back(CostRow{std::move(name), params, macs, acts});
  };

  row("head_conv", 27 * D + D, P * 27 * D, P * D);
  const HeadPlan plan = HeadPlan::from_config(cfg);
  for (std::int64_t b = 0; b < cfg.blocks; ++b) {
    const std::string blk = "block" + std::to_string(b);
    row(blk + ".ln1", 2 * D, 0, 0);
    for (std::int64_t i = 0; i < cfg.heads; ++i) {
      const std::int64_t hi = rep.grid_h >> plan.pool_levels[i];
      const std::int64_t wi = rep.grid_w >> plan.pool_levels[i];
      const std::int64_t T = hi * wi;
      for (std::int64_t l = 0; l < cfg.flags.depth; ++l) {
        const std::string pre = blk + ".lmlt.head" + std::to_string(i) + ".layer" + std::to_string(l);
        for (const char* proj : {".wq", ".wk", ".wv"}) row(pre + proj, d * d + pb, T * d * d, T * d);
        row(pre + ".qk", 0, T * M * M * d, T * M * M);
        if (cfg.flags.pe == PeMode::Rpe) row(pre + ".rpe", pe_params(cfg), 0, 0);
        row(pre + ".av", 0, T * M * M * d, T * d);
        if (cfg.flags.pe == PeMode::Lepe) row(pre + ".lepe", pe_params(cfg), T * 9 * d, T * d);
        row(pre + ".wo", d * d + pb, T * d * d, T * d);
      }
    }
    if (cfg.flags.aggregation) row(blk + ".lmlt.merge", D * D + D, P * D * D, P * D);
    row(blk + ".ln2", 2 * D, 0, 0);
    row(blk + ".ccm.conv1", 9 * D * G + G, P * 9 * D * G, P * G);
    row(blk + ".ccm.conv2", G * D + D, P * G * D, P * D);
  }
  row("tail_conv", 9 * D * out + out, P * 9 * D * out, P * out);
  return rep;
}

CostReport flops_model(const ModelConfig& cfg, std::int64_t out_w, std::int64_t out_h) {
  return cost_report(cfg, (out_h + cfg.scale - 1) / cfg.scale, (out_w + cfg.scale - 1) / cfg.scale);
}

std::int64_t acts_count(const ModelConfig& cfg, std::int64_t out_w, std::int64_t out_h) {
  return flops_model(cfg, out_w, out_h).total_acts();
}

namespace {

bool is_attention_row(const std::string& layer) {
  for (const char* suffix : {".wq", ".wk", ".wv", ".wo", ".qk", ".av"}) {
    const std::string s(suffix);
    if (layer.size() >= s.size() && layer.compare(layer.size() - s.size(), s.size(), s) == 0) return true;
  }
  return false;
}

}  // namespace

FlopsVerification verify_flops(const ModelConfig& cfg, std::int64_t h, std::int64_t w, const VerifyOptions& opt) {
  if (h > 64 || w > 64) throw ConfigError("verify_flops runs at <= 64x64");
  const CostReport rep = cost_report(cfg, h, w);
  const WeightStoreF ws = init_weights<float>(cfg, 1);
  Rng rng(2);
  const TensorF img = tensor_new<float>({1, 3, h, w}, fill::Uniform{&rng, 0.0, 1.0});
  MacCounter counter;
  model_forward(img, ws, cfg, &counter);

  FlopsVerification out;
  for (const CostRow& r : rep.rows) {
    const LayerCount* c = counter.find(r.layer);
    if (r.macs == 0 && !c) continue;
    if (!opt.include_attention && is_attention_row(r.layer)) continue;
    LayerDelta delta{r.layer, r.macs, c ? c->macs : 0, 0.0};
    delta.rel = r.macs == 0 ? (delta.counted == 0 ? 0.0 : 1.0)
                            : std::abs(static_cast<double>(delta.counted - r.macs)) / static_cast<double>(r.macs);
    out.analytic_total += delta.analytic;
    out.counted_total += delta.counted;
    out.layers.push_back(delta);
  }
  for (const LayerCount& c : counter.rows()) {
    if (!opt.include_attention && is_attention_row(c.layer)) continue;
    bool known = false;
    for (const auto& d : out.layers) known = known || d.layer == c.layer;
    if (!known && c.macs > 0) {
      out.layers.push_back(LayerDelta{c.layer, 0, c.macs, 1.0});
      out.counted_total += c.macs;
    }
  }
  out.total_rel = out.analytic_total == 0
                      ? 0.0
                      : std::abs(static_cast<double>(out.counted_total - out.analytic_total)) /
                            static_cast<double>(out.analytic_total);
  for (const auto& d : out.layers) {
    if (d.rel > opt.tol) {
      throw VerificationError(d.layer, "analytic " + std::to_string(d.analytic) + " vs counted " +
                                           std::to_string(d.counted) + " MACs");
    }
  }
  if (out.total_rel > opt.tol) throw VerificationError("total", "analytic and counted totals disagree");
  return out;
}

std::vector<WsaComparison> compare_wsa_lmlt(std::int64_t h, std::int64_t w, std::int64_t D, std::int64_t M,
                                            const std::vector<std::int64_t>& heads, bool pooling) {
  std::vector<WsaComparison> rows;
  for (std::int64_t H : heads) {
    WsaComparison r;
    r.heads = H;
    for (std::int64_t i = 0; i < H; ++i) r.lmlt += flops_lmlt_head(h, w, D, H, M, pooling ? i : 0);
    r.wsa = flops_wsa(h, w, D, M);
    r.ratio = r.wsa == 0 ? 0.0 : static_cast<double>(r.lmlt) / static_cast<double>(r.wsa);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace lmlt
