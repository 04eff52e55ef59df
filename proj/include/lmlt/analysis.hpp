#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lmlt/config.hpp"

namespace lmlt {

struct CostRow {
  std::string layer;
  std::int64_t params = 0;
  std::int64_t macs = 0;
  std::int64_t acts = 0;
};

/// Layer names match the instrumented MacCounter rows of model_forward.
struct CostReport {
  std::vector<CostRow> rows;
  std::int64_t in_h = 0;  // model input resolution
  std::int64_t in_w = 0;
  std::int64_t grid_h = 0;  // after padding to the window grid
  std::int64_t grid_w = 0;
  ModelConfig config;

  std::int64_t total_params() const;
  std::int64_t total_macs() const;
  std::int64_t total_acts() const;
  /// "layer,params,macs,acts" header, one line per row, totals row last.
  std::string csv() const;
};

/// Closed-form parameter count.
std::int64_t param_count(const ModelConfig& cfg);

/// Per-layer analytic cost for an input of in_h x in_w (padded to the grid).
CostReport cost_report(const ModelConfig& cfg, std::int64_t in_h, std::int64_t in_w);

/// Cost for producing an out_w x out_h image at the config's scale; the input
/// is (ceil(out_h/s), ceil(out_w/s)).
CostReport flops_model(const ModelConfig& cfg, std::int64_t out_w = 1280, std::int64_t out_h = 720);

std::int64_t acts_count(const ModelConfig& cfg, std::int64_t out_w = 1280, std::int64_t out_h = 720);

struct LayerDelta {
  std::string layer;
  std::int64_t analytic = 0;
  std::int64_t counted = 0;
  double rel = 0.0;
};

struct FlopsVerification {
  std::vector<LayerDelta> layers;
  std::int64_t analytic_total = 0;
  std::int64_t counted_total = 0;
  double total_rel = 0.0;
};

struct VerifyOptions {
  double tol = 0.01;
  /// Compare attention projection / matmul rows as well as conv rows.
  bool include_attention = true;
};

/// Runs an instrumented forward at h x w and compares MACs per layer and in
/// total. Throws VerificationError naming the first layer beyond tolerance.
FlopsVerification verify_flops(const ModelConfig& cfg, std::int64_t h, std::int64_t w, const VerifyOptions& opt = {});

struct WsaComparison {
  std::int64_t heads = 0;
  std::int64_t lmlt = 0;
  std::int64_t wsa = 0;
  double ratio = 0.0;
};

/// One row per H: sum over heads of flops_lmlt_head (head i pooled i times,
/// or never when pooling is off) against flops_wsa.
std::vector<WsaComparison> compare_wsa_lmlt(std::int64_t h, std::int64_t w, std::int64_t D, std::int64_t M,
                                            const std::vector<std::int64_t>& heads, bool pooling = true);

}  // namespace lmlt
