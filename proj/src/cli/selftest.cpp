#include <cmath>
#include <cstring>
#include <filesystem>
#include <stdexcept>

#include "lmlt/analysis.hpp"
#include "lmlt/attention.hpp"
#include "lmlt/cli.hpp"
#include "lmlt/gradcheck.hpp"
#include "lmlt/image.hpp"
#include "lmlt/kernels.hpp"
#include "lmlt/model.hpp"
#include "lmlt/ops.hpp"
#include "lmlt/rng.hpp"
#include "lmlt/train.hpp"

namespace lmlt::cli {

namespace {

void expect(bool ok, const std::string& what) {
  if (!ok) throw std::runtime_error(what);
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

TensorD uniform_d(Shape s, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  Rng rng(seed);
  return tensor_new<double>(s, fill::Uniform{&rng, lo, hi});
}

ModelConfig small(std::int64_t D, std::int64_t B, std::int64_t H, std::int64_t M) {
  ModelConfig c;
  c.channels = D;
  c.blocks = B;
  c.heads = H;
  c.window = M;
  return c;
}

AttnParams<double> attn_params(std::int64_t d, std::uint64_t seed) {
  AttnParams<double> p;
  p.wq = uniform_d({d, d, 1, 1}, seed, -0.5, 0.5);
  p.wk = uniform_d({d, d, 1, 1}, seed + 1, -0.5, 0.5);
  p.wv = uniform_d({d, d, 1, 1}, seed + 2, -0.5, 0.5);
  p.wo = uniform_d({d, d, 1, 1}, seed + 3, -0.5, 0.5);
  p.lepe_w = uniform_d({d, 1, 3, 3}, seed + 4, -0.3, 0.3);
  return p;
}

std::vector<std::vector<AttnParams<double>>> cascade_params(const HeadPlan& plan, std::uint64_t seed) {
  std::vector<std::vector<AttnParams<double>>> out(static_cast<std::size_t>(plan.heads));
  for (std::int64_t i = 0; i < plan.heads; ++i) out[i].push_back(attn_params(plan.head_dim, seed + 10 * i));
  return out;
}

}  // namespace

std::vector<Invariant> invariant_suite() {
  std::vector<Invariant> suite;

  suite.push_back({"rng.determinism", [] {
                     Rng a(123), b(123);
                     for (int i = 0; i < 1000000; ++i) expect(a.next_u64() == b.next_u64(), "streams diverge at " + std::to_string(i));
                   }});

  suite.push_back({"autodiff.finite_difference", [] {
                     TensorD a = uniform_d({1, 1, 3, 4}, 1);
                     TensorD b = uniform_d({1, 1, 4, 3}, 2);
                     const std::vector<NamedParam> ps{{"a", a}, {"b", b}};
                     const CheckReport r = fd_gradcheck_params(
                         [&] { return sum(mul(gelu(softmax_rows(matmul(a, b), 0.7)), uniform_d({1, 1, 3, 3}, 3))); }, ps);
                     expect(r.max_rel_error < 1e-4, "max relative error " + num(r.max_rel_error));
                   }});

  suite.push_back({"softmax.rows_sum_to_one", [] {
                     const TensorD a = softmax_rows(uniform_d({1, 1, 64, 32}, 4, -1e3, 1e3), 1.0);
                     auto v = a.data();
                     for (std::int64_t r = 0; r < 64; ++r) {
                       double s = 0;
                       for (std::int64_t j = 0; j < 32; ++j) s += v[r * 32 + j];
                       expect(std::fabs(s - 1.0) < 1e-6, "row " + std::to_string(r) + " sums to " + num(s));
                     }
                   }});

  suite.push_back({"kernels.serial_parallel_identical", [] {
                     const ModelConfig cfg = small(8, 1, 2, 4);
                     const WeightStoreF ws = init_weights<float>(cfg, 3);
                     Rng rng(4);
                     const TensorF x = tensor_new<float>({1, 3, 19, 13}, fill::Uniform{&rng, 0.0, 1.0});
                     TensorF ys, yp;
                     {
                       ExecModeScope m(ExecMode::Serial);
                       ys = model_forward(x, ws, cfg);
                     }
                     {
                       ExecModeScope m(ExecMode::Parallel);
                       yp = model_forward(x, ws, cfg);
                     }
                     expect(std::memcmp(ys.data().data(), yp.data().data(), ys.data().size_bytes()) == 0,
                            "outputs differ");
                   }});

  suite.push_back({"nn.pad_crop_roundtrip", [] {
                     for (std::int64_t h = 1; h <= 40; h += 3) {
                       const TensorD x = uniform_d({1, 2, h, 41 - h}, 5);
                       const auto [p, g] = pad_to_grid(x, 4, 2);
                       expect(p.shape().h % 8 == 0 && p.shape().w % 8 == 0, "grid not aligned");
                       const TensorD c = crop(p, h, 41 - h);
                       expect(std::memcmp(c.data().data(), x.data().data(), x.data().size_bytes()) == 0,
                              "crop(pad(x)) != x at h=" + std::to_string(h));
                     }
                   }});

  suite.push_back({"nn.window_partition_roundtrip", [] {
                     const TensorD x = uniform_d({2, 3, 8, 12}, 6);
                     const TensorD r = window_reverse(window_partition(x, 4), 4, 2, 8, 12);
                     expect(std::memcmp(r.data().data(), x.data().data(), x.data().size_bytes()) == 0, "mismatch");
                   }});

  suite.push_back({"attention.window_independence", [] {
                     const HeadPlan plan = HeadPlan::make(8, 2, 1, false);
                     const auto params = cascade_params(plan, 7);
                     AblationFlags f;
                     f.low_to_high = false;
                     f.pooling = false;
                     const TensorD mw = uniform_d({8, 8, 1, 1}, 8);
                     const TensorD x = uniform_d({1, 8, 16, 16}, 9);
                     TensorD x2 = x.clone();
                     for (std::int64_t c = 0; c < 8; ++c) x2.mutable_data()[(c * 16 + 2) * 16 + 3] += 0.5;
                     const TensorD y = lmlt_forward(x, plan, params, mw, TensorD{}, f, 8);
                     const TensorD y2 = lmlt_forward(x2, plan, params, mw, TensorD{}, f, 8);
                     for (std::int64_t c = 0; c < 8; ++c) {
                       for (std::int64_t i = 0; i < 16; ++i) {
                         for (std::int64_t j = 0; j < 16; ++j) {
                           if (i < 8 && j < 8) continue;
                           expect(y.at(0, c, i, j) == y2.at(0, c, i, j), "change leaked into another window");
                         }
                       }
                     }
                   }});

  suite.push_back({"attention.cross_window_flow", [] {
                     const HeadPlan plan = HeadPlan::make(8, 2, 1, true);
                     const auto params = cascade_params(plan, 10);
                     AblationFlags f;
                     f.aggregation = false;
                     const TensorD x = uniform_d({1, 8, 16, 16}, 11);
                     TensorD x2 = x.clone();
                     for (std::int64_t c = 0; c < 8; ++c) x2.mutable_data()[(c * 16 + 1) * 16 + 1] += 0.5;
                     LmltTrace<double> t1, t2;
                     lmlt_forward(x, plan, params, TensorD{}, TensorD{}, f, 4, &t1);
                     lmlt_forward(x2, plan, params, TensorD{}, TensorD{}, f, 4, &t2);
                     double diff = 0;
                     for (std::int64_t c = 0; c < 4; ++c) {
                       for (std::int64_t i = 0; i < 8; ++i) {
                         for (std::int64_t j = 4; j < 8; ++j) {
                           diff = std::max(diff, std::fabs(t1.head_outputs[0].at(0, c, i, j) - t2.head_outputs[0].at(0, c, i, j)));
                         }
                       }
                     }
                     expect(diff > 0.0, "no cross-window dependence in the top head");
                   }});

  suite.push_back({"attention.cost_dominance", [] {
                     for (std::int64_t hw : {32, 64}) {
                       for (std::int64_t D : {16, 36, 60}) {
                         for (std::int64_t H : {2, 3, 4}) {
                           if (D % H != 0) continue;
                           const auto r = compare_wsa_lmlt(hw, hw, D, 8, {H}, true).front();
                           expect(r.ratio < 1.0, "ratio " + num(r.ratio) + " at H=" + std::to_string(H));
                         }
                       }
                     }
                   }});

  suite.push_back({"model.residual_identity", [] {
                     ModelConfig cfg = small(8, 1, 2, 4);
                     cfg.flags.modulate = false;
                     WeightStoreD ws = zero_weights<double>(cfg);
                     ws.set("block0.ln1.weight", TensorD::full({8, 1, 1, 1}, 1.0));
                     ws.set("block0.ln2.weight", TensorD::full({8, 1, 1, 1}, 1.0));
                     const TensorD x = uniform_d({1, 8, 16, 16}, 12);
                     const TensorD z = lhs_block_forward(x, block_params(ws, cfg, 0), cfg);
                     expect(std::memcmp(z.data().data(), x.data().data(), x.data().size_bytes()) == 0, "block is not the identity");
                   }});

  suite.push_back({"model.scale_contract", [] {
                     for (std::int64_t s : {2, 3, 4}) {
                       ModelConfig cfg = small(8, 1, 2, 4);
                       cfg.scale = s;
                       const WeightStoreF ws = init_weights<float>(cfg, 1);
                       for (std::int64_t h : {8, 17, 23}) {
                         Rng rng(2);
                         const TensorF y = model_forward(tensor_new<float>({1, 3, h, 9}, fill::Uniform{&rng, 0.0, 1.0}), ws, cfg);
                         expect(y.shape() == Shape{1, 3, s * h, s * 9}, "bad output " + y.shape().str());
                       }
                     }
                   }});

  suite.push_back({"model.gradients", [] {
                     const CheckReport r = gradcheck_model(small(8, 1, 2, 4), ModelGradcheckOptions{8, 8, 1, {1e-4, 1e-3, {}}});
                     expect(r.max_rel_error < 1e-3, "max relative error " + num(r.max_rel_error) + " at " + r.worst_param);
                   }});

  suite.push_back({"weights.roundtrip", [] {
                     const WeightStoreF ws = init_weights<float>(small(8, 2, 2, 4), 5);
                     const auto bytes = serialize_weights(ws);
                     expect(serialize_weights(deserialize_weights(bytes)) == bytes, "bytes differ after reload");
                   }});

  suite.push_back({"analysis.param_closure", [] {
                     for (const char* name : {"tiny", "small", "base", "large"}) {
                       for (std::int64_t s : {2, 3, 4}) {
                         const ModelConfig c = ModelConfig::preset(name, s);
                         expect(zero_weights<float>(c).numel() == param_count(c), std::string(name) + " count mismatch");
                       }
                     }
                   }});

  suite.push_back({"analysis.instrumented_macs", [] {
                     const FlopsVerification v = verify_flops(small(8, 1, 2, 4), 16, 16);
                     expect(v.total_rel <= 0.01, "relative gap " + num(v.total_rel));
                   }});

  suite.push_back({"analysis.published_accounting", [] {
                     auto near = [](double v, double t, double tol) { return std::fabs(v - t) <= tol * t; };
                     expect(near(static_cast<double>(param_count(ModelConfig::preset("tiny", 2))), 239e3, 0.005), "tiny params");
                     expect(near(static_cast<double>(param_count(ModelConfig::preset("base", 2))), 652e3, 0.005), "base params");
                     expect(near(static_cast<double>(param_count(ModelConfig::preset("large", 4))), 1295e3, 0.005), "large params");
                     expect(near(static_cast<double>(flops_model(ModelConfig::preset("tiny", 2)).total_macs()), 59e9, 0.10), "tiny flops");
                     expect(near(static_cast<double>(flops_model(ModelConfig::preset("base", 2)).total_macs()), 158e9, 0.10), "base flops");
                     expect(near(static_cast<double>(flops_model(ModelConfig::preset("large", 2)).total_macs()), 306e9, 0.10), "large flops");
                   }});

  suite.push_back({"metrics.identity", [] {
                     Rng rng(13);
                     PlanarImage img(24, 24, 3);
                     for (auto& v : img.data) v = static_cast<std::uint8_t>(rng.next_u64() % 256);
                     expect(std::isinf(psnr_y(img, img, 2)), "psnr of identical images is finite");
                     expect(ssim_y(img, img, 2) == 1.0, "ssim of identical images is not 1");
                   }});

  suite.push_back({"metrics.luma_affine", [] {
                     Rng rng(14);
                     for (int i = 0; i < 100; ++i) {
                       const double p[3] = {rng.uniform(), rng.uniform(), rng.uniform()};
                       const double q[3] = {rng.uniform(), rng.uniform(), rng.uniform()};
                       const double a = rng.uniform();
                       const double lhs = luma(a * p[0] + (1 - a) * q[0], a * p[1] + (1 - a) * q[1], a * p[2] + (1 - a) * q[2]);
                       const double rhs = a * luma(p[0], p[1], p[2]) + (1 - a) * luma(q[0], q[1], q[2]);
                       expect(std::fabs(lhs - rhs) < 1e-6, "not affine");
                     }
                   }});

  suite.push_back({"image.bicubic_partition_of_unity", [] {
                     for (int i = 0; i <= 100; ++i) {
                       const double t = i / 100.0;
                       const double s = cubic_kernel(t + 1) + cubic_kernel(t) + cubic_kernel(t - 1) + cubic_kernel(t - 2);
                       expect(std::fabs(s - 1.0) < 1e-9, "weights sum to " + num(s));
                     }
                   }});

  suite.push_back({"image.png_roundtrip", [] {
                     const auto path = std::filesystem::temp_directory_path() / "lmlt_selftest.png";
                     Rng rng(15);
                     PlanarImage img(17, 9, 3);
                     for (auto& v : img.data) v = static_cast<std::uint8_t>(rng.next_u64() % 256);
                     png_save(img, path);
                     const bool same = png_load(path) == img;
                     std::filesystem::remove(path);
                     expect(same, "decoded image differs");
                   }});

  suite.push_back({"train.toy_overfit", [] {
                     const ModelConfig cfg = small(16, 2, 4, 4);
                     TrainOptions o;
                     const TrainResult r = train_toy(cfg, {make_toy_pair(32, 2, 7)}, o);
                     const double ratio = smooth(r.losses, 100).back() / r.losses.front();
                     expect(ratio < 0.1, "smoothed loss ratio " + num(ratio));
                   }});

  return suite;
}

}  // namespace lmlt::cli
