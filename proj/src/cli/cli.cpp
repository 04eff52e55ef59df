#include "lmlt/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include "lmlt/analysis.hpp"
#include "lmlt/attention.hpp"
#include "lmlt/error.hpp"
#include "lmlt/image.hpp"
#include "lmlt/kernels.hpp"
#include "lmlt/model.hpp"
#include "lmlt/rng.hpp"
#include "lmlt/train.hpp"

namespace lmlt::cli {

namespace {

using KeyValues = std::map<std::string, std::string>;

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string fmt_db(double v) { return std::isinf(v) ? "inf" : fmt("%.4f", v); }

/// Effective settings of one command: command keys plus a model config.
struct Settings {
  KeyValues values;  // command keys
  std::optional<std::string> preset;
  KeyValues model_keys;  // explicit model overrides
  ModelConfig base;

  std::string str(const std::string& key) const {
    const auto it = values.find(key);
    if (it == values.end()) throw ConfigError("missing setting '" + key + "'");
    return it->second;
  }
  bool has(const std::string& key) const {
    const auto it = values.find(key);
    return it != values.end() && !it->second.empty();
  }
  std::int64_t integer(const std::string& key) const {
    const std::string v = str(key);
    std::size_t used = 0;
    long long n = 0;
    try {
      n = std::stoll(v, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != v.size() || v.empty()) throw ConfigError("'" + key + "' needs an integer, got '" + v + "'");
    return n;
  }
  double real(const std::string& key) const {
    const std::string v = str(key);
    std::size_t used = 0;
    double d = 0;
    try {
      d = std::stod(v, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != v.size() || v.empty()) throw ConfigError("'" + key + "' needs a number, got '" + v + "'");
    return d;
  }
  bool boolean(const std::string& key) const {
    const std::string v = str(key);
    if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "off" || v == "no") return false;
    throw ConfigError("'" + key + "' needs a boolean, got '" + v + "'");
  }

  ModelConfig model() const {
    ModelConfig c = preset ? ModelConfig::preset(*preset, base.scale) : base;
    c = ModelConfig::from_kv(model_keys, c);
    c.validate();
    return c;
  }

  void echo(std::ostream& out, bool with_model = true) const {
    out << "# effective config\n";
    if (with_model) {
      if (preset) out << "preset=" << *preset << "\n";
      out << model().echo();
    }
    for (const auto& [k, v] : values) out << k << "=" << v << "\n";
    out << "# end config\n";
  }
};

/// Collects values given on the command line, keyed like the config file.
struct CommandSpec {
  KeyValues defaults;
  ModelConfig base;
  bool model_flags = false;
  KeyValues given;
  std::optional<std::string> config_path;
  std::string name;

  void value(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    app->add_option_function<std::string>(
        flag, [this, key](const std::string& v) { given[key] = v; }, help);
  }
  void toggle(CLI::App* app, const std::string& flag, const std::string& key, const std::string& v,
              const std::string& help) {
    app->add_flag_callback(flag, [this, key, v] { given[key] = v; }, help);
  }

  void add_model_flags(CLI::App* app) {
    model_flags = true;
    value(app, "--preset", "preset", "tiny | small | base | large");
    value(app, "--scale", "scale", "upscaling factor 2, 3 or 4");
    value(app, "--channels", "channels", "feature channels D");
    value(app, "--blocks", "blocks", "number of blocks");
    value(app, "--heads", "heads", "attention heads H");
    value(app, "--window", "window", "window size M");
    value(app, "--ccm-growth", "ccm_growth", "CCM channel growth");
    value(app, "--depth", "depth", "attention layers per head (1-3)");
    value(app, "--pe", "pe", "positional encoding: lepe | rpe | none");
    value(app, "--pool", "pool", "pooling operator: avg | max");
    value(app, "--upsample", "upsample", "head upsampling: nearest | bilinear");
    toggle(app, "--no-pool", "pooling", "false", "disable per-head pooling");
    toggle(app, "--no-sum", "low_to_high", "false", "disable the low-to-high addition");
    toggle(app, "--no-aggregation,--no-merge", "aggregation", "false", "drop the 1x1 merge conv");
    toggle(app, "--no-gelu", "gelu", "false", "drop the GELU after merging");
    toggle(app, "--no-modulate", "modulate", "false", "do not multiply by the block input");
    toggle(app, "--no-long-skip", "long_skip", "false", "drop the shallow-feature skip");
  }

  void add_config_flag(CLI::App* app) {
    app->add_option_function<std::string>(
        "--config", [this](const std::string& v) { config_path = v; }, "key=value config file");
  }

  Settings resolve() const {
    static const std::set<std::string> kModelKeys = [] {
      std::set<std::string> keys;
      for (const auto& [k, v] : ModelConfig{}.to_kv()) keys.insert(k);
      keys.insert("merge");
      return keys;
    }();
    Settings s;
    s.values = defaults;
    s.base = base;
    auto apply = [&](const KeyValues& kv, const std::string& origin) {
      for (const auto& [k, v] : kv) {
        if (k == "preset" && model_flags) {
          s.preset = v;
        } else if (kModelKeys.count(k) && model_flags) {
          s.model_keys[k] = v;
        } else if (defaults.count(k)) {
          s.values[k] = v;
        } else {
          throw ConfigError(origin + ": unknown key '" + k + "' for '" + name + "'");
        }
      }
    };
    if (config_path) {
      std::ifstream f(*config_path);
      if (!f) throw IoError("cannot read config '" + *config_path + "'");
      std::stringstream ss;
      ss << f.rdbuf();
      apply(parse_kv_text(ss.str()), *config_path);
    }
    apply(given, "command line");
    return s;
  }
};

template <class F>
double median_ms(int runs, F&& f) {
  std::vector<double> ms;
  for (int i = 0; i < runs; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    ms.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
  }
  std::sort(ms.begin(), ms.end());
  return ms.empty() ? 0.0 : ms[ms.size() / 2];
}

// ---- commands ----

int cmd_count(const Settings& s, std::ostream& out) {
  const ModelConfig cfg = s.model();
  s.echo(out);
  const CostReport r = flops_model(cfg, s.integer("out_w"), s.integer("out_h"));
  if (s.boolean("csv")) {
    out << r.csv();
    return kOk;
  }
  out << "input=" << r.in_w << "x" << r.in_h << " grid=" << r.grid_w << "x" << r.grid_h << "\n";
  out << "params=" << r.total_params() << " (" << fmt("%.1f", r.total_params() / 1e3) << "K)\n";
  out << "flops=" << r.total_macs() << " (" << fmt("%.2f", r.total_macs() / 1e9) << "G)\n";
  out << "acts=" << r.total_acts() << " (" << fmt("%.1f", r.total_acts() / 1e6) << "M)\n";
  return kOk;
}

int cmd_gradcheck(const Settings& s, bool corrupt, std::ostream& out) {
  const ModelConfig cfg = s.model();
  s.echo(out);
  ModelGradcheckOptions opts;
  opts.height = opts.width = s.integer("size");
  opts.seed = static_cast<std::uint64_t>(s.integer("seed"));
  opts.fd.eps = s.real("eps");
  opts.fd.tol = s.real("tol");
  if (corrupt) {
    opts.fd.tamper = [](std::vector<std::vector<double>>& g) {
      if (!g.empty() && !g.front().empty()) g.front().front() = 2.0 * g.front().front() + 1e-3;
    };
  }
  const auto t0 = std::chrono::steady_clock::now();
  const CheckReport r = gradcheck_model(cfg, opts);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out << "coordinates=" << r.coordinates << "\n";
  out << "max_rel_error=" << fmt("%.3e", r.max_rel_error) << "\n";
  out << "worst_param=" << r.worst_param << "[" << r.worst_index << "] analytic=" << fmt("%.6e", r.worst_analytic)
      << " numeric=" << fmt("%.6e", r.worst_numeric) << "\n";
  out << "seconds=" << fmt("%.2f", secs) << "\n";
  const bool pass = r.max_rel_error < opts.fd.tol;
  out << (pass ? "PASS" : "FAIL") << " gradcheck max_rel_error " << fmt("%.3e", r.max_rel_error)
      << (pass ? " < " : " >= ") << fmt("%g", opts.fd.tol) << (pass ? "" : " worst " + r.worst_param) << "\n";
  return pass ? kOk : kFailure;
}

int cmd_init(const Settings& s, std::ostream& out) {
  const ModelConfig cfg = s.model();
  s.echo(out);
  if (!s.has("out")) throw ConfigError("init needs --out");
  WeightStoreF ws =
      s.boolean("zero") ? zero_weights<float>(cfg) : init_weights<float>(cfg, static_cast<std::uint64_t>(s.integer("seed")));
  save_weights(ws, s.str("out"));
  out << "wrote " << s.str("out") << " (" << ws.size() << " tensors, " << ws.numel() << " parameters)\n";
  return kOk;
}

int cmd_upscale(const Settings& s, std::ostream& out) {
  if (!s.has("in") || !s.has("out") || !s.has("weights")) throw ConfigError("upscale needs --in, --out and --weights");
  const WeightStoreF ws = load_weights(s.str("weights"));
  const ModelConfig stored = config_from_meta(ws);
  Settings eff = s;
  eff.preset.reset();
  eff.base = stored;
  const ModelConfig cfg = eff.model();
  if (!(cfg == stored)) {
    std::ostringstream msg;
    msg << "config does not match the weight file " << s.str("weights");
    for (const auto& [k, v] : cfg.to_kv()) {
      const std::string w = stored.to_kv().at(k);
      if (w != v) msg << "; " << k << "=" << v << " but weights have " << k << "=" << w;
    }
    throw ConfigError(msg.str());
  }
  eff.echo(out);
  const PlanarImage img = png_load(s.str("in"));
  if (img.channels != 3) throw FormatError("upscale needs an RGB image, got " + std::to_string(img.channels) + " channel(s)");
  const TensorF x = image_to_tensor(img);
  TensorF y = model_forward(x, ws, cfg);
  const int runs = static_cast<int>(s.integer("runs"));
  const double ms = median_ms(runs, [&] { y = model_forward(x, ws, cfg); });
  const PlanarImage result = tensor_to_image(y);
  png_save(result, s.str("out"));
  out << "output=" << result.width << "x" << result.height << "\n";
  out << "time_ms_median_of_" << runs << "=" << fmt("%.2f", ms) << "\n";
  if (s.has("ref")) {
    const PlanarImage ref = png_load(s.str("ref"));
    const std::int64_t shave = s.integer("shave") < 0 ? cfg.scale : s.integer("shave");
    out << "psnr_y=" << fmt_db(psnr_y(result, ref, shave)) << "\n";
    out << "ssim_y=" << fmt("%.6f", ssim_y(result, ref, shave)) << "\n";
  }
  return kOk;
}

int cmd_train_toy(const Settings& s, std::ostream& out) {
  const ModelConfig cfg = s.model();
  s.echo(out);
  const TrainPair pair = make_toy_pair(s.integer("patch"), cfg.scale, static_cast<std::uint64_t>(s.integer("data_seed")));
  TrainOptions opts;
  opts.steps = s.integer("steps");
  opts.lr = s.real("lr");
  opts.seed = static_cast<std::uint64_t>(s.integer("seed"));
  const std::int64_t every = s.integer("log_every");
  opts.on_step = [&](std::int64_t step, double loss) {
    if (every > 0 && step % every == 0) out << "step " << step << " loss " << fmt("%.6f", loss) << "\n";
  };
  const auto t0 = std::chrono::steady_clock::now();
  const TrainResult r = train_toy(cfg, {pair}, opts);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const auto sm = smooth(r.losses, static_cast<std::size_t>(s.integer("smooth_window")));
  {
    std::ofstream csv(s.str("loss_csv"));
    if (!csv) throw IoError("cannot write '" + s.str("loss_csv") + "'");
    csv << "step,loss,smoothed,lr\n";
    for (std::size_t i = 0; i < r.losses.size(); ++i) {
      csv << i << "," << fmt("%.9g", r.losses[i]) << "," << fmt("%.9g", sm[i]) << ","
          << fmt("%.9g", cosine_lr(static_cast<std::int64_t>(i), opts.steps, opts.lr, opts.min_lr)) << "\n";
    }
    if (!csv) throw IoError("failed writing '" + s.str("loss_csv") + "'");
  }
  if (s.has("out_weights")) save_weights(r.weights, s.str("out_weights"));
  if (r.losses.empty()) {
    out << "FAIL train-toy: no steps run\n";
    return kFailure;
  }
  const double ratio = sm.back() / r.losses.front();
  out << "initial_loss=" << fmt("%.6f", r.losses.front()) << "\n";
  out << "final_smoothed_loss=" << fmt("%.6f", sm.back()) << "\n";
  out << "ratio=" << fmt("%.4f", ratio) << "\n";
  out << "seconds=" << fmt("%.1f", secs) << "\n";
  const bool pass = ratio < 0.1;
  out << (pass ? "PASS" : "FAIL") << " train-toy smoothed loss ratio " << fmt("%.4f", ratio) << (pass ? " < " : " >= ")
      << "0.1\n";
  return pass ? kOk : kFailure;
}

std::vector<std::int64_t> parse_list(const std::string& text) {
  std::vector<std::int64_t> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      v.push_back(std::stoll(item));
    } catch (const std::exception&) {
      throw ConfigError("bad list item '" + item + "' in '" + text + "'");
    }
  }
  if (v.empty()) throw ConfigError("empty list");
  return v;
}

AttnParams<float> bench_params(std::int64_t d, Rng& rng) {
  auto proj = [&] { return tensor_new<float>({d, d, 1, 1}, fill::Normal{&rng, 0.0, 0.2}); };
  AttnParams<float> p;
  p.wq = proj();
  p.wk = proj();
  p.wv = proj();
  p.wo = proj();
  p.lepe_w = tensor_new<float>({d, 1, 3, 3}, fill::Normal{&rng, 0.0, 0.2});
  return p;
}

int cmd_bench(const Settings& s, std::ostream& out) {
  s.echo(out, false);
  const std::string grid = s.str("grid");
  const auto x_pos = grid.find('x');
  if (x_pos == std::string::npos) throw ConfigError("--grid expects HxW, got '" + grid + "'");
  const std::int64_t h = std::stoll(grid.substr(0, x_pos));
  const std::int64_t w = std::stoll(grid.substr(x_pos + 1));
  const std::int64_t D = s.integer("channels");
  const std::int64_t M = s.integer("window");
  const int runs = static_cast<int>(s.integer("runs"));
  const auto heads = parse_list(s.str("heads"));
  const bool serial = s.boolean("serial");
  ExecModeScope mode(serial ? ExecMode::Serial : ExecMode::Parallel);
  const auto table = compare_wsa_lmlt(h, w, D, M, heads, true);

  Rng rng(static_cast<std::uint64_t>(s.integer("seed")));
  const TensorF x = tensor_new<float>({1, D, h, w}, fill::Uniform{&rng, -1.0, 1.0});
  out << "heads,lmlt_macs,wsa_macs,ratio,grid,lmlt_ms,wsa_ms,time_ratio\n";
  for (const WsaComparison& row : table) {
    if (D % row.heads != 0) throw ConfigError("channels " + std::to_string(D) + " not divisible by " + std::to_string(row.heads) + " heads");
    const HeadPlan plan = HeadPlan::make(D, row.heads, 1, true);
    std::vector<std::vector<AttnParams<float>>> params(static_cast<std::size_t>(row.heads));
    for (auto& head : params) head.push_back(bench_params(plan.head_dim, rng));
    const TensorF merge = tensor_new<float>({D, D, 1, 1}, fill::Normal{&rng, 0.0, 0.2});
    const auto [xp, g] = pad_to_grid(x, M, plan.heads);
    AblationFlags flags;
    const AttnParams<float> wsa = bench_params(D, rng);
    const auto [xw, gw] = pad_to_grid(x, M, 1);
    const double t_lmlt =
        median_ms(runs, [&] { (void)lmlt_forward(xp, plan, params, merge, TensorF{}, flags, M); });
    const double t_wsa =
        median_ms(runs, [&] { (void)window_self_attention(xw, wsa, AttnOptions{M, PeMode::Lepe, true}); });
    out << row.heads << "," << row.lmlt << "," << row.wsa << "," << fmt("%.4f", row.ratio) << ","
        << xp.shape().h << "x" << xp.shape().w << "," << fmt("%.3f", t_lmlt) << "," << fmt("%.3f", t_wsa) << ","
        << fmt("%.4f", t_lmlt / t_wsa) << "\n";
  }
  return kOk;
}

int cmd_selftest(const Settings& s, std::ostream& out) {
  s.echo(out, false);
  const std::string fault = s.str("inject_fault");
  const std::string only = s.str("only");
  int failed = 0, ran = 0;
  for (const Invariant& inv : invariant_suite()) {
    if (!only.empty() && inv.name.find(only) == std::string::npos) continue;
    ++ran;
    const auto t0 = std::chrono::steady_clock::now();
    std::string problem;
    try {
      inv.check();
      if (!fault.empty() && (fault == inv.name || fault == "all")) problem = "injected fault";
    } catch (const std::exception& e) {
      problem = e.what();
    }
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    if (problem.empty()) {
      out << "PASS " << inv.name << " (" << fmt("%.0f", ms) << " ms)\n";
    } else {
      ++failed;
      out << "FAIL " << inv.name << ": " << problem << "\n";
    }
  }
  if (!fault.empty() && fault != "all") {
    bool known = false;
    for (const Invariant& inv : invariant_suite()) known = known || inv.name == fault;
    if (!known) throw ConfigError("--inject-fault names no invariant: '" + fault + "'");
  }
  out << (failed == 0 ? "PASS" : "FAIL") << " selftest " << (ran - failed) << "/" << ran << " invariants\n";
  return failed == 0 ? kOk : kFailure;
}

ModelConfig small_model(std::int64_t D, std::int64_t B, std::int64_t H, std::int64_t M) {
  ModelConfig c;
  c.channels = D;
  c.blocks = B;
  c.heads = H;
  c.window = M;
  return c;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"LMLT super-resolution engine", "lmlt"};
  app.require_subcommand(1);

  CommandSpec upscale, count, gradcheck, bench, train, selftest, init;

  auto* c_upscale = app.add_subcommand("upscale", "upscale a PNG with a weight file");
  upscale.name = "upscale";
  upscale.model_flags = true;
  upscale.defaults = {{"in", ""}, {"out", ""}, {"weights", ""}, {"ref", ""}, {"shave", "-1"}, {"runs", "5"}};
  upscale.value(c_upscale, "--in", "in", "input PNG");
  upscale.value(c_upscale, "--out", "out", "output PNG");
  upscale.value(c_upscale, "--weights", "weights", "weight file");
  upscale.value(c_upscale, "--ref", "ref", "reference PNG for PSNR/SSIM");
  upscale.value(c_upscale, "--shave", "shave", "border shave for metrics (default: scale)");
  upscale.value(c_upscale, "--runs", "runs", "timed runs (median reported)");
  upscale.value(c_upscale, "--scale", "scale", "expected scale (must match the weights)");
  upscale.add_config_flag(c_upscale);

  auto* c_count = app.add_subcommand("count", "parameter / FLOPs / activation report");
  count.name = "count";
  count.base = ModelConfig::preset("tiny");
  count.defaults = {{"out_w", "1280"}, {"out_h", "720"}, {"csv", "false"}};
  count.add_model_flags(c_count);
  count.value(c_count, "--out-w", "out_w", "output width");
  count.value(c_count, "--out-h", "out_h", "output height");
  count.toggle(c_count, "--csv", "csv", "true", "per-layer CSV");
  count.add_config_flag(c_count);

  bool corrupt = false;
  auto* c_grad = app.add_subcommand("gradcheck", "finite-difference check of every model parameter");
  gradcheck.name = "gradcheck";
  gradcheck.base = small_model(8, 1, 2, 4);
  gradcheck.defaults = {{"size", "16"}, {"seed", "1"}, {"eps", "1e-4"}, {"tol", "1e-3"}};
  gradcheck.add_model_flags(c_grad);
  gradcheck.value(c_grad, "--size", "size", "input height and width");
  gradcheck.value(c_grad, "--seed", "seed", "weight / input seed");
  gradcheck.value(c_grad, "--eps", "eps", "central difference step");
  gradcheck.value(c_grad, "--tol", "tol", "max relative error");
  gradcheck.add_config_flag(c_grad);
  c_grad->add_flag("--corrupt-grad", corrupt)->group("");

  auto* c_bench = app.add_subcommand("bench", "cascade vs single windowed attention: analytic and timed");
  bench.name = "bench";
  bench.defaults = {{"grid", "64x64"}, {"channels", "36"}, {"window", "8"}, {"heads", "1,2,3,4"},
                    {"runs", "5"},     {"seed", "0"},       {"serial", "false"}};
  bench.value(c_bench, "--grid", "grid", "feature size HxW");
  bench.value(c_bench, "--channels", "channels", "feature channels D");
  bench.value(c_bench, "--window", "window", "window size M");
  bench.value(c_bench, "--heads", "heads", "comma-separated head counts");
  bench.value(c_bench, "--runs", "runs", "timed runs (median reported)");
  bench.value(c_bench, "--seed", "seed", "weight seed");
  bench.toggle(c_bench, "--serial", "serial", "true", "single-threaded kernels");
  bench.add_config_flag(c_bench);

  auto* c_train = app.add_subcommand("train-toy", "overfit one synthetic patch");
  train.name = "train-toy";
  train.base = small_model(16, 2, 4, 4);
  train.defaults = {{"patch", "32"},      {"steps", "2000"},  {"lr", "1e-3"},
                    {"seed", "0"},        {"data_seed", "7"}, {"out_weights", ""},
                    {"loss_csv", "toy_loss.csv"}, {"smooth_window", "100"}, {"log_every", "0"}};
  train.add_model_flags(c_train);
  train.value(c_train, "--patch", "patch", "low-resolution patch size");
  train.value(c_train, "--steps", "steps", "optimizer steps");
  train.value(c_train, "--lr", "lr", "initial learning rate");
  train.value(c_train, "--seed", "seed", "weight init seed");
  train.value(c_train, "--data-seed", "data_seed", "synthetic patch seed");
  train.value(c_train, "--out-weights", "out_weights", "write trained weights here");
  train.value(c_train, "--loss-csv", "loss_csv", "loss curve CSV path");
  train.value(c_train, "--smooth", "smooth_window", "moving average window");
  train.value(c_train, "--log-every", "log_every", "print the loss every N steps (0: never)");
  train.add_config_flag(c_train);

  auto* c_self = app.add_subcommand("selftest", "run the invariant suite");
  selftest.name = "selftest";
  selftest.defaults = {{"inject_fault", ""}, {"only", ""}};
  selftest.value(c_self, "--only", "only", "run invariants whose name contains this");
  c_self->add_option_function<std::string>(
            "--inject-fault", [&](const std::string& v) { selftest.given["inject_fault"] = v; })
      ->group("");

  auto* c_init = app.add_subcommand("init", "write freshly initialised weights");
  init.name = "init";
  init.base = ModelConfig::preset("tiny");
  init.defaults = {{"out", ""}, {"seed", "0"}, {"zero", "false"}};
  init.add_model_flags(c_init);
  init.value(c_init, "--out", "out", "weight file to write");
  init.value(c_init, "--seed", "seed", "init seed");
  init.toggle(c_init, "--zero", "zero", "true", "all-zero weights");
  init.add_config_flag(c_init);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << "run 'lmlt --help' for usage\n";
    return kFailure;
  }

  try {
    if (c_upscale->parsed()) return cmd_upscale(upscale.resolve(), out);
    if (c_count->parsed()) return cmd_count(count.resolve(), out);
    if (c_grad->parsed()) return cmd_gradcheck(gradcheck.resolve(), corrupt, out);
    if (c_bench->parsed()) return cmd_bench(bench.resolve(), out);
    if (c_train->parsed()) return cmd_train_toy(train.resolve(), out);
    if (c_self->parsed()) return cmd_selftest(selftest.resolve(), out);
    if (c_init->parsed()) return cmd_init(init.resolve(), out);
  } catch (const TrainingError& e) {
    err << "diverged: " << e.what() << "\n";
    return kDivergence;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << "\n";
    return kIo;
  } catch (const WeightFileError& e) {
    err << "weight file error: " << e.what() << "\n";
    return kIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}

}  // namespace lmlt::cli
