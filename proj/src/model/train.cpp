#include "lmlt/train.hpp"

#include <cmath>
#include <numbers>

#include "lmlt/error.hpp"
#include "lmlt/image.hpp"
#include "lmlt/model.hpp"
#include "lmlt/ops.hpp"
#include "lmlt/rng.hpp"
#include "lmlt/tape.hpp"

namespace lmlt {

double cosine_lr(std::int64_t step, std::int64_t steps, double lr, double min_lr) {
  const double floor = std::min(lr, min_lr);
  if (steps <= 0) return lr;
  const double t = static_cast<double>(step) / static_cast<double>(steps);
  return floor + 0.5 * (lr - floor) * (1.0 + std::cos(std::numbers::pi * t));
}

void Adam::step(WeightStoreF& ws, double lr) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (const auto& [name, tensor] : ws.tensors()) {
    auto g = tensor.grad();
    if (g.empty()) continue;
    auto& m = m_[name];
    auto& v = v_[name];
    if (m.empty()) {
      m.assign(g.size(), 0.0);
      v.assign(g.size(), 0.0);
    }
    auto p = Tensor<float>(tensor).mutable_data();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double gi = g[i];
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * gi;
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * gi * gi;
      p[i] -= static_cast<float>(lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_));
    }
  }
}

TrainResult train_toy(const ModelConfig& cfg, const std::vector<TrainPair>& data, const TrainOptions& opts) {
  cfg.validate();
  if (data.empty()) throw ConfigError("train_toy needs at least one patch pair");
  for (const auto& pair : data) {
    const Shape& l = pair.lr.shape();
    const Shape& h = pair.hr.shape();
    if (l.c != 3 || h.c != 3 || h.n != l.n || h.h != l.h * cfg.scale || h.w != l.w * cfg.scale) {
      throw ShapeError("train pair shapes " + l.str() + " / " + h.str() + " do not match scale " +
                       std::to_string(cfg.scale));
    }
  }
  TrainResult res{init_weights<float>(cfg, opts.seed), {}};
  attach_config(res.weights, cfg);
  for (const auto& [name, t] : res.weights.tensors()) Tensor<float>(t).set_requires_grad(true);
  Adam adam(opts.beta1, opts.beta2, opts.eps);
  res.losses.reserve(static_cast<std::size_t>(std::max<std::int64_t>(opts.steps, 0)));
  const float inv_pairs = 1.0f / static_cast<float>(data.size());
  for (std::int64_t step = 0; step < opts.steps; ++step) {
    for (const auto& [name, t] : res.weights.tensors()) Tensor<float>(t).zero_grad();
    Tape<float> tape;
    double loss_value = 0.0;
    {
      TapeScope<float> scope(tape);
      TensorF loss;
      for (const auto& pair : data) {
        TensorF term = scale(l1_loss(model_forward(pair.lr, res.weights, cfg), pair.hr), inv_pairs);
        loss = loss.defined() ? add(loss, term) : term;
      }
      loss_value = loss.item();
      if (!std::isfinite(loss_value)) {
        throw TrainingError(static_cast<std::size_t>(step),
                            "loss became non-finite at step " + std::to_string(step));
      }
      tape.backward(loss);
    }
    res.losses.push_back(loss_value);
    adam.step(res.weights, cosine_lr(step, opts.steps, opts.lr, opts.min_lr));
    if (opts.on_step) opts.on_step(step, loss_value);
  }
  for (const auto& [name, t] : res.weights.tensors()) Tensor<float>(t).set_requires_grad(false);
  return res;
}

TrainPair make_toy_pair(std::int64_t lr_size, std::int64_t scale, std::uint64_t seed) {
  if (lr_size < 1 || scale < 1) throw ConfigError("toy patch needs positive size and scale");
  const std::int64_t hs = lr_size * scale;
  Rng rng(seed);
  struct Wave {
    double fx, fy, phase, amp;
  };
  std::vector<double> hr(static_cast<std::size_t>(3 * hs * hs));
  for (std::int64_t c = 0; c < 3; ++c) {
    std::vector<Wave> waves(4);
    for (auto& wv : waves) {
      wv.fx = rng.uniform(-3.0, 3.0);
      wv.fy = rng.uniform(-3.0, 3.0);
      wv.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
      wv.amp = rng.uniform(0.3, 1.0);
    }
    double lo = 1e300, hi = -1e300;
    for (std::int64_t y = 0; y < hs; ++y) {
      for (std::int64_t x = 0; x < hs; ++x) {
        double v = 0.0;
        for (const auto& wv : waves) {
          const double u = (x + 0.5) / hs, t = (y + 0.5) / hs;
          v += wv.amp * std::sin(2.0 * std::numbers::pi * (wv.fx * u + wv.fy * t) + wv.phase);
        }
        hr[(c * hs + y) * hs + x] = v;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
    for (std::int64_t i = 0; i < hs * hs; ++i) {
      double& v = hr[c * hs * hs + i];
      v = 0.1 + 0.8 * (v - lo) / (hi - lo);
    }
  }
  const auto lr = bicubic_resample(hr, 3, hs, hs, lr_size, lr_size);
  std::vector<float> hrf(hr.begin(), hr.end());
  std::vector<float> lrf(lr.begin(), lr.end());
  return {TensorF({1, 3, lr_size, lr_size}, std::move(lrf)), TensorF({1, 3, hs, hs}, std::move(hrf))};
}

std::vector<double> smooth(const std::vector<double>& values, std::size_t window) {
  std::vector<double> out(values.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    acc += values[i];
    if (i >= window) acc -= values[i - window];
    out[i] = acc / static_cast<double>(std::min(i + 1, window));
  }
  return out;
}

}  // namespace lmlt
