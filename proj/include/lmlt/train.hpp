#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "lmlt/config.hpp"
#include "lmlt/weights.hpp"

namespace lmlt {

struct TrainPair {
  TensorF lr;  // (1, 3, h, w)
  TensorF hr;  // (1, 3, s h, s w)
};

struct TrainOptions {
  std::int64_t steps = 2000;
  double lr = 1e-3;
  double min_lr = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double eps = 1e-8;
  std::uint64_t seed = 0;
  /// Called after every step with (step, loss before the update).
  std::function<void(std::int64_t, double)> on_step;
};

struct TrainResult {
  WeightStoreF weights;
  std::vector<double> losses;  // one per step, measured before that step's update
};

/// floor + (lr - floor) (1 + cos(pi t / steps)) / 2 with floor = min(lr, min_lr).
double cosine_lr(std::int64_t step, std::int64_t steps, double lr, double min_lr);

/// Adam on a set of named float tensors; moments kept in double.
class Adam {
 public:
  Adam(double beta1, double beta2, double eps) : beta1_(beta1), beta2_(beta2), eps_(eps) {}
  void step(WeightStoreF& ws, double lr);
  std::int64_t steps_taken() const { return t_; }

 private:
  double beta1_, beta2_, eps_;
  std::int64_t t_ = 0;
  std::map<std::string, std::vector<double>> m_, v_;
};

/// Mean over pairs of the mean-L1 loss between model output and HR target.
/// Weights start from init_weights(cfg, opts.seed). Throws TrainingError on a
/// non-finite loss.
TrainResult train_toy(const ModelConfig& cfg, const std::vector<TrainPair>& data, const TrainOptions& opts);

/// Smooth synthetic HR patch (hr_size x hr_size, values in [0.1, 0.9]) and its
/// bicubic downscale by cfg.scale.
TrainPair make_toy_pair(std::int64_t lr_size, std::int64_t scale, std::uint64_t seed);

/// Trailing moving average over `window` entries (shorter near the start).
std::vector<double> smooth(const std::vector<double>& values, std::size_t window);

}  // namespace lmlt
