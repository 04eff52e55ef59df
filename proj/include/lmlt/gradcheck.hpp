#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "lmlt/tensor.hpp"

namespace lmlt {

struct NamedParam {
  std::string name;
  TensorD tensor;
};

struct CheckReport {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::int64_t worst_index = -1;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::int64_t coordinates = 0;
  double tol = 0.0;
  bool pass = true;
};

struct GradcheckOptions {
  double eps = 1e-4;
  double tol = 1e-4;
  /// Called with the analytic gradients (one span per parameter, same order)
  /// before comparison. Used by negative-control tests.
  std::function<void(std::vector<std::vector<double>>&)> tamper;
};

/// rel = |a - n| / max(|a|, |n|, 1e-6)
double relative_error(double analytic, double numeric);

/// Compares tape gradients of `loss()` w.r.t. every element of `params`
/// against central differences (f(p+eps) - f(p-eps)) / 2eps. `loss` must
/// return a (1,1,1,1) tensor computed from the parameter handles. Throws
/// DeterminismError when two evaluations at the same point differ.
CheckReport fd_gradcheck_params(const std::function<TensorD()>& loss, const std::vector<NamedParam>& params,
                                const GradcheckOptions& options = {});

/// Single-input form: f(x) must return a (1,1,1,1) tensor.
CheckReport fd_gradcheck(const std::function<TensorD(const TensorD&)>& f, const TensorD& x, double eps = 1e-4,
                         double tol = 1e-4);

}  // namespace lmlt
