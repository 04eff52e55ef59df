#pragma once

#include <cmath>
#include <vector>

#include "lmlt/rng.hpp"
#include "lmlt/tensor.hpp"

namespace test {

inline lmlt::TensorD random_d(lmlt::Shape s, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  lmlt::Rng rng(seed);
  return lmlt::tensor_new<double>(s, lmlt::fill::Uniform{&rng, lo, hi});
}

inline lmlt::TensorF random_f(lmlt::Shape s, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  lmlt::Rng rng(seed);
  return lmlt::tensor_new<float>(s, lmlt::fill::Uniform{&rng, lo, hi});
}

template <class T>
std::vector<double> as_double(const lmlt::Tensor<T>& t) {
  return std::vector<double>(t.data().begin(), t.data().end());
}

template <class T>
std::vector<T> as_vec(const lmlt::Tensor<T>& t) {
  return std::vector<T>(t.data().begin(), t.data().end());
}

template <class T>
std::vector<double> as_double_grad(const lmlt::Tensor<T>& t) {
  return std::vector<double>(t.grad().begin(), t.grad().end());
}

inline double max_rel_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double denom = std::fmax(std::fmax(std::fabs(a[i]), std::fabs(b[i])), 1e-12);
    worst = std::fmax(worst, std::fabs(a[i] - b[i]) / denom);
  }
  return worst;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::fmax(worst, std::fabs(a[i] - b[i]));
  return worst;
}

}  // namespace test
