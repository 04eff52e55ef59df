#include <cstdint>

#include "lmlt/kernels.hpp"

namespace lmlt::kernels {
namespace {

// One output row (batch b, row r).
template <class T>
void bmm_row(const BmmGeometry& g, std::int64_t b, std::int64_t r, const T* a, const T* bm, T* out, bool accumulate) {
  const T* ab = a + b * g.rows * g.inner;
  const T* bb = bm + b * g.inner * g.cols;
  T* orow = out + (b * g.rows + r) * g.cols;
  for (std::int64_t c = 0; c < g.cols; ++c) {
    double acc = 0.0;
    for (std::int64_t k = 0; k < g.inner; ++k) {
      const double av = g.trans_a ? ab[k * g.rows + r] : ab[r * g.inner + k];
      const double bv = g.trans_b ? bb[c * g.inner + k] : bb[k * g.cols + c];
      acc += av * bv;
    }
    orow[c] = accumulate ? static_cast<T>(orow[c] + acc) : static_cast<T>(acc);
  }
}

}  // namespace

template <class T>
void bmm(ExecMode mode, const BmmGeometry& g, std::span<const T> a, std::span<const T> b, std::span<T> out,
         bool accumulate) {
  const std::int64_t jobs = g.batch * g.rows;
  if (mode == ExecMode::Parallel) {
#pragma omp parallel for schedule(static)
    for (std::int64_t j = 0; j < jobs; ++j) bmm_row(g, j / g.rows, j % g.rows, a.data(), b.data(), out.data(), accumulate);
  } else {
    for (std::int64_t j = 0; j < jobs; ++j) bmm_row(g, j / g.rows, j % g.rows, a.data(), b.data(), out.data(), accumulate);
  }
}

template void bmm<float>(ExecMode, const BmmGeometry&, std::span<const float>, std::span<const float>,
                         std::span<float>, bool);
template void bmm<double>(ExecMode, const BmmGeometry&, std::span<const double>, std::span<const double>,
                          std::span<double>, bool);

}  // namespace lmlt::kernels
