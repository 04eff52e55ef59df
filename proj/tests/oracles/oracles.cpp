#include "oracles/oracles.hpp"

#include <cmath>

namespace lmlt::oracle {

std::int64_t bounce(std::int64_t i, std::int64_t n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * (n - 1) - i;
  }
  return i;
}

std::vector<double> conv2d(const std::vector<double>& x, std::int64_t n, std::int64_t cin, std::int64_t h,
                           std::int64_t w, const std::vector<double>& weight, const std::vector<double>& bias,
                           std::int64_t cout, std::int64_t k, std::int64_t groups) {
  const std::int64_t cpg = cin / groups;
  const std::int64_t opg = cout / groups;
  const std::int64_t p = k / 2;
  std::vector<double> y(static_cast<std::size_t>(n * cout * h * w), 0.0);
  for (std::int64_t b = 0; b < n; ++b)
    for (std::int64_t o = 0; o < cout; ++o)
      for (std::int64_t yy = 0; yy < h; ++yy)
        for (std::int64_t xx = 0; xx < w; ++xx) {
          double acc = bias.empty() ? 0.0 : bias[o];
          const std::int64_t g = o / opg;
          for (std::int64_t cl = 0; cl < cpg; ++cl)
            for (std::int64_t ky = 0; ky < k; ++ky)
              for (std::int64_t kx = 0; kx < k; ++kx) {
                const std::int64_t c = g * cpg + cl;
                const std::int64_t sy = bounce(yy + ky - p, h);
                const std::int64_t sx = bounce(xx + kx - p, w);
                acc += weight[((o * cpg + cl) * k + ky) * k + kx] * x[((b * cin + c) * h + sy) * w + sx];
              }
          y[((b * cout + o) * h + yy) * w + xx] = acc;
        }
  return y;
}

std::vector<double> matmul(const std::vector<double>& a, const std::vector<double>& b, std::int64_t rows,
                           std::int64_t inner, std::int64_t cols) {
  std::vector<double> out(static_cast<std::size_t>(rows * cols), 0.0);
  for (std::int64_t i = 0; i < rows; ++i)
    for (std::int64_t j = 0; j < cols; ++j) {
      long double acc = 0.0L;
      for (std::int64_t t = 0; t < inner; ++t) acc += static_cast<long double>(a[i * inner + t]) * b[t * cols + j];
      out[i * cols + j] = static_cast<double>(acc);
    }
  return out;
}

std::vector<double> softmax(const std::vector<double>& row, double scale) {
  double mx = -INFINITY;
  for (double v : row) mx = std::fmax(mx, scale * v);
  std::vector<double> out(row.size());
  double total = 0.0;
  for (std::size_t i = 0; i < row.size(); ++i) total += out[i] = std::exp(scale * row[i] - mx);
  for (double& v : out) v /= total;
  return out;
}

double gelu(double x) { return 0.5 * x * std::erfc(-x / std::sqrt(2.0)); }

namespace {

std::vector<double> project(const std::vector<double>& x, std::int64_t d, std::int64_t tokens,
                            const std::vector<double>& wm, const std::vector<double>& bv) {
  std::vector<double> out(static_cast<std::size_t>(d * tokens));
  for (std::int64_t o = 0; o < d; ++o)
    for (std::int64_t t = 0; t < tokens; ++t) {
      double acc = bv.empty() ? 0.0 : bv[o];
      for (std::int64_t i = 0; i < d; ++i) acc += wm[o * d + i] * x[i * tokens + t];
      out[o * tokens + t] = acc;
    }
  return out;
}

}  // namespace

std::vector<double> global_attention(const std::vector<double>& x, std::int64_t d, std::int64_t h, std::int64_t w,
                                     const AttentionWeights& p) {
  const std::int64_t tokens = h * w;
  const auto q = project(x, d, tokens, p.wq, p.bq);
  const auto k = project(x, d, tokens, p.wk, p.bk);
  const auto v = project(x, d, tokens, p.wv, p.bv);
  std::vector<double> mixed(static_cast<std::size_t>(d * tokens), 0.0);
  for (std::int64_t t = 0; t < tokens; ++t) {
    std::vector<double> scores(static_cast<std::size_t>(tokens));
    for (std::int64_t u = 0; u < tokens; ++u) {
      double s = 0.0;
      for (std::int64_t c = 0; c < d; ++c) s += q[c * tokens + t] * k[c * tokens + u];
      scores[u] = s;
    }
    const auto a = softmax(scores, 1.0 / std::sqrt(static_cast<double>(d)));
    for (std::int64_t c = 0; c < d; ++c) {
      double acc = 0.0;
      for (std::int64_t u = 0; u < tokens; ++u) acc += a[u] * v[c * tokens + u];
      mixed[c * tokens + t] = acc;
    }
  }
  if (!p.lepe_w.empty()) {
    const auto pe = conv2d(v, 1, d, h, w, p.lepe_w, p.lepe_b, d, 3, d);
    for (std::size_t i = 0; i < mixed.size(); ++i) mixed[i] += pe[i];
  }
  return project(mixed, d, tokens, p.wo, p.bo);
}

namespace {

std::vector<double> gauss_rows_then_cols(const std::vector<double>& x, std::int64_t h, std::int64_t w) {
  double k[11];
  double total = 0.0;
  for (int i = 0; i < 11; ++i) total += k[i] = std::exp(-(i - 5.0) * (i - 5.0) / 4.5);
  for (double& v : k) v /= total;
  // valid-only along each axis: (h - 10) x (w - 10)
  std::vector<double> tmp(static_cast<std::size_t>(h * (w - 10)));
  for (std::int64_t y = 0; y < h; ++y) {
    for (std::int64_t x0 = 0; x0 < w - 10; ++x0) {
      double acc = 0.0;
      for (int i = 0; i < 11; ++i) acc += k[i] * x[y * w + x0 + i];
      tmp[y * (w - 10) + x0] = acc;
    }
  }
  std::vector<double> out(static_cast<std::size_t>((h - 10) * (w - 10)));
  for (std::int64_t y0 = 0; y0 < h - 10; ++y0) {
    for (std::int64_t x0 = 0; x0 < w - 10; ++x0) {
      double acc = 0.0;
      for (int i = 0; i < 11; ++i) acc += k[i] * tmp[(y0 + i) * (w - 10) + x0];
      out[y0 * (w - 10) + x0] = acc;
    }
  }
  return out;
}

}  // namespace

double ssim(const std::vector<double>& a, const std::vector<double>& b, std::int64_t h, std::int64_t w) {
  std::vector<double> aa(a.size()), bb(a.size()), ab(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    aa[i] = a[i] * a[i];
    bb[i] = b[i] * b[i];
    ab[i] = a[i] * b[i];
  }
  const auto mu_a = gauss_rows_then_cols(a, h, w);
  const auto mu_b = gauss_rows_then_cols(b, h, w);
  const auto e_aa = gauss_rows_then_cols(aa, h, w);
  const auto e_bb = gauss_rows_then_cols(bb, h, w);
  const auto e_ab = gauss_rows_then_cols(ab, h, w);
  const double c1 = 6.5025, c2 = 58.5225;
  double total = 0.0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double num = (2 * mu_a[i] * mu_b[i] + c1) * (2 * (e_ab[i] - mu_a[i] * mu_b[i]) + c2);
    const double den = (mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) *
                       (e_aa[i] - mu_a[i] * mu_a[i] + e_bb[i] - mu_b[i] * mu_b[i] + c2);
    total += num / den;
  }
  return total / static_cast<double>(mu_a.size());
}

double central_difference(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x,
                          std::size_t i, double eps) {
  const double orig = x[i];
  x[i] = orig + eps;
  const double fp = f(x);
  x[i] = orig - eps;
  const double fm = f(x);
  return (fp - fm) / (2.0 * eps);
}

}  // namespace lmlt::oracle
