#include "lmlt/ops.hpp"

#include <cmath>
#include <limits>

#include "lmlt/kernels.hpp"

namespace lmlt {

namespace {

enum class Binary { Add, Sub, Mul };

const char* binary_name(Binary op) {
  switch (op) {
    case Binary::Add: return "add";
    case Binary::Sub: return "sub";
    case Binary::Mul: return "mul";
  }
  return "?";
}

template <class T>
Tensor<T> binary(Binary op, const Tensor<T>& a, const Tensor<T>& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  const bool same = sa == sb;
  const bool batch_bcast = !same && sb.n == 1 && sb.c == sa.c && sb.h == sa.h && sb.w == sa.w;
  if (!same && !batch_bcast) {
    throw ShapeError(std::string(binary_name(op)) + ": shapes " + sa.str() + " and " + sb.str() + " do not match");
  }
  const std::int64_t per = sb.numel();
  std::vector<T> out(static_cast<std::size_t>(sa.numel()));
  auto ad = a.data();
  auto bd = b.data();
  for (std::int64_t i = 0; i < sa.numel(); ++i) {
    const T x = ad[i];
    const T y = bd[same ? i : i % per];
    out[i] = op == Binary::Add ? x + y : op == Binary::Sub ? x - y : x * y;
  }
  Tensor<T> result(sa, std::move(out));
  record_if_tracked<T>(binary_name(op), {a, b}, result, [&] {
    return [op, a, b, same, per](std::span<const T> g, std::span<const std::span<T>> gin) {
      const auto ad = a.data();
      const auto bd = b.data();
      for (std::size_t i = 0; i < g.size(); ++i) {
        const std::size_t j = same ? i : i % static_cast<std::size_t>(per);
        if (!gin[0].empty()) gin[0][i] += op == Binary::Mul ? g[i] * bd[j] : g[i];
        if (!gin[1].empty()) {
          gin[1][j] += op == Binary::Mul ? g[i] * ad[i] : op == Binary::Sub ? -g[i] : g[i];
        }
      }
    };
  });
  return result;
}

struct MatDims {
  std::int64_t batch, rows, cols;
};

template <class T>
MatDims mat_dims(const Tensor<T>& t) {
  return {t.shape().n * t.shape().c, t.shape().h, t.shape().w};
}

// out = op(a) * op(b) batched, with operand dims given untransposed.
template <class T>
void run_bmm(std::int64_t batch, std::span<const T> a, std::int64_t ar, std::int64_t ac, bool ta, std::span<const T> b,
             std::int64_t br, std::int64_t bc, bool tb, std::span<T> out, bool accumulate) {
  kernels::BmmGeometry g{batch, ta ? ac : ar, ta ? ar : ac, tb ? br : bc, ta, tb};
  kernels::bmm<T>(exec_mode(), g, a, b, out, accumulate);
}

}  // namespace

template <class T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  return binary(Binary::Add, a, b);
}
template <class T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  return binary(Binary::Sub, a, b);
}
template <class T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  return binary(Binary::Mul, a, b);
}

template <class T>
Tensor<T> scale(const Tensor<T>& x, T factor) {
  std::vector<T> out(x.data().begin(), x.data().end());
  for (T& v : out) v *= factor;
  Tensor<T> result(x.shape(), std::move(out));
  record_if_tracked<T>("scale", {x}, result, [&] {
    return [factor](std::span<const T> g, std::span<const std::span<T>> gin) {
      for (std::size_t i = 0; i < g.size(); ++i) gin[0][i] += factor * g[i];
    };
  });
  return result;
}

template <class T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b, const Probe& probe) {
  const std::int64_t rows = a.shape().n * a.shape().c * a.shape().h;
  const std::int64_t inner = a.shape().w;
  const std::int64_t brows = b.shape().n * b.shape().c * b.shape().h;
  const std::int64_t cols = b.shape().w;
  if (inner != brows) {
    throw ShapeError("matmul: inner dims disagree, " + a.shape().str() + " x " + b.shape().str());
  }
  Tensor<T> a2 = a.shape() == Shape{1, 1, rows, inner} ? a : reshape(a, {1, 1, rows, inner});
  Tensor<T> b2 = b.shape() == Shape{1, 1, inner, cols} ? b : reshape(b, {1, 1, inner, cols});
  return bmm(a2, b2, false, false, probe);
}

template <class T>
Tensor<T> bmm(const Tensor<T>& a, const Tensor<T>& b, bool trans_a, bool trans_b, const Probe& probe) {
  const MatDims da = mat_dims(a);
  const MatDims db = mat_dims(b);
  if (da.batch != db.batch) {
    throw ShapeError("bmm: batch counts differ, " + a.shape().str() + " vs " + b.shape().str());
  }
  const std::int64_t rows = trans_a ? da.cols : da.rows;
  const std::int64_t inner = trans_a ? da.rows : da.cols;
  const std::int64_t inner_b = trans_b ? db.cols : db.rows;
  const std::int64_t cols = trans_b ? db.rows : db.cols;
  if (inner != inner_b) {
    throw ShapeError("bmm: inner dims disagree, " + a.shape().str() + " x " + b.shape().str());
  }
  Shape out_shape{a.shape().n, a.shape().c, rows, cols};
  Tensor<T> result = Tensor<T>::zeros(out_shape);
  run_bmm<T>(da.batch, a.data(), da.rows, da.cols, trans_a, b.data(), db.rows, db.cols, trans_b, result.mutable_data(),
             false);
  probe.add(da.batch * rows * inner * cols, out_shape.numel());

  record_if_tracked<T>("bmm", {a, b}, result, [&] {
    return [a, b, trans_a, trans_b, da, db, rows, cols](std::span<const T> g, std::span<const std::span<T>> gin) {
      const std::int64_t batch = da.batch;
      // dC has untransposed dims (rows, cols).
      if (!gin[0].empty()) {
        if (!trans_a) {
          // dA = dC * op(B)^T
          run_bmm<T>(batch, g, rows, cols, false, b.data(), db.rows, db.cols, !trans_b, gin[0], true);
        } else {
          // dA = op(B) * dC^T
          run_bmm<T>(batch, b.data(), db.rows, db.cols, trans_b, g, rows, cols, true, gin[0], true);
        }
      }
      if (!gin[1].empty()) {
        if (!trans_b) {
          // dB = op(A)^T * dC
          run_bmm<T>(batch, a.data(), da.rows, da.cols, !trans_a, g, rows, cols, false, gin[1], true);
        } else {
          // dB = dC^T * op(A)
          run_bmm<T>(batch, g, rows, cols, true, a.data(), da.rows, da.cols, trans_a, gin[1], true);
        }
      }
    };
  });
  return result;
}

template <class T>
Tensor<T> softmax_rows(const Tensor<T>& a, T factor) {
  const std::int64_t cols = a.shape().w;
  if (cols < 1) throw ShapeError("softmax_rows needs at least one column, got " + a.shape().str());
  const std::int64_t rows = a.numel() / cols;
  std::vector<T> out(static_cast<std::size_t>(a.numel()));
  auto ad = a.data();
  for (std::int64_t r = 0; r < rows; ++r) {
    const T* in = ad.data() + r * cols;
    T* o = out.data() + r * cols;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::int64_t j = 0; j < cols; ++j) mx = std::max(mx, static_cast<double>(factor) * in[j]);
    double total = 0.0;
    std::vector<double> e(static_cast<std::size_t>(cols));
    for (std::int64_t j = 0; j < cols; ++j) {
      e[j] = std::exp(static_cast<double>(factor) * in[j] - mx);
      total += e[j];
    }
    for (std::int64_t j = 0; j < cols; ++j) o[j] = static_cast<T>(e[j] / total);
  }
  Tensor<T> result(a.shape(), std::move(out));
  record_if_tracked<T>("softmax_rows", {a}, result, [&] {
    return [y = result.clone(), rows, cols, factor](std::span<const T> g, std::span<const std::span<T>> gin) {
      auto yd = y.data();
      for (std::int64_t r = 0; r < rows; ++r) {
        double dot = 0.0;
        for (std::int64_t j = 0; j < cols; ++j) dot += static_cast<double>(g[r * cols + j]) * yd[r * cols + j];
        for (std::int64_t j = 0; j < cols; ++j) {
          const std::int64_t i = r * cols + j;
          gin[0][i] += static_cast<T>(factor * yd[i] * (g[i] - dot));
        }
      }
    };
  });
  return result;
}

template <class T>
Tensor<T> sum(const Tensor<T>& x) {
  double total = 0.0;
  for (T v : x.data()) total += v;
  Tensor<T> result = Tensor<T>::scalar(static_cast<T>(total));
  record_if_tracked<T>("sum", {x}, result, [&] {
    return [](std::span<const T> g, std::span<const std::span<T>> gin) {
      for (T& v : gin[0]) v += g[0];
    };
  });
  return result;
}

template <class T>
Tensor<T> l1_loss(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("l1_loss: shapes " + a.shape().str() + " and " + b.shape().str() + " do not match");
  }
  const auto count = static_cast<double>(a.numel());
  double total = 0.0;
  auto ad = a.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < ad.size(); ++i) total += std::abs(static_cast<double>(ad[i]) - bd[i]);
  Tensor<T> result = Tensor<T>::scalar(static_cast<T>(count > 0 ? total / count : 0.0));
  record_if_tracked<T>("l1_loss", {a, b}, result, [&] {
    return [a, b, count](std::span<const T> g, std::span<const std::span<T>> gin) {
      auto ad = a.data();
      auto bd = b.data();
      const double s = g[0] / count;
      for (std::size_t i = 0; i < ad.size(); ++i) {
        const double d = static_cast<double>(ad[i]) - bd[i];
        const double sign = d > 0 ? 1.0 : d < 0 ? -1.0 : 0.0;
        if (!gin[0].empty()) gin[0][i] += static_cast<T>(s * sign);
        if (!gin[1].empty()) gin[1][i] -= static_cast<T>(s * sign);
      }
    };
  });
  return result;
}

template <class T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
  Tensor<T> result = x.reshaped(shape);
  record_if_tracked<T>("reshape", {x}, result, [&] {
    return [](std::span<const T> g, std::span<const std::span<T>> gin) {
      for (std::size_t i = 0; i < g.size(); ++i) gin[0][i] += g[i];
    };
  });
  return result;
}

#define LMLT_INSTANTIATE_OPS(T)                                                             \
  template Tensor<T> add<T>(const Tensor<T>&, const Tensor<T>&);                            \
  template Tensor<T> sub<T>(const Tensor<T>&, const Tensor<T>&);                            \
  template Tensor<T> mul<T>(const Tensor<T>&, const Tensor<T>&);                            \
  template Tensor<T> scale<T>(const Tensor<T>&, T);                                         \
  template Tensor<T> matmul<T>(const Tensor<T>&, const Tensor<T>&, const Probe&);           \
  template Tensor<T> bmm<T>(const Tensor<T>&, const Tensor<T>&, bool, bool, const Probe&);  \
  template Tensor<T> softmax_rows<T>(const Tensor<T>&, T);                                  \
  template Tensor<T> sum<T>(const Tensor<T>&);                                              \
  template Tensor<T> l1_loss<T>(const Tensor<T>&, const Tensor<T>&);                        \
  template Tensor<T> reshape<T>(const Tensor<T>&, Shape);

LMLT_INSTANTIATE_OPS(float)
LMLT_INSTANTIATE_OPS(double)
#undef LMLT_INSTANTIATE_OPS

}  // namespace lmlt
