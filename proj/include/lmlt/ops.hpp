#pragma once

#include "lmlt/instrument.hpp"
#include "lmlt/tape.hpp"
#include "lmlt/tensor.hpp"

namespace lmlt {

// Elementwise ops. `b` has the shape of `a`, or n == 1 and is broadcast over
// the batch axis.
template <class T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <class T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <class T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);

template <class T>
Tensor<T> scale(const Tensor<T>& x, T factor);

/// a viewed as (n*c*h, w), b viewed as (n*c*h, w); requires a.w == rows(b).
/// Result shape (1, 1, rows(a), b.w).
template <class T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b, const Probe& probe = {});

/// Batched product over the n*c leading axes; each batch entry is an h x w
/// matrix, optionally transposed. Result (a.n, a.c, rows, cols).
template <class T>
Tensor<T> bmm(const Tensor<T>& a, const Tensor<T>& b, bool trans_a, bool trans_b, const Probe& probe = {});

/// softmax(factor * row) over the last axis, rows = n*c*h.
template <class T>
Tensor<T> softmax_rows(const Tensor<T>& a, T factor);

/// Sum of all elements as a (1,1,1,1) tensor.
template <class T>
Tensor<T> sum(const Tensor<T>& x);

/// mean |a - b| as a (1,1,1,1) tensor; shapes must match.
template <class T>
Tensor<T> l1_loss(const Tensor<T>& a, const Tensor<T>& b);

/// Same elements under a new shape (differentiable).
template <class T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape);

}  // namespace lmlt
