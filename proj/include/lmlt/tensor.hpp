#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "lmlt/error.hpp"
#include "lmlt/rng.hpp"

namespace lmlt {

/// NCHW extents.
struct Shape {
  std::int64_t n = 0;
  std::int64_t c = 0;
  std::int64_t h = 0;
  std::int64_t w = 0;

  std::int64_t numel() const { return n * c * h * w; }
  std::int64_t plane() const { return h * w; }
  std::string str() const;

  friend bool operator==(const Shape&, const Shape&) = default;
};

/// n*c*h*w with overflow and sign checks; throws SizeError.
std::size_t checked_numel(const Shape& shape);

template <class T>
class Tape;

namespace detail {

template <class T>
struct TensorImpl {
  Shape shape;
  std::vector<T> data;
  bool requires_grad = false;
  std::vector<T> grad;  // empty when absent
  std::uint64_t tape_id = 0;  // 0: not produced by a recorded op
  std::size_t node = 0;
};

}  // namespace detail

/// Handle to an NCHW array.
///
/// Copies are shallow: they share storage, gradient buffer and tape linkage,
/// which is what lets a parameter held in a WeightStore receive the gradient
/// of a graph that used a copy of it. Data is not modified after construction
/// except through mutable_data(), which callers use only on tensors they own
/// exclusively (freshly built outputs, optimizer updates between steps).
template <class T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  Tensor(Shape shape, std::vector<T> data);

  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, T value);
  static Tensor scalar(T value) { return full({1, 1, 1, 1}, value); }

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const;
  std::int64_t numel() const { return shape().numel(); }

  std::span<const T> data() const;
  std::span<T> mutable_data();
  T at(std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w) const;
  /// Value of a single-element tensor.
  T item() const;

  bool requires_grad() const { return impl_ && impl_->requires_grad; }
  Tensor& set_requires_grad(bool on = true);
  bool has_grad() const { return impl_ && !impl_->grad.empty(); }
  std::span<const T> grad() const;
  std::span<T> mutable_grad();
  void zero_grad();

  /// Deep copy of the data only (no gradient, no tape linkage).
  Tensor clone() const;
  /// Same data under a different shape with equal element count (deep copy).
  Tensor reshaped(Shape shape) const;

  std::optional<std::size_t> node_on(std::uint64_t tape_id) const;
  bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }

 private:
  friend class Tape<T>;
  std::shared_ptr<detail::TensorImpl<T>> impl_;
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

namespace fill {
struct Zeros {};
struct Ones {};
struct Const {
  double value;
};
struct Uniform {
  Rng* rng;
  double lo;
  double hi;
};
struct Normal {
  Rng* rng;
  double mean;
  double stddev;
};
}  // namespace fill

using FillSpec = std::variant<fill::Zeros, fill::Ones, fill::Const, fill::Uniform, fill::Normal>;

/// New tensor filled per `spec`; random fills consume the stream in flat NCHW order.
template <class T>
Tensor<T> tensor_new(Shape shape, const FillSpec& spec);

template <class U, class T>
Tensor<U> cast(const Tensor<T>& t);

/// True when every element is finite.
template <class T>
bool all_finite(std::span<const T> values);

}  // namespace lmlt
