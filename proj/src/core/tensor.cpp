#include "lmlt/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace lmlt {

std::string Shape::str() const {
  std::ostringstream os;
  os << '(' << n << ',' << c << ',' << h << ',' << w << ')';
  return os.str();
}

std::size_t checked_numel(const Shape& shape) {
  const std::int64_t dims[] = {shape.n, shape.c, shape.h, shape.w};
  std::size_t total = 1;
  for (std::int64_t d : dims) {
    if (d < 0) {
      throw SizeError("negative dimension in shape " + shape.str());
    }
    const auto ud = static_cast<std::size_t>(d);
    if (ud != 0 && total > std::numeric_limits<std::size_t>::max() / ud) {
      throw SizeError("element count of " + shape.str() + " overflows the index range");
    }
    total *= ud;
  }
  if (total > static_cast<std::size_t>(std::numeric_limits<std::int64_t>::max())) {
    throw SizeError("element count of " + shape.str() + " overflows the index range");
  }
  return total;
}

template <class T>
Tensor<T>::Tensor(Shape shape, std::vector<T> data) : impl_(std::make_shared<detail::TensorImpl<T>>()) {
  if (checked_numel(shape) != data.size()) {
    throw ShapeError("data length " + std::to_string(data.size()) + " does not match shape " + shape.str());
  }
  impl_->shape = shape;
  impl_->data = std::move(data);
}

template <class T>
Tensor<T> Tensor<T>::zeros(Shape shape) {
  return Tensor(shape, std::vector<T>(checked_numel(shape), T(0)));
}

template <class T>
Tensor<T> Tensor<T>::full(Shape shape, T value) {
  return Tensor(shape, std::vector<T>(checked_numel(shape), value));
}

template <class T>
const Shape& Tensor<T>::shape() const {
  static const Shape empty{};
  return impl_ ? impl_->shape : empty;
}

template <class T>
std::span<const T> Tensor<T>::data() const {
  if (!impl_) return {};
  return impl_->data;
}

template <class T>
std::span<T> Tensor<T>::mutable_data() {
  if (!impl_) return {};
  return impl_->data;
}

template <class T>
T Tensor<T>::at(std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w) const {
  const Shape& s = shape();
  if (n < 0 || c < 0 || h < 0 || w < 0 || n >= s.n || c >= s.c || h >= s.h || w >= s.w) {
    throw ShapeError("index out of range for shape " + s.str());
  }
  return impl_->data[static_cast<std::size_t>(((n * s.c + c) * s.h + h) * s.w + w)];
}

template <class T>
T Tensor<T>::item() const {
  if (numel() != 1) {
    throw ShapeError("item() on tensor of shape " + shape().str());
  }
  return impl_->data[0];
}

template <class T>
Tensor<T>& Tensor<T>::set_requires_grad(bool on) {
  if (!impl_) throw ShapeError("set_requires_grad on undefined tensor");
  impl_->requires_grad = on;
  return *this;
}

template <class T>
std::span<const T> Tensor<T>::grad() const {
  if (!impl_) return {};
  return impl_->grad;
}

template <class T>
std::span<T> Tensor<T>::mutable_grad() {
  if (!impl_) return {};
  return impl_->grad;
}

template <class T>
void Tensor<T>::zero_grad() {
  if (impl_) impl_->grad.clear();
}

template <class T>
Tensor<T> Tensor<T>::clone() const {
  if (!impl_) return {};
  return Tensor(impl_->shape, impl_->data);
}

template <class T>
Tensor<T> Tensor<T>::reshaped(Shape s) const {
  if (s.numel() != numel()) {
    throw ShapeError("cannot reshape " + shape().str() + " to " + s.str());
  }
  return Tensor(s, impl_->data);
}

template <class T>
std::optional<std::size_t> Tensor<T>::node_on(std::uint64_t tape_id) const {
  if (impl_ && impl_->tape_id != 0 && impl_->tape_id == tape_id) return impl_->node;
  return std::nullopt;
}

template <class T>
Tensor<T> tensor_new(Shape shape, const FillSpec& spec) {
  std::vector<T> data(checked_numel(shape));
  struct Filler {
    std::vector<T>& out;
    void operator()(const fill::Zeros&) const { std::fill(out.begin(), out.end(), T(0)); }
    void operator()(const fill::Ones&) const { std::fill(out.begin(), out.end(), T(1)); }
    void operator()(const fill::Const& f) const { std::fill(out.begin(), out.end(), static_cast<T>(f.value)); }
    void operator()(const fill::Uniform& f) const {
      for (T& v : out) v = static_cast<T>(f.rng->uniform(f.lo, f.hi));
    }
    void operator()(const fill::Normal& f) const {
      for (T& v : out) v = static_cast<T>(f.rng->normal(f.mean, f.stddev));
    }
  };
  std::visit(Filler{data}, spec);
  return Tensor<T>(shape, std::move(data));
}

template <class U, class T>
Tensor<U> cast(const Tensor<T>& t) {
  if (!t.defined()) return {};
  std::vector<U> out(t.data().begin(), t.data().end());
  return Tensor<U>(t.shape(), std::move(out));
}

template <class T>
bool all_finite(std::span<const T> values) {
  for (T v : values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

template class Tensor<float>;
template class Tensor<double>;
template Tensor<float> tensor_new<float>(Shape, const FillSpec&);
template Tensor<double> tensor_new<double>(Shape, const FillSpec&);
template Tensor<float> cast<float, double>(const Tensor<double>&);
template Tensor<double> cast<double, float>(const Tensor<float>&);
template Tensor<float> cast<float, float>(const Tensor<float>&);
template Tensor<double> cast<double, double>(const Tensor<double>&);
template bool all_finite<float>(std::span<const float>);
template bool all_finite<double>(std::span<const double>);

}  // namespace lmlt
