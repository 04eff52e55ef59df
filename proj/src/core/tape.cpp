#include "lmlt/tape.hpp"

#include <atomic>

namespace lmlt {

namespace {
std::atomic<std::uint64_t> next_tape_id{1};
}

template <class T>
Tape<T>::Tape() : id_(next_tape_id.fetch_add(1)) {}

template <class T>
Tape<T>* Tape<T>::active() {
  return active_;
}

template <class T>
bool Tape<T>::tracks(const Tensor<T>& t) const {
  if (!t.defined()) return false;
  return t.requires_grad() || t.node_on(id_).has_value();
}

template <class T>
Tape<T>* Tape<T>::recording(std::initializer_list<const Tensor<T>*> inputs) {
  Tape* tape = active_;
  if (!tape) return nullptr;
  for (const Tensor<T>* t : inputs) {
    if (t && tape->tracks(*t)) return tape;
  }
  return nullptr;
}

template <class T>
Tape<T>* Tape<T>::recording(std::span<const Tensor<T>> inputs) {
  Tape* tape = active_;
  if (!tape) return nullptr;
  for (const Tensor<T>& t : inputs) {
    if (tape->tracks(t)) return tape;
  }
  return nullptr;
}

template <class T>
void Tape<T>::record(std::string_view op, std::vector<Tensor<T>> inputs, Tensor<T>& output, BackwardFn fn) {
  if (!output.defined()) throw ShapeError("recording an undefined output");
  if (output.impl_->tape_id != 0) throw ShapeError("output of '" + std::string(op) + "' already recorded");
  output.impl_->tape_id = id_;
  output.impl_->node = nodes_.size();
  nodes_.push_back(Node{std::string(op), std::move(inputs), output, std::move(fn), {}});
}

template <class T>
std::span<T> Tape<T>::grad_slot(const Tensor<T>& input) {
  if (!input.defined()) return {};
  if (auto node = input.node_on(id_)) {
    auto& g = nodes_[*node].grad;
    if (g.empty()) g.assign(static_cast<std::size_t>(input.numel()), T(0));
    return g;
  }
  if (input.requires_grad()) {
    auto& g = input.impl_->grad;
    if (g.empty()) g.assign(static_cast<std::size_t>(input.numel()), T(0));
    return g;
  }
  return {};
}

template <class T>
void Tape<T>::backward(const Tensor<T>& loss) {
  if (loss.shape() != Shape{1, 1, 1, 1}) {
    throw ShapeError("backward needs a scalar (1,1,1,1) loss, got " + loss.shape().str());
  }
  if (nodes_.empty()) throw ShapeError("backward on an empty tape");
  const auto root = loss.node_on(id_);
  if (!root) throw ShapeError("loss was not recorded on this tape");

  visit_log_.clear();
  nodes_[*root].grad.assign(1, T(1));
  std::vector<std::span<T>> slots;
  for (std::size_t i = nodes_.size(); i-- > 0;) {
    Node& node = nodes_[i];
    if (node.grad.empty()) continue;
    visit_log_.push_back(i);
    slots.clear();
    for (const Tensor<T>& in : node.inputs) slots.push_back(grad_slot(in));
    node.fn(std::span<const T>(node.grad), std::span<const std::span<T>>(slots));
    node.grad.clear();
    node.grad.shrink_to_fit();
  }
}

template <class T>
void backward(const Tensor<T>& loss) {
  Tape<T>* tape = Tape<T>::active();
  if (!tape) throw ShapeError("backward without an active tape");
  tape->backward(loss);
}

template class Tape<float>;
template class Tape<double>;
template void backward<float>(const Tensor<float>&);
template void backward<double>(const Tensor<double>&);

}  // namespace lmlt
