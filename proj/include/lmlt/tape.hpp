#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lmlt/tensor.hpp"

namespace lmlt {

/// Append-only record of differentiable operations.
///
/// Ops record themselves on the tape made active by a TapeScope when at least
/// one input is tracked (a requires_grad leaf, or an output of an op already on
/// this tape). backward() visits nodes in strict reverse insertion order, which
/// is a valid reverse topological order because inputs always precede outputs.
/// Single owner, single thread.
template <class T>
class Tape {
 public:
  /// Receives d(loss)/d(output) and accumulates (+=) into the input gradient
  /// spans. A span is empty when that input needs no gradient.
  using BackwardFn = std::function<void(std::span<const T> grad_out, std::span<const std::span<T>> grad_in)>;

  Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Tape of the innermost live TapeScope on this thread, or nullptr.
  static Tape* active();
  /// The active tape if any of `inputs` is tracked by it, else nullptr.
  static Tape* recording(std::initializer_list<const Tensor<T>*> inputs);
  static Tape* recording(std::span<const Tensor<T>> inputs);

  bool tracks(const Tensor<T>& t) const;
  void record(std::string_view op, std::vector<Tensor<T>> inputs, Tensor<T>& output, BackwardFn fn);

  /// Seeds d(loss)/d(loss) = 1 and propagates. `loss` must be (1,1,1,1) and
  /// recorded on this tape.
  void backward(const Tensor<T>& loss);

  std::size_t size() const { return nodes_.size(); }
  std::string_view op_name(std::size_t node) const { return nodes_.at(node).op; }
  /// Indices of nodes in the order the last backward() visited them.
  const std::vector<std::size_t>& visit_log() const { return visit_log_; }
  std::uint64_t id() const { return id_; }

 private:
  struct Node {
    std::string op;
    std::vector<Tensor<T>> inputs;
    Tensor<T> output;
    BackwardFn fn;
    std::vector<T> grad;
  };

  template <class U>
  friend class TapeScope;

  std::span<T> grad_slot(const Tensor<T>& input);

  std::uint64_t id_;
  std::vector<Node> nodes_;
  std::vector<std::size_t> visit_log_;
  static inline thread_local Tape* active_ = nullptr;
};

/// Makes `tape` the active tape for the current thread until destruction.
template <class T>
class TapeScope {
 public:
  explicit TapeScope(Tape<T>& tape) : previous_(Tape<T>::active_) { Tape<T>::active_ = &tape; }
  ~TapeScope() { Tape<T>::active_ = previous_; }
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape<T>* previous_;
};

/// Runs backward on the active tape.
template <class T>
void backward(const Tensor<T>& loss);

/// Records `out` on the active tape when any input is tracked. `make_fn`
/// builds the BackwardFn and is only invoked when recording.
template <class T, class MakeFn>
void record_if_tracked(std::string_view op, std::vector<Tensor<T>> inputs, Tensor<T>& out, MakeFn&& make_fn) {
  Tape<T>* tape = Tape<T>::recording(std::span<const Tensor<T>>(inputs));
  if (!tape) return;
  tape->record(op, std::move(inputs), out, make_fn());
}

}  // namespace lmlt
