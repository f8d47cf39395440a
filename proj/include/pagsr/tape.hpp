#pragma once

#include <functional>
#include <string>
#include <vector>

#include "pagsr/tensor.hpp"

namespace pagsr {

/// Linear record of differentiable operations, replayed in reverse by
/// backward(). A tape belongs to one thread and is consumed by a single
/// backward pass; call reset() before recording the next forward pass.
template <typename T>
class Tape {
 public:
  using BackwardFn = std::function<void()>;

  struct Node {
    std::string op;
    std::vector<Tensor<T>> inputs;
    Tensor<T> output;
    BackwardFn backward;
  };

  /// Appends an operation. The backward closure reads output.grad() and
  /// accumulates into the grads of those inputs that require grad.
  void record(std::string op, std::vector<Tensor<T>> inputs, Tensor<T> output,
              BackwardFn backward);

  /// Populates gradients of every requires-grad tensor reachable from loss.
  void backward(const Tensor<T>& loss);

  /// Drops all recorded nodes and re-arms the tape.
  void reset();

  std::size_t size() const { return nodes_.size(); }
  bool consumed() const { return consumed_; }
  const std::vector<Node>& nodes() const { return nodes_; }

 private:
  std::vector<Node> nodes_;
  bool consumed_ = false;
};

/// True when an op on these inputs must be recorded.
template <typename T>
bool should_record(const Tape<T>* tape, std::initializer_list<const Tensor<T>*> inputs) {
  if (tape == nullptr) return false;
  for (const Tensor<T>* t : inputs) {
    if (t->requires_grad()) return true;
  }
  return false;
}

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace pagsr
