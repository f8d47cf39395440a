#include "pagsr/tape.hpp"

namespace pagsr {

template <typename T>
void Tape<T>::record(std::string op, std::vector<Tensor<T>> inputs, Tensor<T> output,
                     BackwardFn backward) {
  if (consumed_) {
    throw AutogradError("recording '" + op + "' on a consumed tape; call reset() first");
  }
  output.set_requires_grad(true);
  nodes_.push_back(Node{std::move(op), std::move(inputs), std::move(output),
                        std::move(backward)});
}

template <typename T>
void Tape<T>::backward(const Tensor<T>& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw AutogradError("backward requires a scalar loss, got shape " +
                        (loss.defined() ? loss.shape().str() : std::string("<undefined>")));
  }
  if (consumed_) {
    throw AutogradError("backward called twice on the same tape without reset()");
  }
  if (!loss.requires_grad()) {
    throw AutogradError("loss does not depend on any tensor that requires grad");
  }
  consumed_ = true;
  loss.ensure_grad()[0] = T(1);
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    // Nodes not connected to the loss see a zero output gradient, which is
    // harmless; allocating it keeps every backward rule branch-free.
    it->output.ensure_grad();
    it->backward();
  }
}

template <typename T>
void Tape<T>::reset() {
  nodes_.clear();
  consumed_ = false;
}

template class Tape<float>;
template class Tape<double>;

}  // namespace pagsr
